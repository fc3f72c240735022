//! Brute-force minimizers of `max_i h_i(v)` over the unit sphere.
//!
//! These never touch the dual or any eigensolver beyond the cached `s_i`, so
//! they stay independent of the solvers they are used to check.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::eig::rayleigh;
use crate::error::{FairPcError, Result};
use crate::model::GramSet;

fn objective(gram_set: &GramSet, v: &DVector<f64>) -> f64 {
    gram_set
        .grams()
        .iter()
        .zip(gram_set.top_eigenvalues())
        .map(|(s, &top)| top - rayleigh(s, v))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sweeps `θ = π·j/steps`, `j = 0..steps`, with `v = (cos θ, sin θ)`.
pub fn grid_oracle_2d(gram_set: &GramSet, steps: usize) -> Result<(f64, DVector<f64>)> {
    if gram_set.n() != 2 {
        return Err(FairPcError::LengthMismatch {
            expected: 2,
            found: gram_set.n(),
        });
    }
    if steps < 1000 {
        return Err(FairPcError::OutOfRange {
            what: "steps",
            value: steps,
            min: 1000,
            max: usize::MAX,
        });
    }
    let mut best = (f64::INFINITY, DVector::from_column_slice(&[1.0, 0.0]));
    for j in 0..steps {
        let theta = std::f64::consts::PI * j as f64 / steps as f64;
        let v = DVector::from_column_slice(&[theta.cos(), theta.sin()]);
        let z = objective(gram_set, &v);
        if z < best.0 {
            best = (z, v);
        }
    }
    Ok(best)
}

/// Best of `samples` seeded uniform directions, then a compass search on the
/// sphere with step halving for `refine_iters` rounds.
///
/// The search polls tangent directions built from coordinate axes and their
/// pairwise sums and differences; the objective has kinks along group
/// crossovers, so no derivative is used. The returned value is attained by
/// the returned vector and is therefore an upper bound on the optimum.
pub fn random_oracle(gram_set: &GramSet, samples: usize, refine_iters: usize, seed: u64) -> Result<(f64, DVector<f64>)> {
    let n = gram_set.n();
    if n < 2 {
        return Err(FairPcError::OutOfRange {
            what: "dimension",
            value: n,
            min: 2,
            max: usize::MAX,
        });
    }
    if samples < 10_000 {
        return Err(FairPcError::OutOfRange {
            what: "samples",
            value: samples,
            min: 10_000,
            max: usize::MAX,
        });
    }
    let (mut best_z, mut best_v) = best_sample(gram_set, samples, seed);

    let mut polls = Vec::new();
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        polls.push(e);
        for j in (i + 1)..n {
            for sign in [1.0, -1.0] {
                let mut d = DVector::zeros(n);
                d[i] = 1.0;
                d[j] = sign;
                polls.push(d / 2f64.sqrt());
            }
        }
    }

    let mut step = 0.1;
    for _ in 0..refine_iters {
        if step < 1e-15 {
            break;
        }
        let mut improved = false;
        for d in &polls {
            let tangent = d - &best_v * best_v.dot(d);
            if tangent.norm() < 1e-12 {
                continue;
            }
            let tangent = tangent.normalize();
            for sign in [1.0, -1.0] {
                let candidate = (&best_v + &tangent * (sign * step)).normalize();
                let z = objective(gram_set, &candidate);
                if z < best_z {
                    best_z = z;
                    best_v = candidate;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((best_z, best_v))
}

fn best_sample(gram_set: &GramSet, samples: usize, seed: u64) -> (f64, DVector<f64>) {
    let n = gram_set.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::INFINITY, DVector::zeros(n));
    for _ in 0..samples {
        let raw = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm: f64 = raw.norm();
        if norm == 0.0 {
            continue;
        }
        let v = raw / norm;
        let z = objective(gram_set, &v);
        if z < best.0 {
            best = (z, v);
        }
    }
    best
}
