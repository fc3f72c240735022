//! Local descent on the primal `max_i h_i(v)` over the unit sphere.
//!
//! When the top eigenvalue of `A(μ)` is nearly repeated at the final weights,
//! the leading eigenvector is an arbitrary member of that eigenspace and can
//! be a poor primal point. This refines it with the linearization method for
//! finite minimax problems: each step linearizes every `h_i` in the tangent
//! space, solves the small simplex QP dual to the proximal model, and retracts
//! onto the sphere.

use nalgebra::{DMatrix, DVector};

use crate::model::GramSet;

const MAX_STEPS: usize = 2000;
const MAX_HALVINGS: usize = 60;
const QP_MAX_ITER: usize = 10_000;
/// Fraction of the model decrease a step must realize.
const SUFFICIENT_DECREASE: f64 = 0.1;
const STATIONARY: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct Polished {
    pub v: DVector<f64>,
    pub z: f64,
    pub steps: usize,
}

struct Linearization {
    h: Vec<f64>,
    z: f64,
    /// Tangent gradients of `h_i`, one column per group.
    grads: DMatrix<f64>,
    gram: DMatrix<f64>,
}

fn linearize(gram_set: &GramSet, v: &DVector<f64>) -> Linearization {
    let k = gram_set.k();
    let mut h = Vec::with_capacity(k);
    let mut grads = DMatrix::zeros(v.len(), k);
    for (i, (s, &top)) in gram_set.grams().iter().zip(gram_set.top_eigenvalues()).enumerate() {
        let sv = s * v;
        let r = sv.dot(v);
        h.push(top - r);
        grads.set_column(i, &((v * r - sv) * 2.0));
    }
    let z = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gram = grads.transpose() * &grads;
    Linearization { h, z, grads, gram }
}

fn max_h(gram_set: &GramSet, v: &DVector<f64>) -> f64 {
    gram_set
        .grams()
        .iter()
        .zip(gram_set.top_eigenvalues())
        .map(|(s, &top)| top - (s * v).dot(v))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Maximizes `wᵀh − (α/2) wᵀQw` over the simplex by pairwise Frank-Wolfe
/// with exact line search.
fn simplex_qp(h: &[f64], q: &DMatrix<f64>, alpha: f64) -> Vec<f64> {
    let k = h.len();
    let start = (0..k).fold(0, |best, i| if h[i] > h[best] { i } else { best });
    let mut w = vec![0.0; k];
    w[start] = 1.0;
    let mut qw: Vec<f64> = (0..k).map(|i| q[(i, start)]).collect();
    let scale = 1.0 + h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for _ in 0..QP_MAX_ITER {
        let grad: Vec<f64> = (0..k).map(|i| h[i] - alpha * qw[i]).collect();
        let toward = (0..k).fold(0, |best, i| if grad[i] > grad[best] { i } else { best });
        let away = (0..k)
            .filter(|&i| w[i] > 0.0)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if grad[b] <= grad[i] => Some(b),
                _ => Some(i),
            })
            .expect("weights stay on the simplex");
        let gap = grad[toward] - grad[away];
        if toward == away || gap <= 1e-15 * scale {
            break;
        }
        let curvature = alpha * (q[(toward, toward)] - 2.0 * q[(toward, away)] + q[(away, away)]);
        let step = if curvature > 0.0 {
            (gap / curvature).min(w[away])
        } else {
            w[away]
        };
        w[toward] += step;
        w[away] -= step;
        if w[away] < 1e-300 {
            w[away] = 0.0;
        }
        for (i, x) in qw.iter_mut().enumerate() {
            *x += step * (q[(i, toward)] - q[(i, away)]);
        }
    }
    w
}

/// Descends from `start`, a unit vector. Returns the best point visited.
pub(crate) fn polish(gram_set: &GramSet, start: &DVector<f64>) -> Polished {
    let mut v = start.clone();
    let mut lin = linearize(gram_set, &v);
    let top = gram_set.top_eigenvalues().iter().copied().fold(0.0f64, f64::max);
    let mut alpha = if top > 0.0 { 0.5 / top } else { 1.0 };
    let mut steps = 0;

    'outer: while steps < MAX_STEPS {
        for _ in 0..MAX_HALVINGS {
            let w = simplex_qp(&lin.h, &lin.gram, alpha);
            let d = &lin.grads * DVector::from_vec(w) * (-alpha);
            let model = (0..lin.h.len())
                .map(|i| lin.h[i] + lin.grads.column(i).dot(&d))
                .fold(f64::NEG_INFINITY, f64::max);
            let predicted = lin.z - model;
            if !(predicted > STATIONARY * lin.z.abs().max(1.0)) {
                break 'outer;
            }
            let mut trial = &v + &d;
            trial.normalize_mut();
            let z = max_h(gram_set, &trial);
            if z <= lin.z - SUFFICIENT_DECREASE * predicted {
                v = trial;
                lin = linearize(gram_set, &v);
                alpha *= 2.0;
                steps += 1;
                continue 'outer;
            }
            alpha *= 0.5;
        }
        break;
    }
    Polished { v, z: lin.z, steps }
}

/// Leading eigenvectors of `A(μ)` spanning the candidate subspace.
const START_SPAN: usize = 3;
/// Candidate directions sampled in that subspace.
const START_SAMPLES: usize = 64;
/// Best candidates polished in addition to the given start.
const POLISHED_STARTS: usize = 4;

/// Unit vectors spread over a hemisphere of `R^m`, `m ≤ 3`.
fn hemisphere(m: usize, count: usize) -> Vec<DVector<f64>> {
    match m {
        2 => (0..count)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / count as f64;
                DVector::from_column_slice(&[t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            // Fibonacci lattice on the upper half sphere.
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    DVector::from_column_slice(&[z, r * phi.cos(), r * phi.sin()])
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

/// Polishes `start` and the most promising directions in the span of the
/// leading eigenvectors `basis` (columns, nonincreasing eigenvalue).
pub(crate) fn polish_from_eigenspace(gram_set: &GramSet, start: &DVector<f64>, basis: &DMatrix<f64>) -> Polished {
    let m = START_SPAN.min(basis.ncols());
    let span = basis.columns(0, m);
    let mut candidates: Vec<(f64, DVector<f64>)> = hemisphere(m, START_SAMPLES)
        .into_iter()
        .map(|c| {
            let mut v = &span * c;
            v.normalize_mut();
            (max_h(gram_set, &v), v)
        })
        .collect();
    // Stable sort keeps lattice order among ties.
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best = polish(gram_set, start);
    for (_, v) in candidates.into_iter().take(POLISHED_STARTS) {
        let p = polish(gram_set, &v);
        if p.z < best.z {
            best = Polished {
                steps: best.steps + p.steps,
                ..p
            };
        } else {
            best.steps += p.steps;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn reaches_rotated_optimum_from_an_axis() {
        let start = DVector::from_column_slice(&[1.0, 0.0]);
        let p = polish(&rotated(), &start);
        assert!((p.z - rotated_optimum()).abs() < 1e-9, "z = {}", p.z);
        let angle = p.v[1].atan2(p.v[0]).to_degrees();
        assert!((angle.abs() - 22.5).abs() < 1e-4, "angle {angle}");
    }

    #[test]
    fn never_worsens_the_start() {
        let gs = three_group();
        let x = 1.0 / 3f64.sqrt();
        let start = DVector::from_element(3, x);
        let p = polish(&gs, &start);
        assert!(p.z <= 1.0 + 1e-15);
        assert_eq!(p.steps, 0);
    }

    #[test]
    fn simplex_qp_matches_closed_form() {
        // Two groups with orthogonal unit gradients: optimum w = ((1 + Δ/α)/2, ...).
        let q = DMatrix::identity(2, 2);
        let w = simplex_qp(&[1.0, 0.9], &q, 1.0);
        assert!((w[0] - 0.55).abs() < 1e-12 && (w[1] - 0.45).abs() < 1e-12, "{w:?}");
    }
}
