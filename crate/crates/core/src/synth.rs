//! Seeded synthetic instances for tests, benchmarks and the CLI's reference
//! regeneration.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::model::{gram_of, Group, GramSet, GroupedDataset};

pub use rand::SeedableRng;

pub type SynthRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SynthRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sample_normal(rng: &mut SynthRng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_matrix(rng: &mut SynthRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| sample_normal(rng))
}

/// Uniform direction on the unit sphere.
pub fn random_unit(rng: &mut SynthRng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| sample_normal(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Uniform point on the probability simplex.
pub fn random_simplex(rng: &mut SynthRng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Point on the simplex with every entry at least `margin`.
pub fn random_interior_simplex(rng: &mut SynthRng, k: usize, margin: f64) -> Vec<f64> {
    random_simplex(rng, k)
        .into_iter()
        .map(|x| margin + (1.0 - k as f64 * margin) * x)
        .collect()
}

/// `k` Wishart-like Grams of dimension `n`, each from `n + 2` Gaussian rows
/// mixed by a group-specific matrix so the groups disagree on direction.
pub fn random_gram_set(rng: &mut SynthRng, k: usize, n: usize) -> GramSet {
    let grams = (0..k)
        .map(|_| {
            let mixing = normal_matrix(rng, n, n) / (n as f64).sqrt();
            let scale: f64 = rng.random_range(0.5..2.0);
            let rows = normal_matrix(rng, n + 2, n) * mixing * scale / ((n + 2) as f64).sqrt();
            gram_of(&rows)
        })
        .collect();
    GramSet::from_grams(grams).expect("synthetic Grams are symmetric")
}

/// `k` groups of `rows × n` Gaussian samples with group-specific covariance,
/// each centered on its own mean.
pub fn gaussian_groups(rng: &mut SynthRng, k: usize, rows: &[usize], n: usize) -> GroupedDataset {
    assert_eq!(rows.len(), k);
    let groups = rows
        .iter()
        .enumerate()
        .map(|(g, &m)| {
            let mixing = normal_matrix(rng, n, n) / (n as f64).sqrt();
            let shift = DVector::from_fn(n, |_, _| sample_normal(rng));
            let mut data = normal_matrix(rng, m, n) * mixing;
            for mut row in data.row_iter_mut() {
                row += shift.transpose();
            }
            Group {
                label: format!("g{g}"),
                data,
            }
        })
        .collect();
    let mut ds = GroupedDataset::unnamed(groups).expect("consistent synthetic shapes");
    ds.center_groups();
    ds
}

/// `S₁ = diag(2, 1)` and `S₂ = S₁` rotated by 45°; the fair optimum is the
/// 22.5° bisector with value `sin²(22.5°)`.
pub fn rotated_instance() -> GramSet {
    GramSet::from_grams(vec![
        DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
        DMatrix::from_row_slice(2, 2, &[1.5, 0.5, 0.5, 1.5]),
    ])
    .expect("fixed instance")
}

/// Zero-mean data whose per-group Grams are exactly the rotated instance.
pub fn rotated_rows() -> [DMatrix<f64>; 2] {
    let r = 0.5f64.sqrt();
    [
        DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, r, 0.0, -r]),
        DMatrix::from_row_slice(4, 2, &[r, r, -r, -r, 0.5, -0.5, -0.5, 0.5]),
    ]
}
