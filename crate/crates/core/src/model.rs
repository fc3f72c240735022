//! Grouped data, per-group Gram matrices, and the solver output types.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::eig::{self, canonical_sign, rayleigh};
use crate::error::{FairPcError, Result};

/// Tolerance on `‖v‖₂ = 1` accepted by every operation taking a direction.
pub const UNIT_TOL: f64 = 1e-10;

/// Slack below zero tolerated on dual weights before they are rejected.
const WEIGHT_NEG_SLACK: f64 = 1e-12;
const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub label: String,
    /// `m_i × n`, one row per sample.
    pub data: DMatrix<f64>,
}

/// Row-partitioned data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    groups: Vec<Group>,
    feature_names: Vec<String>,
}

impl GroupedDataset {
    pub fn new(groups: Vec<Group>, feature_names: Vec<String>) -> Result<Self> {
        let first = groups.first().ok_or(FairPcError::NoGroups)?;
        let n = first.data.ncols();
        for g in &groups {
            if g.data.ncols() != n {
                return Err(FairPcError::DimensionMismatch {
                    group: g.label.clone(),
                    expected: n,
                    found: g.data.ncols(),
                });
            }
            if g.data.nrows() == 0 {
                return Err(FairPcError::EmptyGroup(g.label.clone()));
            }
        }
        if feature_names.len() != n {
            return Err(FairPcError::FeatureNames {
                expected: n,
                found: feature_names.len(),
            });
        }
        Ok(Self {
            groups,
            feature_names,
        })
    }

    /// Names features `x0, x1, …`.
    pub fn unnamed(groups: Vec<Group>) -> Result<Self> {
        let n = groups.first().map_or(0, |g| g.data.ncols());
        Self::new(groups, (0..n).map(|j| format!("x{j}")).collect())
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub(crate) fn groups_mut(&mut self) -> &mut [Group] {
        &mut self.groups
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.label.clone()).collect()
    }

    pub fn n(&self) -> usize {
        self.feature_names.len()
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn total_rows(&self) -> usize {
        self.groups.iter().map(|g| g.data.nrows()).sum()
    }

    /// Subtracts each group's column means from that group.
    pub fn center_groups(&mut self) {
        for g in &mut self.groups {
            let m = g.data.nrows() as f64;
            for mut col in g.data.column_iter_mut() {
                let mean = col.sum() / m;
                col.add_scalar_mut(-mean);
            }
        }
    }
}

/// Per-group Gram matrices `S_i = A_iᵀA_i` with cached leading eigenvalues
/// `s_i` and traces.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSet {
    grams: Vec<DMatrix<f64>>,
    top_eigenvalues: Vec<f64>,
    traces: Vec<f64>,
    n: usize,
}

impl GramSet {
    /// Validates and caches spectra. Each matrix is symmetrized.
    pub fn from_grams(grams: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = grams.first().ok_or(FairPcError::NoGroups)?.nrows();
        for (i, s) in grams.iter().enumerate() {
            if s.nrows() != s.ncols() {
                return Err(FairPcError::NotSquare {
                    rows: s.nrows(),
                    cols: s.ncols(),
                });
            }
            if s.nrows() != n {
                return Err(FairPcError::DimensionMismatch {
                    group: format!("#{i}"),
                    expected: n,
                    found: s.nrows(),
                });
            }
            let asymmetry = eig::relative_asymmetry(s);
            if asymmetry > 1e-10 {
                return Err(FairPcError::NotSymmetric { asymmetry });
            }
        }
        let grams: Vec<_> = grams.into_iter().map(symmetrize).collect();
        let top_eigenvalues = grams
            .par_iter()
            .map(|s| eig::leading_eigenpair(s, eig::DEFAULT_TOL, eig::DEFAULT_MAX_ITER).map(|e| e.value))
            .collect::<Result<Vec<_>>>()?;
        let traces = grams.iter().map(|s| s.trace()).collect();
        Ok(Self {
            grams,
            top_eigenvalues,
            traces,
            n,
        })
    }

    pub fn grams(&self) -> &[DMatrix<f64>] {
        &self.grams
    }

    pub fn gram(&self, i: usize) -> &DMatrix<f64> {
        &self.grams[i]
    }

    /// `s_i = λ_max(S_i)`.
    pub fn top_eigenvalues(&self) -> &[f64] {
        &self.top_eigenvalues
    }

    pub fn traces(&self) -> &[f64] {
        &self.traces
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.grams.len()
    }

    /// `Σ_i w_i S_i`.
    pub fn weighted_sum(&self, weights: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (s, &w) in self.grams.iter().zip(weights) {
            if w != 0.0 {
                out.zip_apply(s, |acc, x| *acc += w * x);
            }
        }
        out
    }

    /// Unweighted sum of all group Grams.
    pub fn pooled(&self) -> DMatrix<f64> {
        self.weighted_sum(&vec![1.0; self.k()])
    }

    /// Same Grams multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_grams(self.grams.iter().map(|s| s * factor).collect())
    }

    /// Count of eigenvalues above `1e-9 · s_i`, per group.
    pub fn estimated_ranks(&self) -> Result<Vec<usize>> {
        self.grams
            .iter()
            .zip(&self.top_eigenvalues)
            .map(|(s, &top)| {
                let spectrum = eig::symmetric_eigen(s, eig::DEFAULT_TOL, eig::DEFAULT_MAX_ITER)?;
                Ok(spectrum.values.iter().filter(|&&x| top > 0.0 && x > 1e-9 * top).count())
            })
            .collect()
    }
}

fn symmetrize(s: DMatrix<f64>) -> DMatrix<f64> {
    let t = s.transpose();
    (s + t) * 0.5
}

/// `S_i = A_iᵀA_i` for every group. Groups are processed in parallel; each
/// product has a fixed summation order so the result does not depend on the
/// thread count.
pub fn build_gram_set(dataset: &GroupedDataset) -> Result<GramSet> {
    let n = dataset.n();
    for g in dataset.groups() {
        if g.data.ncols() != n {
            return Err(FairPcError::DimensionMismatch {
                group: g.label.clone(),
                expected: n,
                found: g.data.ncols(),
            });
        }
    }
    let grams = dataset
        .groups()
        .par_iter()
        .map(|g| gram_of(&g.data))
        .collect();
    GramSet::from_grams(grams)
}

/// `AᵀA`, accumulated row by row.
pub fn gram_of(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    let mut s = DMatrix::zeros(n, n);
    for row in a.row_iter() {
        for i in 0..n {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..n {
                s[(i, j)] += ri * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            s[(i, j)] = s[(j, i)];
        }
    }
    s
}

pub(crate) fn check_unit(v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(FairPcError::LengthMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let norm = v.norm();
    if !((norm - 1.0).abs() <= UNIT_TOL) {
        return Err(FairPcError::NotUnit { norm });
    }
    Ok(())
}

/// Projects every Gram onto the orthogonal complement of `v`:
/// `S_i ← (I − vvᵀ) S_i (I − vvᵀ)`, symmetrized, with spectra recomputed.
pub fn deflate(gram_set: &GramSet, v: &DVector<f64>) -> Result<GramSet> {
    check_unit(v, gram_set.n())?;
    let grams = gram_set
        .grams()
        .iter()
        .map(|s| {
            let sv = s * v;
            let vsv = sv.dot(v);
            // (I - vvᵀ) S (I - vvᵀ) = S - (Sv)vᵀ - v(Sv)ᵀ + (vᵀSv) vvᵀ
            let mut out = s.clone();
            out.ger(-1.0, &sv, v, 1.0);
            out.ger(-1.0, v, &sv, 1.0);
            out.ger(vsv, v, v, 1.0);
            symmetrize(out)
        })
        .collect();
    GramSet::from_grams(grams)
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DualWeights(Vec<f64>);

impl DualWeights {
    /// Clamps entries in `[-1e-12, 0)` to zero; rejects anything further off
    /// the simplex.
    pub fn new(mut mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(FairPcError::InvalidWeights("empty weight vector".into()));
        }
        for x in &mut mu {
            if !x.is_finite() || *x < -WEIGHT_NEG_SLACK {
                return Err(FairPcError::InvalidWeights(format!("entry {x} is negative or not finite")));
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let sum: f64 = mu.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(FairPcError::InvalidWeights(format!("entries sum to {sum}")));
        }
        Ok(Self(mu))
    }

    /// The simplex vertex `e_j` in `k` dimensions.
    pub fn vertex(k: usize, j: usize) -> Self {
        let mut mu = vec![0.0; k];
        mu[j] = 1.0;
        Self(mu)
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Brent,
    FrankWolfe,
    SingleGroup,
    /// Arbitrary orthonormal completion after the residual Grams vanished.
    Completion,
}

/// One rank-1 fair component with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct FairComponentResult {
    pub v: DVector<f64>,
    pub mu: DualWeights,
    /// Per-group rank-1 losses `h_i(v) = s_i − vᵀS_i v`.
    pub h: Vec<f64>,
    pub dual_value: f64,
    pub solver: SolverKind,
    pub iterations: usize,
    pub converged: bool,
    pub notes: Vec<String>,
}

impl FairComponentResult {
    /// `z = max_i h_i(v)`.
    pub fn primal_value(&self) -> f64 {
        self.h.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn duality_gap(&self) -> f64 {
        self.primal_value() - self.dual_value
    }
}

/// Ordered orthonormal fair components with per-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FairBasis {
    pub(crate) components: Vec<DVector<f64>>,
    pub(crate) per_iteration: Vec<FairComponentResult>,
    pub(crate) requested_rank: usize,
    pub(crate) rank_deficient_at: Option<usize>,
}

impl FairBasis {
    /// Number of components actually produced.
    pub fn d(&self) -> usize {
        self.components.len()
    }

    pub fn requested_rank(&self) -> usize {
        self.requested_rank
    }

    pub fn components(&self) -> &[DVector<f64>] {
        &self.components
    }

    pub fn per_iteration(&self) -> &[FairComponentResult] {
        &self.per_iteration
    }

    /// Zero-based iteration at which every residual Gram vanished, if the
    /// requested rank could not be reached.
    pub fn rank_deficient_at(&self) -> Option<usize> {
        self.rank_deficient_at
    }

    /// `n × d` matrix with the components as columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.components)
    }

    /// The first `r` columns.
    pub fn prefix_matrix(&self, r: usize) -> DMatrix<f64> {
        DMatrix::from_columns(&self.components[..r])
    }
}

/// `max |VᵀV − I|`.
pub fn orthonormality_error(v: &DMatrix<f64>) -> f64 {
    let gram = v.transpose() * v;
    let id = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
    (gram - id).amax()
}

/// Gram–Schmidt pass of `v` against `basis`, renormalized, sign-canonical.
pub(crate) fn reorthogonalize(v: &DVector<f64>, basis: &[DVector<f64>]) -> DVector<f64> {
    let mut out = v.clone();
    for b in basis {
        let c = b.dot(&out);
        out.axpy(-c, b, 1.0);
    }
    out.normalize_mut();
    canonical_sign(&mut out);
    out
}

/// Total energy captured along orthonormal directions, `Σ_j v_jᵀ S v_j`.
pub(crate) fn captured_energy(s: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    v.column_iter().map(|c| rayleigh(s, &c.into_owned())).sum()
}
