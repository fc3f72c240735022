//! Deterministic eigensolvers for small dense symmetric PSD matrices.
//!
//! Everything here goes through a cyclic Jacobi sweep. The eigenvalues come
//! back in nonincreasing order with ties kept in column order, and leading
//! eigenvectors follow a fixed sign convention, so repeated calls on the same
//! input are bitwise identical.

use nalgebra::{DMatrix, DVector};

use crate::error::{FairPcError, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Relative gap between the two largest eigenvalues below which the leading
/// eigenvector is reported as non-unique.
pub const DEGENERACY_GAP: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-9;
const SIGN_TOL: f64 = 1e-12;
const PERTURBATION: f64 = 1e-10;

/// Leading eigenpair of a symmetric PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub value: f64,
    pub vector: DVector<f64>,
    /// Jacobi sweeps used.
    pub iterations: usize,
    pub degenerate: bool,
}

/// Full spectrum, eigenvalues nonincreasing, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

/// Maximum absolute asymmetry relative to the largest entry.
pub fn relative_asymmetry(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    let scale = s.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    worst / scale
}

fn check_input(s: &DMatrix<f64>) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(FairPcError::NotSquare {
            rows: s.nrows(),
            cols: s.ncols(),
        });
    }
    if s.nrows() == 0 {
        return Err(FairPcError::OutOfRange {
            what: "matrix dimension",
            value: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    let asymmetry = relative_asymmetry(s);
    if asymmetry > SYMMETRY_TOL {
        return Err(FairPcError::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Cyclic Jacobi on the symmetrized input. `Err` carries the partially
/// diagonalized state when the sweep budget runs out.
fn jacobi(s: &DMatrix<f64>, tol: f64, max_sweeps: usize) -> std::result::Result<SymmetricEigen, SymmetricEigen> {
    let n = s.nrows();
    // Column-major working copies: entry (i, j) lives at i + j * n.
    let a: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx % n, idx / n);
            0.5 * (s[(i, j)] + s[(j, i)])
        })
        .collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i + i * n] = 1.0;
    }
    jacobi_from(n, a, v, tol, max_sweeps)
}

/// Jacobi on `Qᵀ S Q` with the rotations accumulated onto `Q`.
fn jacobi_rotated(
    s: &DMatrix<f64>,
    q: &DMatrix<f64>,
    tol: f64,
    max_sweeps: usize,
) -> std::result::Result<SymmetricEigen, SymmetricEigen> {
    let n = s.nrows();
    let (sv, qv) = (s.as_slice(), q.as_slice());
    let mut sq = vec![0.0; n * n];
    for j in 0..n {
        let out = &mut sq[j * n..(j + 1) * n];
        for (l, &qlj) in qv[j * n..(j + 1) * n].iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(&sv[l * n..(l + 1) * n]) {
                *o += x * qlj;
            }
        }
    }
    let mut a = vec![0.0; n * n];
    for j in 0..n {
        for i in j..n {
            let x: f64 = qv[i * n..(i + 1) * n]
                .iter()
                .zip(&sq[j * n..(j + 1) * n])
                .map(|(x, y)| x * y)
                .sum();
            a[i + j * n] = x;
            a[j + i * n] = x;
        }
    }
    jacobi_from(n, a, qv.to_vec(), tol, max_sweeps)
}

fn jacobi_from(
    n: usize,
    mut a: Vec<f64>,
    mut v: Vec<f64>,
    tol: f64,
    max_sweeps: usize,
) -> std::result::Result<SymmetricEigen, SymmetricEigen> {
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = tol * 1e-2 * frob;

    let mut sweeps = 0;
    let mut converged = n == 1 || frob == 0.0;
    while !converged && sweeps < max_sweeps {
        sweeps += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let (cp, cq) = (p * n, q * n);
                let apq = a[p + cq];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p + cp];
                let aqq = a[q + cq];
                // Late sweeps: drop entries below the diagonal's rounding floor.
                if sweeps > 4 && 100.0 * apq.abs() + app.abs() == app.abs() && 100.0 * apq.abs() + aqq.abs() == aqq.abs() {
                    a[p + cq] = 0.0;
                    a[q + cp] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                let tau = sn / (1.0 + c);

                a[p + cp] = app - t * apq;
                a[q + cq] = aqq + t * apq;
                a[p + cq] = 0.0;
                a[q + cp] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[r + cp];
                    let h = a[r + cq];
                    let rp = g - sn * (h + g * tau);
                    let rq = h + sn * (g - h * tau);
                    a[r + cp] = rp;
                    a[r + cq] = rq;
                    a[p + r * n] = rp;
                    a[q + r * n] = rq;
                }
                let (head, tail) = v.split_at_mut(cq);
                let vp = &mut head[cp..cp + n];
                let vq = &mut tail[..n];
                for (g, h) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (g0, h0) = (*g, *h);
                    *g = g0 - sn * (h0 + g0 * tau);
                    *h = h0 + sn * (g0 - h0 * tau);
                }
            }
        }
        let mut off = 0.0;
        for q in 1..n {
            for p in 0..q {
                off += a[p + q * n] * a[p + q * n];
            }
        }
        converged = off == 0.0 || off.sqrt() <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in column order.
    order.sort_by(|&i, &j| a[j + j * n].total_cmp(&a[i + i * n]));
    let values = order.iter().map(|&i| a[i + i * n]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[r + order[c] * n]);
    let out = SymmetricEigen {
        values,
        vectors,
        sweeps,
    };
    if converged {
        Ok(out)
    } else {
        Err(out)
    }
}

fn converged_or_error(r: std::result::Result<SymmetricEigen, SymmetricEigen>) -> Result<SymmetricEigen> {
    r.map_err(|partial| {
        let best = leading_from(&partial);
        FairPcError::NoConvergence {
            iterations: partial.sweeps,
            best: Box::new(best),
        }
    })
}

/// Full symmetric eigendecomposition, eigenvalues nonincreasing.
pub fn symmetric_eigen(s: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<SymmetricEigen> {
    check_input(s)?;
    converged_or_error(jacobi(s, tol, max_iter))
}

/// Cold restarts between warm solves, to keep rounding in the carried basis
/// from accumulating.
const WARM_REFRESH: usize = 256;

/// Solver state for a sequence of slowly varying matrices.
///
/// Each solve rotates the input into the previous eigenbasis first, where it
/// is nearly diagonal, so Jacobi finishes in one or two sweeps.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    basis: Option<DMatrix<f64>>,
    solves: usize,
}

impl WarmStart {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same contract as [`leading_eigenpair_perturbed`].
    pub fn leading_perturbed(
        &mut self,
        s: &DMatrix<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<(EigenResult, Option<String>)> {
        check_input(s)?;
        let n = s.nrows();
        let carried = self
            .basis
            .take()
            .filter(|q| q.nrows() == n && self.solves % WARM_REFRESH != 0);
        self.solves += 1;
        let eig = match carried {
            Some(q) => converged_or_error(jacobi_rotated(s, &q, tol, max_iter))?,
            None => converged_or_error(jacobi(s, tol, max_iter))?,
        };
        let first = leading_from(&eig);
        self.basis = Some(eig.vectors);
        if !first.degenerate {
            return Ok((first, None));
        }
        leading_eigenpair_perturbed(s, tol, max_iter)
    }
}

/// Flips `v` so its first non-negligible coordinate is positive.
pub fn canonical_sign(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > SIGN_TOL) {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

fn leading_from(eig: &SymmetricEigen) -> EigenResult {
    let n = eig.values.len();
    let top = eig.values[0].max(0.0);
    if !(eig.values[0] > 0.0) {
        return EigenResult {
            value: 0.0,
            vector: DVector::from_element(n, 1.0 / (n as f64).sqrt()),
            iterations: eig.sweeps,
            degenerate: true,
        };
    }
    let mut vector = eig.vectors.column(0).into_owned();
    vector.normalize_mut();
    canonical_sign(&mut vector);
    let degenerate = n > 1 && top - eig.values[1] < DEGENERACY_GAP * top;
    EigenResult {
        value: top,
        vector,
        iterations: eig.sweeps,
        degenerate,
    }
}

/// Largest eigenvalue and a unit eigenvector.
///
/// A zero (or numerically non-positive) matrix yields value 0, the
/// normalized all-ones vector, and `degenerate = true`.
pub fn leading_eigenpair(s: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<EigenResult> {
    let eig = symmetric_eigen(s, tol, max_iter)?;
    Ok(leading_from(&eig))
}

/// Leading eigenpair with one tie-breaking retry.
///
/// When the top eigenvalue is degenerate, the first diagonal entry is nudged
/// by `1e-10 * trace` and the problem is re-solved once. The reported value is
/// the Rayleigh quotient on the original matrix. The second element is a
/// diagnostic when the degeneracy survives the nudge.
pub fn leading_eigenpair_perturbed(
    s: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(EigenResult, Option<String>)> {
    let first = leading_eigenpair(s, tol, max_iter)?;
    if !first.degenerate {
        return Ok((first, None));
    }
    let trace = s.trace();
    if !(trace > 0.0) {
        return Ok((first, Some("zero matrix: leading eigenvector is arbitrary".into())));
    }
    let mut nudged = s.clone();
    nudged[(0, 0)] += PERTURBATION * trace;
    let mut second = leading_eigenpair(&nudged, tol, max_iter)?;
    second.value = rayleigh(s, &second.vector).max(0.0);
    second.iterations += first.iterations;
    let note = second.degenerate.then(|| {
        format!(
            "leading eigenvalue {:.6e} remains degenerate after perturbation",
            second.value
        )
    });
    Ok((second, note))
}

/// The `k` largest eigenvalues, nonincreasing. Values in `[-1e-9 λmax, 0)` are
/// clamped to zero.
pub fn top_k_eigenvalues(s: &DMatrix<f64>, k: usize) -> Result<Vec<f64>> {
    let n = s.nrows();
    if k < 1 || k > n {
        return Err(FairPcError::OutOfRange {
            what: "k",
            value: k,
            min: 1,
            max: n,
        });
    }
    let eig = symmetric_eigen(s, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let clamp = 1e-9 * eig.values[0].max(0.0);
    Ok(eig.values[..k]
        .iter()
        .map(|&x| if x < 0.0 && x >= -clamp { 0.0 } else { x })
        .collect())
}

/// `vᵀ S v`.
pub fn rayleigh(s: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (s * v).dot(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(d))
    }

    #[test]
    fn warm_start_matches_cold_solves() {
        let base = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let drift = DMatrix::from_row_slice(3, 3, &[0.0, 0.3, 0.0, 0.3, 0.1, -0.4, 0.0, -0.4, 0.5]);
        let mut warm = WarmStart::new();
        for step in 0..600 {
            let s = &base + &drift * (step as f64 * 1e-3);
            let (w, _) = warm.leading_perturbed(&s, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            let (c, _) = leading_eigenpair_perturbed(&s, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            assert!((w.value - c.value).abs() <= 1e-12 * c.value);
            assert!((&w.vector - &c.vector).amax() < 1e-10);
        }
    }

    #[test]
    fn diagonal_matrix() {
        let r = leading_eigenpair(&diag(&[3.0, 1.0, 0.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.vector, DVector::from_column_slice(&[1.0, 0.0, 0.0]));
        assert!(!r.degenerate);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let r = leading_eigenpair(&DMatrix::zeros(3, 3), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.value, 0.0);
        let x = 1.0 / 3f64.sqrt();
        assert_eq!(r.vector, DVector::from_element(3, x));
        assert!(r.degenerate);
    }

    #[test]
    fn two_by_two_bisector_matrix() {
        // Characteristic polynomial x² - 3x + 2.125: roots (3 ± √0.5)/2.
        let s = DMatrix::from_row_slice(2, 2, &[1.75, 0.25, 0.25, 1.25]);
        let r = leading_eigenpair(&s, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let expected = (3.0 + 0.5f64.sqrt()) / 2.0;
        assert!((r.value - expected).abs() < 1e-14);
        let angle = 22.5f64.to_radians();
        assert!((r.vector[0] - angle.cos()).abs() < 1e-12);
        assert!((r.vector[1] - angle.sin()).abs() < 1e-12);
    }

    #[test]
    fn sign_convention_first_coordinate_positive() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let r = leading_eigenpair(&s, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(r.vector[0] > 0.0);
        assert!(r.vector[1] < 0.0);
    }

    #[test]
    fn rejects_asymmetric() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            leading_eigenpair(&s, DEFAULT_TOL, DEFAULT_MAX_ITER),
            Err(FairPcError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn degenerate_identity_flagged() {
        let r = leading_eigenpair(&DMatrix::identity(3, 3), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn perturbation_breaks_ties() {
        // The nudge is below the degeneracy threshold: the tie is broken
        // deterministically toward e1 but still reported.
        let (r, note) = leading_eigenpair_perturbed(&diag(&[2.0, 2.0, 1.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(note.is_some());
        assert_eq!(r.vector, DVector::from_column_slice(&[1.0, 0.0, 0.0]));
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(top_k_eigenvalues(&diag(&[5.0, 2.0, 2.0, 0.0]), 3).unwrap(), vec![5.0, 2.0, 2.0]);
        assert_eq!(top_k_eigenvalues(&DMatrix::identity(3, 3), 2).unwrap(), vec![1.0, 1.0]);
        assert!(top_k_eigenvalues(&DMatrix::identity(3, 3), 0).is_err());
        assert!(top_k_eigenvalues(&DMatrix::identity(3, 3), 4).is_err());
    }

    #[test]
    fn top_k_of_deflated_rotated_gram() {
        let a = 22.5f64.to_radians();
        let p = DMatrix::identity(2, 2) - {
            let v = DVector::from_column_slice(&[a.cos(), a.sin()]);
            &v * v.transpose()
        };
        let s = &p * diag(&[2.0, 1.0]) * &p;
        let vals = top_k_eigenvalues(&s, 2).unwrap();
        let expected = 2.0 * a.sin().powi(2) + a.cos().powi(2);
        assert!((vals[0] - expected).abs() < 1e-14);
        assert!((vals[0] - 1.146_446_609_406_726).abs() < 1e-12);
        assert!(vals[1].abs() < 1e-15);
    }
}
