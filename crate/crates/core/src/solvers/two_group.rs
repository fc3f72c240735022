use nalgebra::DVector;

use crate::eig;
use crate::error::{FairPcError, Result};
use crate::model::{DualWeights, FairComponentResult, GramSet, SolverKind};

use super::{brent_root, certify, primal_value, SolverConfig};

fn require_two(gram_set: &GramSet, solver: &'static str) -> Result<()> {
    if gram_set.k() != 2 {
        return Err(FairPcError::GroupCount {
            solver,
            expected: 2,
            found: gram_set.k(),
        });
    }
    Ok(())
}

struct QPoint {
    q: f64,
    v: DVector<f64>,
    lambda: f64,
    note: Option<String>,
}

fn q_point(gram_set: &GramSet, mu: f64, config: &SolverConfig) -> Result<QPoint> {
    let c = gram_set.weighted_sum(&[mu, 1.0 - mu]);
    let (e, note) = eig::leading_eigenpair_perturbed(&c, config.eig_tol, config.eig_max_iter)?;
    let s = gram_set.top_eigenvalues();
    let q = s[0] - s[1] - (eig::rayleigh(gram_set.gram(0), &e.vector) - eig::rayleigh(gram_set.gram(1), &e.vector));
    Ok(QPoint {
        q,
        v: e.vector,
        lambda: e.value,
        note,
    })
}

/// `q(μ) = s₁ − s₂ − v(μ)ᵀ(S₁ − S₂)v(μ)` where `v(μ)` leads
/// `C(μ) = μS₁ + (1−μ)S₂`. Equals `h₁ − h₂` at `v(μ)`, so its root is the
/// equal-loss weight.
pub fn q_function(gram_set: &GramSet, mu: f64) -> Result<(f64, DVector<f64>)> {
    require_two(gram_set, "q_function")?;
    if !(0.0..=1.0).contains(&mu) {
        return Err(FairPcError::InvalidWeights(format!("two-group weight {mu} outside [0, 1]")));
    }
    let p = q_point(gram_set, mu, &SolverConfig::default())?;
    Ok((p.q, p.v))
}

/// Optimal rank-1 fair component for two groups.
///
/// Finds the root of `q` on `[0, 1]` with Brent's method. An endpoint whose
/// `|q|` is within `1e-9·max(1, s₁+s₂)` is taken as is. If both endpoints
/// share a sign (impossible in exact arithmetic, since `q(0) ≥ 0 ≥ q(1)`), the
/// endpoint with the smaller primal value is returned and the result is
/// flagged.
pub fn brent_two_group(gram_set: &GramSet, config: &SolverConfig) -> Result<FairComponentResult> {
    require_two(gram_set, "brent")?;
    config.validate()?;
    let s = gram_set.top_eigenvalues();
    let (s1, s2) = (s[0], s[1]);
    let endpoint_tol = 1e-9 * (s1 + s2).max(1.0);
    let certificate_tol = 1e-8 * ((s1 - s2).abs() + s1 + s2).max(1.0);
    let mut notes = Vec::new();

    let at0 = q_point(gram_set, 0.0, config)?;
    if at0.q.abs() <= endpoint_tol {
        return finish(gram_set, 0.0, at0, 1, true, notes);
    }
    let at1 = q_point(gram_set, 1.0, config)?;
    if at1.q.abs() <= endpoint_tol {
        return finish(gram_set, 1.0, at1, 2, true, notes);
    }

    if at0.q.signum() == at1.q.signum() {
        let (z0, _) = primal_value(gram_set, &at0.v)?;
        let (z1, _) = primal_value(gram_set, &at1.v)?;
        notes.push(format!(
            "q(0) = {:.6e} and q(1) = {:.6e} share a sign; returning the better endpoint",
            at0.q, at1.q
        ));
        return if z0 <= z1 {
            finish(gram_set, 0.0, at0, 2, false, notes)
        } else {
            finish(gram_set, 1.0, at1, 2, false, notes)
        };
    }

    let root = brent_root(
        |mu| q_point(gram_set, mu, config).map(|p| p.q),
        0.0,
        1.0,
        at0.q,
        at1.q,
        config.brent_tol,
        config.max_iter_brent,
    )?;
    let mu = root.root.clamp(0.0, 1.0);
    let at_root = q_point(gram_set, mu, config)?;
    if !root.converged {
        notes.push(format!("brent stopped after {} evaluations", root.evaluations));
    }
    let certified = at_root.q.abs() <= certificate_tol;
    if !certified {
        notes.push(format!(
            "|q(mu*)| = {:.3e} exceeds the root certificate {:.3e}",
            at_root.q.abs(),
            certificate_tol
        ));
    }
    finish(gram_set, mu, at_root, root.evaluations + 3, root.converged && certified, notes)
}

fn finish(
    gram_set: &GramSet,
    mu: f64,
    point: QPoint,
    iterations: usize,
    converged: bool,
    mut notes: Vec<String>,
) -> Result<FairComponentResult> {
    let s = gram_set.top_eigenvalues();
    let g = mu * s[0] + (1.0 - mu) * s[1] - point.lambda;
    notes.extend(point.note);
    let weights = DualWeights::new(vec![mu, 1.0 - mu])?;
    certify(gram_set, point.v, weights, g, SolverKind::Brent, iterations, converged, notes)
}
