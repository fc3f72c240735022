//! Rank-1 fair component solvers.
//!
//! The primal problem picks a unit `v` minimizing `max_i h_i(v)` with
//! `h_i(v) = s_i − vᵀS_i v`. Its Lagrangian dual over the simplex is
//! `g(μ) = μᵀs − λ_max(Σ μ_i S_i)`, concave in `μ`, with gradient
//! `(∇g)_i = s_i − v(μ)ᵀ S_i v(μ)` where `v(μ)` is the leading eigenvector.
//! For two groups the dual is tight and the optimum is a root of a scalar
//! function; for more groups Frank-Wolfe climbs the dual, and the primal vector
//! starts at `v(μ)` and is refined by local descent when a gap remains.

mod brent;
mod frank_wolfe;
mod polish;
mod two_group;

use nalgebra::DVector;
use serde::Serialize;

pub use brent::{brent_root, RootResult};
pub use frank_wolfe::frank_wolfe;
pub use two_group::{brent_two_group, q_function};

use crate::eig::{self, rayleigh};
use crate::error::{FairPcError, Result};
use crate::model::{check_unit, DualWeights, FairComponentResult, GramSet, SolverKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    #[default]
    Auto,
    Brent,
    FrankWolfe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Frank-Wolfe stops once `‖μ⁽ᵗ⁾ − μ⁽ᵗ⁻¹⁾‖₂` drops below this.
    pub epsilon_fw: f64,
    pub max_iter_fw: usize,
    /// Bracket width tolerance on the two-group weight.
    pub brent_tol: f64,
    pub max_iter_brent: usize,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    pub solver_choice: SolverChoice,
    /// Refine the Frank-Wolfe primal vector by local descent when a gap
    /// remains. Off reproduces the plain `v(μ_final)` output.
    pub polish_primal: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon_fw: 1e-8,
            max_iter_fw: 10_000,
            brent_tol: 1e-14,
            max_iter_brent: 200,
            eig_tol: eig::DEFAULT_TOL,
            eig_max_iter: eig::DEFAULT_MAX_ITER,
            solver_choice: SolverChoice::Auto,
            polish_primal: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon_fw", self.epsilon_fw),
            ("brent_tol", self.brent_tol),
            ("eig_tol", self.eig_tol),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FairPcError::InvalidConfig(format!("{name} must be positive, got {value}")));
            }
        }
        if self.max_iter_fw == 0 || self.max_iter_brent == 0 || self.eig_max_iter == 0 {
            return Err(FairPcError::InvalidConfig("iteration limits must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_solver(mut self, choice: SolverChoice) -> Self {
        self.solver_choice = choice;
        self
    }
}

/// Primal objective at `v`: `(z, h)` with `h_i = s_i − vᵀS_i v`, `z = max h`.
pub fn primal_value(gram_set: &GramSet, v: &DVector<f64>) -> Result<(f64, Vec<f64>)> {
    check_unit(v, gram_set.n())?;
    let h = group_losses(gram_set, v);
    let z = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((z, h))
}

fn group_losses(gram_set: &GramSet, v: &DVector<f64>) -> Vec<f64> {
    gram_set
        .grams()
        .iter()
        .zip(gram_set.top_eigenvalues())
        .map(|(s, &top)| top - rayleigh(s, v))
        .collect()
}

/// Dual objective evaluated at one simplex point.
#[derive(Debug, Clone)]
pub struct DualPoint {
    pub g: f64,
    pub v_mu: DVector<f64>,
    pub lambda_mu: f64,
    pub eig_iterations: usize,
    pub note: Option<String>,
}

/// `g(μ) = μᵀs − λ_max(A(μ))` with `A(μ) = Σ μ_i S_i`, using the default
/// eigensolver settings.
pub fn dual_objective(gram_set: &GramSet, mu: &DualWeights) -> Result<(f64, DVector<f64>, f64)> {
    let p = dual_point(gram_set, mu, &SolverConfig::default())?;
    Ok((p.g, p.v_mu, p.lambda_mu))
}

pub fn dual_point(gram_set: &GramSet, mu: &DualWeights, config: &SolverConfig) -> Result<DualPoint> {
    if mu.len() != gram_set.k() {
        return Err(FairPcError::InvalidWeights(format!(
            "{} weights for {} groups",
            mu.len(),
            gram_set.k()
        )));
    }
    dual_point_warm(gram_set, mu, config, None)
}

pub(crate) fn dual_point_warm(
    gram_set: &GramSet,
    mu: &DualWeights,
    config: &SolverConfig,
    warm: Option<&mut eig::WarmStart>,
) -> Result<DualPoint> {
    let a = gram_set.weighted_sum(mu.as_slice());
    let (e, note) = match warm {
        Some(w) => w.leading_perturbed(&a, config.eig_tol, config.eig_max_iter)?,
        None => eig::leading_eigenpair_perturbed(&a, config.eig_tol, config.eig_max_iter)?,
    };
    let mu_s: f64 = mu
        .as_slice()
        .iter()
        .zip(gram_set.top_eigenvalues())
        .map(|(m, s)| m * s)
        .sum();
    Ok(DualPoint {
        g: mu_s - e.value,
        v_mu: e.vector,
        lambda_mu: e.value,
        eig_iterations: e.iterations,
        note,
    })
}

/// `(∇g)_i = s_i − v_μᵀ S_i v_μ`; the same vector as the primal `h` at `v_μ`.
pub fn dual_gradient(gram_set: &GramSet, v_mu: &DVector<f64>) -> Result<Vec<f64>> {
    check_unit(v_mu, gram_set.n())?;
    Ok(group_losses(gram_set, v_mu))
}

/// Packages a certified result: `h` is always recomputed at `v`.
pub(crate) fn certify(
    gram_set: &GramSet,
    v: DVector<f64>,
    mu: DualWeights,
    dual_value: f64,
    solver: SolverKind,
    iterations: usize,
    converged: bool,
    notes: Vec<String>,
) -> Result<FairComponentResult> {
    let (_, h) = primal_value(gram_set, &v)?;
    Ok(FairComponentResult {
        v,
        mu,
        h,
        dual_value,
        solver,
        iterations,
        converged,
        notes,
    })
}

/// Leading eigenvector of the single group's Gram; standard PCA.
fn single_group(gram_set: &GramSet, config: &SolverConfig) -> Result<FairComponentResult> {
    let mu = DualWeights::vertex(1, 0);
    let p = dual_point(gram_set, &mu, config)?;
    let notes = p.note.into_iter().collect();
    certify(gram_set, p.v_mu, mu, p.g, SolverKind::SingleGroup, p.eig_iterations, true, notes)
}

/// Dispatches on group count and `config.solver_choice`.
pub fn solve_fair_pc(gram_set: &GramSet, config: &SolverConfig) -> Result<FairComponentResult> {
    config.validate()?;
    match (gram_set.k(), config.solver_choice) {
        (k, SolverChoice::Brent) if k != 2 => Err(FairPcError::GroupCount {
            solver: "brent",
            expected: 2,
            found: k,
        }),
        (_, SolverChoice::Brent) => brent_two_group(gram_set, config),
        (_, SolverChoice::FrankWolfe) => frank_wolfe(gram_set, config),
        (1, SolverChoice::Auto) => single_group(gram_set, config),
        (2, SolverChoice::Auto) => brent_two_group(gram_set, config),
        (_, SolverChoice::Auto) => frank_wolfe(gram_set, config),
    }
}
