use crate::error::Result;
use crate::model::{DualWeights, FairComponentResult, GramSet, SolverKind};

use crate::eig::WarmStart;

use super::polish::polish_from_eigenspace;
use crate::eig;
use super::{certify, dual_gradient, dual_point, dual_point_warm, primal_value, SolverConfig};

/// Relative gap below which the eigenvector at the final weights is kept as is.
const POLISH_GAP: f64 = 1e-12;

/// Frank-Wolfe ascent on the dual over the probability simplex.
///
/// Starts at `μ = e_1`; each step moves toward the vertex with the largest
/// gradient entry (lowest index on ties) with step `2/(t+2)`. Stops when the
/// weight update is shorter than `epsilon_fw` or after `max_iter_fw` steps, in
/// which case the result is returned with `converged = false`.
pub fn frank_wolfe(gram_set: &GramSet, config: &SolverConfig) -> Result<FairComponentResult> {
    config.validate()?;
    let k = gram_set.k();
    let mut mu = vec![0.0; k];
    mu[0] = 1.0;
    let mut notes = Vec::new();
    let mut t = 0usize;
    let mut converged = false;
    let mut warm = WarmStart::new();

    while t < config.max_iter_fw {
        let p = dual_point_warm(gram_set, &DualWeights::new(mu.clone())?, config, Some(&mut warm))?;
        if let Some(note) = p.note {
            if notes.len() < 8 {
                notes.push(format!("step {t}: {note}"));
            }
        }
        let grad = dual_gradient(gram_set, &p.v_mu)?;
        let mut best = 0;
        for (j, &gj) in grad.iter().enumerate().skip(1) {
            if gj > grad[best] {
                best = j;
            }
        }
        let gamma = 2.0 / (t as f64 + 2.0);
        let mut step_sq = 0.0;
        for (j, m) in mu.iter_mut().enumerate() {
            let target = if j == best { 1.0 } else { 0.0 };
            let next = (1.0 - gamma) * *m + gamma * target;
            step_sq += (next - *m) * (next - *m);
            *m = next;
        }
        t += 1;
        if step_sq.sqrt() < config.epsilon_fw {
            converged = true;
            break;
        }
    }

    let mu = DualWeights::new(mu)?;
    let p = dual_point(gram_set, &mu, config)?;
    notes.extend(p.note);
    if !converged {
        notes.push(format!("frank-wolfe stopped at the iteration limit ({t})"));
    }
    let mut v = p.v_mu;
    if config.polish_primal {
        let (z, _) = primal_value(gram_set, &v)?;
        if z - p.g > POLISH_GAP * z.abs().max(1.0) {
            let a = gram_set.weighted_sum(mu.as_slice());
            let basis = eig::symmetric_eigen(&a, config.eig_tol, config.eig_max_iter)?.vectors;
            let polished = polish_from_eigenspace(gram_set, &v, &basis);
            if polished.z < z {
                notes.push(format!(
                    "primal refined from {z:.6e} to {:.6e} in {} descent steps",
                    polished.z, polished.steps
                ));
                v = polished.v;
            }
        }
    }
    certify(gram_set, v, mu, p.g, SolverKind::FrankWolfe, t, converged, notes)
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;

    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn identical_groups_stop_immediately() {
        let r = frank_wolfe(&identical(), &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.mu.as_slice(), &[1.0, 0.0]);
        assert_eq!(r.v, DVector::from_column_slice(&[1.0, 0.0]));
        assert_eq!(r.primal_value(), 0.0);
        assert_eq!(r.dual_value, 0.0);
        assert_eq!(r.duality_gap(), 0.0);
    }

    #[test]
    fn rotated_instance_approaches_bisector() {
        let r = frank_wolfe(&rotated(), &SolverConfig::default()).unwrap();
        assert!((r.mu.as_slice()[0] - 0.5).abs() < 1e-3, "mu = {:?}", r.mu);
        assert!((r.primal_value() - rotated_optimum()).abs() < 1e-4);
        assert!((r.dual_value - rotated_optimum()).abs() < 1e-4);
        assert!(r.duality_gap() <= 1e-4);
        assert!(r.duality_gap() >= -1e-8);
    }

    #[test]
    fn three_groups_weak_duality() {
        let r = frank_wolfe(&three_group(), &SolverConfig::default()).unwrap();
        assert!(r.duality_gap() >= -1e-8);
        assert!(r.dual_value <= r.primal_value() + 1e-12);
        assert!((r.mu.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unpolished_result_is_the_final_eigenvector() {
        let cfg = SolverConfig {
            polish_primal: false,
            ..SolverConfig::default()
        };
        let gs = three_group();
        let r = frank_wolfe(&gs, &cfg).unwrap();
        let p = dual_point(&gs, &r.mu, &cfg).unwrap();
        assert_eq!(r.v, p.v_mu);
        assert_eq!(r.dual_value, p.g);
    }

    #[test]
    fn polishing_closes_the_degenerate_gap() {
        // A(μ) ≈ I at the dual optimum, so v(μ) alone is an arbitrary axis.
        let plain = frank_wolfe(
            &three_group(),
            &SolverConfig {
                polish_primal: false,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let polished = frank_wolfe(&three_group(), &SolverConfig::default()).unwrap();
        assert!(plain.primal_value() > 1.5);
        assert!((polished.primal_value() - 1.0).abs() < 1e-9);
        assert_eq!(plain.dual_value, polished.dual_value);
        assert!(polished.notes.iter().any(|n| n.starts_with("primal refined")));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let cfg = SolverConfig {
            max_iter_fw: 5,
            ..SolverConfig::default()
        };
        let r = frank_wolfe(&rotated(), &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
    }
}
