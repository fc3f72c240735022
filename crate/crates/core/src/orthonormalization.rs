//! Greedy fair basis: solve a rank-1 problem, deflate every group along the
//! chosen direction, repeat.
//!
//! Each iteration depends only on the previous ones, so a rank-`d` fit always
//! starts with the rank-`r` fit for `r < d`. `truncate` relies on that.

use nalgebra::DVector;

use crate::error::{FairPcError, Result};
use crate::model::{deflate, reorthogonalize, DualWeights, FairBasis, GramSet, SolverKind};
use crate::solvers::{certify, dual_point, primal_value, solve_fair_pc, SolverConfig};

/// Residual Grams whose traces all fall below this fraction of the original
/// total energy count as exhausted.
pub const EXHAUSTED_TRACE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitOptions {
    /// Pad a rank-deficient basis with an arbitrary orthonormal complement.
    pub complete: bool,
}

/// Rank-`d` fair basis with default options.
pub fn fit(gram_set: &GramSet, d: usize, config: &SolverConfig) -> Result<FairBasis> {
    fit_with(gram_set, d, config, FitOptions::default())
}

pub fn fit_with(gram_set: &GramSet, d: usize, config: &SolverConfig, options: FitOptions) -> Result<FairBasis> {
    let n = gram_set.n();
    if d < 1 || d > n {
        return Err(FairPcError::OutOfRange {
            what: "rank",
            value: d,
            min: 1,
            max: n,
        });
    }
    config.validate()?;
    let floor = EXHAUSTED_TRACE * gram_set.traces().iter().sum::<f64>().max(1.0);

    let mut current = gram_set.clone();
    let mut components: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut per_iteration = Vec::with_capacity(d);
    let mut rank_deficient_at = None;

    for r in 0..d {
        if current.traces().iter().all(|&t| t <= floor) {
            rank_deficient_at = Some(r);
            break;
        }
        let mut result = solve_fair_pc(&current, config)?;
        let v = reorthogonalize(&result.v, &components);
        if v != result.v {
            result.h = primal_value(&current, &v)?.1;
            result.v = v.clone();
        }
        current = deflate(&current, &v)?;
        components.push(v);
        per_iteration.push(result);
    }

    if options.complete && rank_deficient_at.is_some() {
        complete_basis(&mut current, &mut components, &mut per_iteration, d, config)?;
    }

    Ok(FairBasis {
        components,
        per_iteration,
        requested_rank: d,
        rank_deficient_at,
    })
}

/// Gram–Schmidt over the standard basis until `d` components exist.
fn complete_basis(
    current: &mut GramSet,
    components: &mut Vec<DVector<f64>>,
    per_iteration: &mut Vec<crate::model::FairComponentResult>,
    d: usize,
    config: &SolverConfig,
) -> Result<()> {
    let n = current.n();
    let k = current.k();
    for j in 0..n {
        if components.len() == d {
            break;
        }
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let mut residual = e.clone();
        for b in components.iter() {
            let c = b.dot(&residual);
            residual.axpy(-c, b, 1.0);
        }
        if residual.norm() < 1e-6 {
            continue;
        }
        let v = reorthogonalize(&e, components);
        let mu = DualWeights::uniform(k);
        let p = dual_point(current, &mu, config)?;
        let result = certify(current, v.clone(), mu, p.g, SolverKind::Completion, 0, true, vec![])?;
        *current = deflate(current, &v)?;
        components.push(v);
        per_iteration.push(result);
    }
    Ok(())
}

/// The first `r` components. Identical to fitting at rank `r` with the same
/// inputs.
pub fn truncate(basis: &FairBasis, r: usize) -> Result<FairBasis> {
    if r < 1 || r > basis.d() {
        return Err(FairPcError::OutOfRange {
            what: "rank",
            value: r,
            min: 1,
            max: basis.d(),
        });
    }
    Ok(FairBasis {
        components: basis.components[..r].to_vec(),
        per_iteration: basis.per_iteration[..r].to_vec(),
        requested_rank: r,
        rank_deficient_at: basis.rank_deficient_at.filter(|&at| at < r),
    })
}
