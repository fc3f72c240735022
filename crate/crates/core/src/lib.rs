//! Fair principal components for row-grouped data.
//!
//! A fair component is a unit direction minimizing the worst group's rank-1
//! loss `s_i − vᵀS_i v`, where `S_i` is the group's Gram matrix and `s_i` its
//! largest eigenvalue. Components are chosen greedily and every group is
//! deflated along each choice, so the rank-`r` basis is always a prefix of the
//! rank-`d` basis.
//!
//! ```
//! use fairpc_core::{fit, synth, SolverConfig};
//!
//! let grams = synth::rotated_instance();
//! let basis = fit(&grams, 2, &SolverConfig::default()).unwrap();
//! let first = &basis.per_iteration()[0];
//! assert!((first.h[0] - first.h[1]).abs() < 1e-12);
//! ```

pub mod eig;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod orthonormalization;
pub mod solvers;
pub mod synth;

pub use error::{FairPcError, Result};
pub use ingest::{ingest, IngestConfig, IngestError, RunManifest};
pub use metrics::{build_loss_report, LossReport, Method};
pub use model::{build_gram_set, deflate, DualWeights, FairBasis, FairComponentResult, GramSet, Group, GroupedDataset, SolverKind};
pub use orthonormalization::{fit, fit_with, truncate, FitOptions};
pub use solvers::{solve_fair_pc, SolverChoice, SolverConfig};
