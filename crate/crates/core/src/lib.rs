//! Majorize-minimize non-negative matrix factorization.
//!
//! Factorizes a non-negative data matrix `Y ≈ KX` under a Kullback-Leibler or
//! Frobenius discrepancy with optional elastic-net, orthogonality,
//! total-variation and supervised-regression penalties. Every update is a
//! closed-form multiplicative rule obtained by minimizing a surrogate
//! functional, so the objective decreases monotonically and non-negativity
//! is preserved without projection.
//!
//! ```
//! use nmf_mm::prelude::*;
//!
//! let phantom = make_phantom(&PhantomSpec { width: 8, height: 8, rank: 2, ..Default::default() }).unwrap();
//! let y = phantom.y.as_array();
//! let grid = build_grid(8, 8).unwrap();
//! let init = init_factors(y.nrows(), y.ncols(), 2, 1, 1.0).unwrap();
//! let config = SolverConfig { max_iter: 50, ..Default::default() };
//! let (state, trace) = fit(y, &config, &HyperParams::default(), &grid, None, init).unwrap();
//! assert_eq!(state.k.dim(), (64, 2));
//! let totals = trace.totals();
//! assert!(totals.last().unwrap() < &totals[0]);
//! ```

// `!(v >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod divergence;
pub mod error;
pub mod io;
pub mod model;
pub mod objective;
pub mod solver;
pub mod surrogate;
pub mod tv;

pub use error::{NmfError, Result};

/// The types and functions needed for a typical fit.
pub mod prelude {
    pub use crate::classify::{build_classifier, LinearClassifier};
    pub use crate::divergence::{beta_divergence_matrix, beta_divergence_scalar, kl_divergence, BetaIndex};
    pub use crate::error::{NmfError, Result};
    pub use crate::io::{make_phantom, Phantom, PhantomSpec};
    pub use crate::model::{init_factors, validate_problem, DataMatrix, FactorState, HyperParams, Labels};
    pub use crate::objective::{penalty_values, total_cost, CostBreakdown, Discrepancy};
    pub use crate::solver::{fit, fit_with_observer, FitTrace, KlXRule, SolverConfig, Termination};
    pub use crate::tv::{build_grid, PixelGrid};
}
