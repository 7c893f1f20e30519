//! Unregularized online kernel learning.
//!
//! This crate implements two online learning algorithms over reproducing
//! kernel Hilbert spaces — pointwise classification and pairwise learning —
//! driven by polynomially decaying step sizes, without any regularization
//! term. Around the trainers it provides the supporting calculus and the
//! empirical machinery to check the theory on synthetic data:
//!
//! - [`losses`]: the activating-loss family (least squares, logistic, q-norm)
//!   with its smoothness inequalities, norm-growth constants, and a
//!   certification battery for declared constants.
//! - [`kernels`]: Gaussian/linear/polynomial Mercer kernels, the product
//!   kernel on pairs, Gram matrices, and sup-diagonal bounds.
//! - [`hypothesis`]: dual expansions (centers + coefficients), the state type
//!   of both trainers, with incremental RKHS norms and flat-file
//!   checkpointing.
//! - [`trainers`]: the two online algorithms, step-size schedules with
//!   admissibility classification, deterministic norm envelopes, and
//!   per-iteration trajectory logging.
//! - [`experiments`]: synthetic distributions with planted minimizers,
//!   Monte-Carlo risk estimation, seed-replicated studies, and log-log rate
//!   fitting against the theoretical exponents.
//! - [`config`] / [`cli`]: TOML experiment configs and the command-line
//!   front end.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod hypothesis;
pub mod kernels;
pub mod losses;
pub mod trainers;

pub use error::{Error, Result};
pub use hypothesis::DualExpansion;
pub use kernels::{Kernel, KernelFamily, PairKernel, Point};
pub use losses::ActivatingLoss;
pub use trainers::StepSchedule;
