//! Sequential experimental design toolkit.
//!
//! The crate provides the pieces needed to run model-based sequential
//! experiments end to end:
//!
//! * [`gp`] — Gaussian-process regression with Matérn ARD kernels,
//!   marginal-likelihood fitting, and cheap fantasy conditioning;
//! * [`optim`] — seeded sampling, Gauss–Hermite/Legendre quadrature, a
//!   box-constrained quasi-Newton local optimizer with multistart, and the
//!   DIRECT global optimizer;
//! * [`acq_bo`] — expected improvement and Monte-Carlo batch expected
//!   improvement for optimization tasks;
//! * [`acq_bq`] — warped (log-transformed) posteriors, integral estimates,
//!   and determinantal batch-entropy objectives for quadrature tasks;
//! * [`lookahead`] — rollout and penalized-batch lookahead baselines;
//! * [`policy`] — the batch-then-select decision loop, point-selection
//!   rules, and run records;
//! * [`bench`] — benchmark registries, paired significance tests, and
//!   aggregation into comparison tables.
//!
//! Everything is deterministic given the seeds passed in: random number
//! streams are derived with [`optim::split_seed`] and no global RNG state is
//! consulted anywhere.

pub mod acq_bo;
pub mod acq_bq;
pub mod bench;
pub mod domain;
pub mod error;
pub mod gp;
pub mod lookahead;
pub mod optim;
pub mod policy;

pub use domain::{BoxDomain, Dataset};
pub use error::{Error, Result};
