//! Kinetic Langevin integrators with full and minibatch gradients, and the
//! tooling to measure how fast synchronously coupled chains contract.
//!
//! Modules, bottom up:
//! - [`noise`], [`phase`], [`coupling`]: seeded streams, the twisted norm
//!   `‖x‖² + 2b⟨x,v⟩ + a‖v‖²`, lockstep chain pairs.
//! - [`potentials`]: Gaussian and logistic-regression targets, minibatch
//!   estimators, IDX ingestion.
//! - [`integrators`]: EM, BBK, SPV, SVV, BAOAB, OBABO, rOABAO, SES and the
//!   overdamped OD-EM / OD-LM.
//! - [`contraction`]: rate/preconstant tables, coupled runs, certificates.
//! - [`spectral`]: exact per-mode transition matrices and contour grids.
//! - [`diagnostics`]: effective sample size and bias tables.

pub mod contraction;
pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod integrators;
pub mod linalg;
pub mod noise;
pub mod phase;
pub mod potentials;
pub mod spectral;

pub use error::{Error, Result};
