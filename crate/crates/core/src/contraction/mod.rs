//! Contraction constants for each scheme, synchronously coupled runs that
//! test them, and grid certificates for the positivity conditions behind
//! them.
//!
//! Bounds are stated on squared twisted-norm distances:
//! `‖Δz_k‖²_{a,b} ≤ C (1 − c)^s ‖Δz_0‖²_{a,b}`, with `s = k` or `k − 1`.

mod certify;
mod constants;
mod coupled;

pub use certify::{
    certify, form_from_map, transcribed_form, CertificateReport, Coefficients, DEFAULT_LAMBDA_POINTS,
    DEFAULT_U_POINTS,
};
pub use constants::{
    constants_for, constants_for_sg, max_stepsize, overdamped_rate, SchemeConstants, StepExponent,
    StochasticSchemeConstants,
};
pub use coupled::{
    coupled_run, coupled_run_overdamped, coupled_run_sg, coupled_run_sg_with, empirical_rate, CoupledTrajectory,
    MeanSquareTrajectory,
};
