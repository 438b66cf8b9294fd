//! Exact per-mode transition matrices on quadratic targets, spectral gaps,
//! the Lyapunov estimate for rOABAO and `(γ, h)` contour grids.
//!
//! On `U(x) = Σ λ_i x_i²/2` the coupled difference of any scheme evolves
//! mode by mode through a 2×2 matrix, so the exact contraction factor is the
//! largest eigenvalue modulus over the modes. For a diagonal target the
//! extreme curvatures `m` and `M` are enough.

mod contour;
mod lyapunov;
mod mode;

pub use contour::{contour_cell, contour_grid, log_axis, ContourCell, ContourGrid, LyapunovSettings};
pub use lyapunov::{lyapunov_rate_roabao, lyapunov_rate_roabao_fixed, LyapunovEstimate, QR_CADENCE};
pub use mode::{continuous_rate, mode_matrix, overdamped_mode_factor, spectral_gap, ModeMatrix, SpectralGap};
