//! One-step maps for the kinetic Langevin integrators and their overdamped
//! limits.
//!
//! All kinetic schemes advance an [`IntegratorState`] in place. Forces come
//! from a [`GradientSource`](crate::potentials::GradientSource), so the same
//! code runs with exact or minibatch gradients. Schemes whose last force of a
//! step sits at the next step's first force site (BAOAB, OBABO, BBK, SVV)
//! keep that gradient in the state and reuse it, which gives `K + 1`
//! evaluations for a `K`-step run; the rest use exactly `K`.

mod glc;
mod overdamped;
mod params;
mod scheme;
mod state;

pub use glc::{glc_limit_check, glc_limit_check_with, GlcReport};
pub use overdamped::{step_overdamped, OverdampedState};
pub(crate) use params::phi2;
pub use params::{eta, one_minus_eta, ses_covariance, IntegratorParams, SesNoise};
pub use scheme::SchemeId;
pub use state::{step, IntegratorState};
