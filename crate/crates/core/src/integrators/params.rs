use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_positive(gamma: f64, h: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) || !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need gamma > 0 and h > 0, got gamma = {gamma}, h = {h}"
        )));
    }
    Ok(())
}

/// `η = exp(−γh)`. `h = 0` is rejected even though the limit is `η = 1`.
pub fn eta(gamma: f64, h: f64) -> Result<f64> {
    check_positive(gamma, h)?;
    Ok((-gamma * h).exp())
}

/// `1 − η` without cancellation for small `γh`.
pub fn one_minus_eta(gamma: f64, h: f64) -> Result<f64> {
    check_positive(gamma, h)?;
    Ok(-(-gamma * h).exp_m1())
}

/// `z − (1 − e^{−z})`, so that `(γh + η − 1)/γ² = phi2(γh)/γ²`.
pub(crate) fn phi2(z: f64) -> f64 {
    if z < 0.5 {
        // Σ_{n≥2} (−z)ⁿ/n!
        let mut term = z * z / 2.0;
        let mut sum = term;
        for n in 3..30 {
            term *= -z / n as f64;
            sum += term;
        }
        sum
    } else {
        z + (-z).exp_m1()
    }
}

/// `2z − (1 − e^{−z})(3 − e^{−z})`, the scaled position-noise variance.
fn psi(z: f64) -> f64 {
    if z < 0.5 {
        // Σ_{n≥3} (−1)ⁿ (4 − 2ⁿ) zⁿ / n!
        let mut sum = 0.0;
        let mut zn_fact = z * z / 2.0;
        let mut two_n = 4.0;
        for n in 3..40 {
            zn_fact *= z / n as f64;
            two_n *= 2.0;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (4.0 - two_n) * zn_fact;
        }
        sum
    } else {
        let ome = -(-z).exp_m1();
        2.0 * z - ome * (2.0 + ome)
    }
}

/// Covariance `Σ = [[Σ₁, Σ₂], [Σ₂, Σ₃]]` of the stochastic Euler scheme
/// noise (position, velocity) per coordinate, with its lower Cholesky factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SesNoise {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    /// `[[l11, 0], [l21, l22]]`
    pub cholesky: [[f64; 2]; 2],
}

const CHOLESKY_GUARD: f64 = -1e-14;

pub fn ses_covariance(gamma: f64, h: f64) -> Result<SesNoise> {
    check_positive(gamma, h)?;
    let z = gamma * h;
    let ome = -(-z).exp_m1();
    let sigma1 = psi(z) / (gamma * gamma);
    let sigma2 = ome * ome / gamma;
    let sigma3 = ome * (2.0 - ome);
    let clamp = |v: f64| -> Result<f64> {
        if v >= 0.0 {
            Ok(v)
        } else if v >= CHOLESKY_GUARD {
            Ok(0.0)
        } else {
            Err(Error::IndefiniteCovariance(v))
        }
    };
    let l11 = clamp(sigma1)?.sqrt();
    let l21 = if l11 > 0.0 { sigma2 / l11 } else { 0.0 };
    let l22 = clamp(sigma3 - l21 * l21)?.sqrt();
    Ok(SesNoise {
        sigma1,
        sigma2,
        sigma3,
        cholesky: [[l11, 0.0], [l21, l22]],
    })
}

/// Stepsize, friction and the cached damping factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorParams {
    pub h: f64,
    /// `f64::INFINITY` in the high-friction limit.
    pub gamma: f64,
    pub eta: f64,
    /// `exp(−γh/2)`, computed directly rather than as `sqrt(η)`.
    pub eta_half: f64,
    pub one_minus_eta: f64,
    pub one_minus_eta_half: f64,
}

impl IntegratorParams {
    pub fn new(h: f64, gamma: f64) -> Result<Self> {
        check_positive(gamma, h)?;
        Ok(Self {
            h,
            gamma,
            eta: (-gamma * h).exp(),
            eta_half: (-0.5 * gamma * h).exp(),
            one_minus_eta: -(-gamma * h).exp_m1(),
            one_minus_eta_half: -(-0.5 * gamma * h).exp_m1(),
        })
    }

    /// `γ = ∞`: every O step fully refreshes the velocity (`η = 0`).
    pub fn high_friction_limit(h: f64) -> Result<Self> {
        check_positive(1.0, h)?;
        Ok(Self {
            h,
            gamma: f64::INFINITY,
            eta: 0.0,
            eta_half: 0.0,
            one_minus_eta: 1.0,
            one_minus_eta_half: 1.0,
        })
    }

    pub fn is_high_friction_limit(&self) -> bool {
        self.gamma.is_infinite()
    }

    /// `√(1 − η²)`
    pub(crate) fn o_full_scale(&self) -> f64 {
        (self.one_minus_eta * (1.0 + self.eta)).sqrt()
    }

    /// `√(1 − η)`, the noise scale of a half-step O.
    pub(crate) fn o_half_scale(&self) -> f64 {
        self.one_minus_eta.sqrt()
    }
}
