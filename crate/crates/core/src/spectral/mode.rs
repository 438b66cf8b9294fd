use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::{phi2, SchemeId};
use crate::linalg::Mat2;

/// Noise-free one-step map of a scheme on the 1D quadratic `U = λx²/2`,
/// acting on `(x, v)` columns. For rOABAO the map depends on the midpoint
/// offset `u ∈ [0, h]`, so the matrix is built on demand by [`ModeMatrix::at`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeMatrix {
    pub scheme: SchemeId,
    pub lambda: f64,
    pub h: f64,
    pub gamma: f64,
    fixed: Option<Mat2>,
}

fn drift(t: f64) -> Mat2 {
    Mat2::new(1.0, t, 0.0, 1.0)
}

fn kick(t: f64, lambda: f64) -> Mat2 {
    Mat2::new(1.0, 0.0, -t * lambda, 1.0)
}

fn damp(t: f64, gamma: f64) -> Mat2 {
    Mat2::new(1.0, 0.0, 0.0, (-gamma * t).exp())
}

/// Exactly integrated velocity update `V_s(t)` without noise.
fn velocity_flow(t: f64, gamma: f64, lambda: f64) -> Mat2 {
    let ome = -(-gamma * t).exp_m1();
    Mat2::new(1.0, 0.0, -lambda * ome / gamma, 1.0 - ome)
}

/// Product of sub-step matrices given in application order.
fn compose(steps: &[Mat2]) -> Mat2 {
    steps.iter().fold(Mat2::IDENTITY, |acc, s| s.mul(&acc))
}

/// rOABAO with the gradient taken at `x + u v`.
pub(crate) fn roabao_matrix(lambda: f64, h: f64, gamma: f64, u: f64) -> Mat2 {
    let core = Mat2::new(
        1.0 - 0.5 * h * h * lambda,
        h - 0.5 * h * h * lambda * u,
        -h * lambda,
        1.0 - h * lambda * u,
    );
    let o = damp(0.5 * h, gamma);
    compose(&[o, core, o])
}

pub fn mode_matrix(scheme: SchemeId, lambda: f64, h: f64, gamma: f64) -> Result<ModeMatrix> {
    if !scheme.is_kinetic() {
        return Err(Error::OverdampedScheme(scheme));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("curvature must be positive, got {lambda}")));
    }
    if !(h > 0.0 && h.is_finite() && gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need h > 0 and gamma > 0, got h = {h}, gamma = {gamma}"
        )));
    }
    let fixed = match scheme {
        SchemeId::Em => Some(Mat2::new(1.0, h, -h * lambda, 1.0 - gamma * h)),
        SchemeId::Bbk => {
            let d = 1.0 + 0.5 * gamma * h;
            let first = Mat2::new(1.0, 0.0, -0.5 * h * lambda, 1.0 - 0.5 * gamma * h);
            let last = Mat2::new(1.0, 0.0, -0.5 * h * lambda / d, 1.0 / d);
            Some(compose(&[first, drift(h), last]))
        }
        SchemeId::Spv => Some(compose(&[
            drift(0.5 * h),
            velocity_flow(h, gamma, lambda),
            drift(0.5 * h),
        ])),
        SchemeId::Svv => Some(compose(&[
            velocity_flow(0.5 * h, gamma, lambda),
            drift(h),
            velocity_flow(0.5 * h, gamma, lambda),
        ])),
        SchemeId::Baoab => Some(compose(&[
            kick(0.5 * h, lambda),
            drift(0.5 * h),
            damp(h, gamma),
            drift(0.5 * h),
            kick(0.5 * h, lambda),
        ])),
        SchemeId::Obabo => Some(compose(&[
            damp(0.5 * h, gamma),
            kick(0.5 * h, lambda),
            drift(h),
            kick(0.5 * h, lambda),
            damp(0.5 * h, gamma),
        ])),
        SchemeId::Ses => {
            let eta = (-gamma * h).exp();
            let k = -(-gamma * h).exp_m1() / gamma;
            let p2 = phi2(gamma * h) / (gamma * gamma);
            Some(Mat2::new(1.0 - p2 * lambda, k, -k * lambda, eta))
        }
        SchemeId::Roabao => None,
        SchemeId::OdEm | SchemeId::OdLm => unreachable!(),
    };
    Ok(ModeMatrix {
        scheme,
        lambda,
        h,
        gamma,
        fixed,
    })
}

impl ModeMatrix {
    pub fn is_randomized(&self) -> bool {
        self.fixed.is_none()
    }

    /// The fixed transition matrix; errors for rOABAO.
    pub fn matrix(&self) -> Result<Mat2> {
        self.fixed.ok_or(Error::UnsupportedScheme(
            self.scheme,
            "the transition matrix depends on the random midpoint; use at(u)",
        ))
    }

    /// Transition matrix for midpoint offset `u` (ignored unless randomized).
    pub fn at(&self, u: f64) -> Mat2 {
        match self.fixed {
            Some(p) => p,
            None => roabao_matrix(self.lambda, self.h, self.gamma, u),
        }
    }
}

/// Difference factor `1 − hλ` of OD-EM and OD-LM.
pub fn overdamped_mode_factor(lambda: f64, h: f64) -> f64 {
    1.0 - h * lambda
}

/// Rate of the slowest continuous-time mode at curvature `λ`:
/// `(γ − Re√(γ² − 4λ))/2`.
pub fn continuous_rate(lambda: f64, gamma: f64) -> f64 {
    let disc = gamma * gamma - 4.0 * lambda;
    if disc > 0.0 {
        // γ − √(γ² − 4λ) rewritten to avoid cancellation.
        2.0 * lambda / (gamma + disc.sqrt())
    } else {
        0.5 * gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralGap {
    pub gap: f64,
    pub max_modulus: f64,
    pub divergent: bool,
}

/// `1 − max |eig|` over the extreme modes `λ ∈ {m, M}`.
pub fn spectral_gap(scheme: SchemeId, m: f64, big_m: f64, h: f64, gamma: f64) -> Result<SpectralGap> {
    if !(m > 0.0 && m <= big_m) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < m <= M, got m = {m}, M = {big_m}"
        )));
    }
    if scheme == SchemeId::Roabao {
        return Err(Error::UnsupportedScheme(
            scheme,
            "random transition matrices have no single spectrum; use lyapunov_rate_roabao",
        ));
    }
    let modulus = |lambda: f64| -> Result<f64> {
        if scheme.is_kinetic() {
            Ok(mode_matrix(scheme, lambda, h, gamma)?.matrix()?.spectral_radius())
        } else {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
            }
            Ok(overdamped_mode_factor(lambda, h).abs())
        }
    };
    let max_modulus = modulus(m)?.max(modulus(big_m)?);
    Ok(SpectralGap {
        gap: 1.0 - max_modulus,
        max_modulus,
        divergent: !(max_modulus < 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{IntegratorParams, IntegratorState};
    use crate::noise::ZeroNoise;
    use crate::phase::PhaseState;
    use crate::potentials::{gaussian_potential, FullGradient};

    fn step_once(scheme: SchemeId, lambda: f64, h: f64, gamma: f64, z: [f64; 2]) -> [f64; 2] {
        let p = gaussian_potential(&[lambda]).unwrap();
        let mut g = FullGradient::new(&p);
        let mut s = IntegratorState::new(PhaseState::new(vec![z[0]], vec![z[1]]).unwrap());
        let params = IntegratorParams::new(h, gamma).unwrap();
        s.step(scheme, &mut g, &params, &mut ZeroNoise).unwrap();
        [s.phase.x[0], s.phase.v[0]]
    }

    #[test]
    fn em_example() {
        let p = mode_matrix(SchemeId::Em, 1.0, 0.1, 2.0).unwrap().matrix().unwrap();
        assert_eq!(p, Mat2::new(1.0, 0.1, -0.1, 0.8));
        let g = spectral_gap(SchemeId::Em, 1.0, 1.0, 0.1, 2.0).unwrap();
        assert!((g.gap - 0.1).abs() < 1e-12 && !g.divergent);
        assert!(spectral_gap(SchemeId::Em, 1.0, 10.0, 1.0, 2.0).unwrap().divergent);
    }

    #[test]
    fn columns_match_one_step() {
        for scheme in SchemeId::KINETIC {
            for (lambda, h, gamma) in [(1.0, 0.1, 2.0), (10.0, 0.05, 7.0), (3.3, 0.2, 0.5)] {
                let mm = mode_matrix(scheme, lambda, h, gamma).unwrap();
                // Zero noise puts the rOABAO midpoint at h/2.
                let p = mm.at(0.5 * h);
                for (j, e) in [[1.0, 0.0], [0.0, 1.0]].into_iter().enumerate() {
                    let got = step_once(scheme, lambda, h, gamma, e);
                    for i in 0..2 {
                        assert!((got[i] - p.get(i, j)).abs() < 1e-12, "{scheme} ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn identity_limit() {
        let h = 1e-6;
        for scheme in SchemeId::KINETIC {
            let (lambda, gamma) = (4.0, 3.0);
            let p = mode_matrix(scheme, lambda, h, gamma).unwrap().at(0.3 * h);
            assert!(p.sub(&Mat2::IDENTITY).frobenius() < 3.0 * (1.0 + lambda + gamma) * h, "{scheme}");
        }
    }

    #[test]
    fn roabao_needs_u() {
        let mm = mode_matrix(SchemeId::Roabao, 1.0, 0.1, 1.0).unwrap();
        assert!(mm.is_randomized() && mm.matrix().is_err());
        assert!(spectral_gap(SchemeId::Roabao, 1.0, 2.0, 0.1, 1.0).is_err());
        assert!(mode_matrix(SchemeId::OdEm, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn small_h_gap_tracks_continuous_rate() {
        let g4 = spectral_gap(SchemeId::Em, 1.0, 10.0, 1e-4, 3.0).unwrap().gap / 1e-4;
        let g5 = spectral_gap(SchemeId::Em, 1.0, 10.0, 1e-5, 3.0).unwrap().gap / 1e-5;
        assert!((g4 / g5 - 1.0).abs() < 0.01);
        let cont = continuous_rate(1.0, 3.0).min(continuous_rate(10.0, 3.0));
        assert!((g5 / cont - 1.0).abs() < 1e-3);
    }

    #[test]
    fn time_rescaling_leaves_moduli() {
        let s2: f64 = 2.7;
        let s = s2.sqrt();
        for scheme in SchemeId::KINETIC {
            let (lambda, h, gamma) = (1.7, 0.08, 4.0);
            let a = mode_matrix(scheme, lambda, h, gamma).unwrap().at(0.4 * h);
            let b = mode_matrix(scheme, lambda * s2, h / s, gamma * s).unwrap().at(0.4 * h / s);
            let (ma, mb) = (a.eigen_moduli(), b.eigen_moduli());
            assert!((ma.0 - mb.0).abs() < 1e-12 && (ma.1 - mb.1).abs() < 1e-12, "{scheme}");
        }
    }

    #[test]
    fn interior_modes_are_intermediate() {
        let (m, big_m) = (1.0, 10.0);
        for scheme in [SchemeId::Em, SchemeId::Baoab, SchemeId::Svv] {
            let gap = spectral_gap(scheme, m, big_m, 0.02, 8.0).unwrap();
            for lambda in [1.0, 2.5, 4.0, 7.0, 10.0] {
                let r = mode_matrix(scheme, lambda, 0.02, 8.0).unwrap().matrix().unwrap().spectral_radius();
                assert!(r <= gap.max_modulus + 1e-15);
            }
        }
    }

    #[test]
    fn parallel_contours_at_large_friction() {
        for scheme in [SchemeId::Bbk, SchemeId::Spv, SchemeId::Svv] {
            let (h, gamma) = (0.01, 40.0);
            let a = spectral_gap(scheme, 1.0, 10.0, h, gamma).unwrap().gap;
            let b = spectral_gap(scheme, 1.0, 10.0, h, 2.0 * gamma).unwrap().gap;
            let ratio = a / b;
            assert!((1.7..=2.3).contains(&ratio), "{scheme}: {ratio}");
        }
    }
}
