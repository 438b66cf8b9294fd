use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{one_minus_eta, SchemeId};
use crate::phase::ModifiedNorm;

/// Whether the bound at step `k` uses `(1 − c)^k` or `(1 − c)^{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepExponent {
    K,
    KMinusOne,
}

impl StepExponent {
    pub fn at(self, k: usize) -> usize {
        match self {
            StepExponent::K => k,
            StepExponent::KMinusOne => k.saturating_sub(1),
        }
    }
}

/// Deterministic-gradient contraction constants for one scheme at `(γ, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConstants {
    pub scheme: SchemeId,
    pub m: f64,
    pub big_m: f64,
    pub gamma: f64,
    pub h: f64,
    /// Stepsize ceiling. For the splitting schemes it depends on `η` and
    /// hence on `h` itself.
    pub h0: f64,
    /// Friction floor. For the splitting schemes this is the smallest `γ`
    /// for which `h < h0` has any solution, and `gamma0_implicit` is set.
    pub gamma0: f64,
    pub gamma0_implicit: bool,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub big_c: f64,
    pub s: StepExponent,
}

/// `α` in `h0 = (1 − η)/(α√M)` for the splitting schemes.
fn implicit_alpha(scheme: SchemeId) -> Option<f64> {
    match scheme {
        SchemeId::Baoab | SchemeId::Roabao => Some(2.0),
        SchemeId::Obabo => Some(4.0),
        _ => None,
    }
}

fn validate(m: f64, big_m: f64, gamma: f64, h: f64) -> Result<()> {
    if !(m > 0.0 && m <= big_m && big_m.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < m <= M, got m = {m}, M = {big_m}"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite() && h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need gamma > 0 and h > 0, got gamma = {gamma}, h = {h}"
        )));
    }
    Ok(())
}

pub fn constants_for(scheme: SchemeId, m: f64, big_m: f64, gamma: f64, h: f64) -> Result<SchemeConstants> {
    if !scheme.is_kinetic() {
        return Err(Error::OverdampedScheme(scheme));
    }
    validate(m, big_m, gamma, h)?;
    let sm = big_m.sqrt();
    let ome = one_minus_eta(gamma, h)?;
    let (h0, gamma0, b, c, big_c, s) = match scheme {
        SchemeId::Em => (0.5 / gamma, 2.0 * sm, 1.0 / gamma, m * h / (2.0 * gamma), 1.0, StepExponent::K),
        SchemeId::Bbk => (
            0.25 / gamma,
            (12.0 * big_m).sqrt(),
            0.5 * h + 1.0 / gamma,
            m * h / (4.0 * gamma),
            7.0,
            StepExponent::KMinusOne,
        ),
        SchemeId::Spv | SchemeId::Svv => (
            0.5 / gamma,
            (11.0 * big_m).sqrt(),
            h / ome,
            m * h / (4.0 * gamma),
            7.0,
            StepExponent::KMinusOne,
        ),
        SchemeId::Ses => (0.5 / gamma, 5.0 * sm, 1.0 / gamma, m * h / (4.0 * gamma), 1.0, StepExponent::K),
        _ => {
            let alpha = implicit_alpha(scheme).expect("splitting scheme");
            (
                ome / (alpha * sm),
                alpha * sm,
                h / ome,
                h * h * m / (4.0 * ome),
                7.0,
                StepExponent::KMinusOne,
            )
        }
    };
    let k = SchemeConstants {
        scheme,
        m,
        big_m,
        gamma,
        h,
        h0,
        gamma0,
        gamma0_implicit: implicit_alpha(scheme).is_some(),
        a: 1.0 / big_m,
        b,
        c,
        big_c,
        s,
    };
    if k.in_region() {
        if k.b * k.b >= k.a {
            return Err(Error::NormNotEquivalent { a: k.a, b: k.b });
        }
        if !(k.c > 0.0 && k.c < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rate c = {} outside (0, 1) inside the region of {scheme}",
                k.c
            )));
        }
    }
    Ok(k)
}

impl SchemeConstants {
    /// `h < h0` and `γ ≥ γ0` (for the splitting schemes only the former).
    pub fn in_region(&self) -> bool {
        if self.gamma0_implicit {
            self.h < self.h0
        } else {
            self.h < self.h0 && self.gamma >= self.gamma0
        }
    }

    pub fn norm(&self) -> Result<ModifiedNorm> {
        ModifiedNorm::new(self.a, self.b)
    }

    /// `C (1 − c)^s`, the bound on the squared norm ratio after `k` steps.
    pub fn squared_bound(&self, k: usize) -> f64 {
        self.big_c * (1.0 - self.c).powi(self.s.at(k) as i32)
    }
}

/// Supremum of admissible stepsizes at friction `γ`, or `None` when no
/// stepsize is admissible. For the splitting schemes this solves
/// `h = (1 − e^{−γh})/(α√M)` by bisection.
pub fn max_stepsize(scheme: SchemeId, big_m: f64, gamma: f64) -> Result<Option<f64>> {
    if !scheme.is_kinetic() {
        return Err(Error::OverdampedScheme(scheme));
    }
    validate(big_m, big_m, gamma, 1.0)?;
    let sm = big_m.sqrt();
    let explicit = |gamma0: f64, h0: f64| if gamma >= gamma0 { Some(h0) } else { None };
    Ok(match scheme {
        SchemeId::Em => explicit(2.0 * sm, 0.5 / gamma),
        SchemeId::Bbk => explicit((12.0 * big_m).sqrt(), 0.25 / gamma),
        SchemeId::Spv | SchemeId::Svv => explicit((11.0 * big_m).sqrt(), 0.5 / gamma),
        SchemeId::Ses => explicit(5.0 * sm, 0.5 / gamma),
        _ => {
            let alpha = implicit_alpha(scheme).expect("splitting scheme");
            let slack = |h: f64| -(-gamma * h).exp_m1() / (alpha * sm) - h;
            if gamma <= alpha * sm {
                None
            } else {
                // slack is concave with slack(0) = 0 and slack'(0) > 0, so its
                // positive root is unique and below 1/(α√M).
                let mut lo = 0.0;
                let mut hi = 1.0 / (alpha * sm);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if slack(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(lo)
            }
        }
    })
}

/// Stochastic-gradient constants: the rate is penalized by the Jacobian
/// variance bound `C_G` and the preconstant grows with `h²C_G/M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticSchemeConstants {
    pub base: SchemeConstants,
    pub c_g: f64,
    pub c: f64,
    pub big_c: f64,
    /// `c ≤ 0`: the bound says nothing.
    pub vacuous: bool,
}

impl StochasticSchemeConstants {
    /// `C(h) (1 − c)^s`, the bound on `E‖Δz_k‖² / ‖Δz_0‖²`.
    pub fn squared_bound(&self, k: usize) -> f64 {
        self.big_c * (1.0 - self.c).powi(self.base.s.at(k) as i32)
    }
}

pub fn constants_for_sg(
    scheme: SchemeId,
    m: f64,
    big_m: f64,
    gamma: f64,
    h: f64,
    c_g: f64,
) -> Result<StochasticSchemeConstants> {
    if !(c_g >= 0.0 && c_g.is_finite()) {
        return Err(Error::InvalidParameter(format!("C_G must be finite and >= 0, got {c_g}")));
    }
    let base = constants_for(scheme, m, big_m, gamma, h)?;
    let r = h * h * c_g / big_m;
    let eta = (-gamma * h).exp();
    let splitting_penalty = 5.0 * h * h * c_g * (eta / big_m + 0.25 * h * h);
    let (penalty, big_c) = match scheme {
        SchemeId::Em => (2.0 * r, 1.0),
        SchemeId::Bbk => (4.0 * r, 7.0 + 3.0 * r),
        SchemeId::Spv => (4.0 * r, 7.0 + 12.0 * r),
        SchemeId::Svv => (4.0 * r, 7.0 + 6.0 * r),
        SchemeId::Baoab => (splitting_penalty, 7.0 + 3.0 * r),
        SchemeId::Obabo => (4.0 * r, 8.0 + 3.0 * r),
        SchemeId::Roabao => (splitting_penalty, 8.0 + 8.0 * r),
        SchemeId::Ses => (4.0 * r, 1.0),
        _ => unreachable!("constants_for rejects overdamped schemes"),
    };
    let c = base.c - penalty;
    Ok(StochasticSchemeConstants {
        base,
        c_g,
        c,
        big_c,
        vacuous: c <= 0.0,
    })
}

/// Overdamped squared-distance rate `hm(2 − hM) − h²C_G`.
pub fn overdamped_rate(m: f64, big_m: f64, h: f64, c_g: f64) -> f64 {
    h * m * (2.0 - h * big_m) - h * h * c_g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn em_row() {
        let g = 2.0 * 10f64.sqrt();
        let k = constants_for(SchemeId::Em, 1.0, 10.0, g, 0.05).unwrap();
        assert!((k.c - 0.05 / (2.0 * g)).abs() < 1e-16);
        assert!((k.c - 0.003953).abs() < 1e-6);
        assert!((k.h0 - 0.0791).abs() < 1e-4);
        assert_eq!(k.a, 0.1);
        assert_eq!((k.big_c, k.s), (1.0, StepExponent::K));
        assert!(k.in_region());
    }

    #[test]
    fn ses_isotropic() {
        let k = constants_for(SchemeId::Ses, 4.0, 4.0, 10.0, 0.05).unwrap();
        assert!((k.c - 0.005).abs() < 1e-16);
        assert!((k.b - 0.1).abs() < 1e-16);
        assert!(k.b * k.b < k.a && k.a == 0.25);
    }

    #[test]
    fn baoab_small_gamma_h() {
        let (g, h) = (20.0, 1e-7);
        let k = constants_for(SchemeId::Baoab, 1.0, 10.0, g, h).unwrap();
        let lim = h / (4.0 * g);
        assert!((k.c / lim - 1.0).abs() < 1e-5);
    }

    #[test]
    fn overdamped_rejected() {
        assert!(matches!(
            constants_for(SchemeId::OdEm, 1.0, 10.0, 1.0, 0.1),
            Err(Error::OverdampedScheme(_))
        ));
        assert!(constants_for(SchemeId::Em, 2.0, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn sg_reduces_at_zero() {
        for scheme in SchemeId::KINETIC {
            let base = constants_for(scheme, 1.0, 10.0, 15.0, 0.01).unwrap();
            let sg = constants_for_sg(scheme, 1.0, 10.0, 15.0, 0.01, 0.0).unwrap();
            assert_eq!(sg.c, base.c);
            assert!(sg.big_c == base.big_c || sg.big_c == 8.0);
        }
    }

    #[test]
    fn em_sg_vacuous() {
        let g = 2.0 * 10f64.sqrt();
        let sg = constants_for_sg(SchemeId::Em, 1.0, 10.0, g, 0.05, 10.0).unwrap();
        assert!((sg.c - (0.05 / (2.0 * g) - 0.005)).abs() < 1e-16);
        assert!((sg.c + 0.001047).abs() < 1e-6);
        assert!(sg.vacuous);
    }

    #[test]
    fn baoab_sg_high_friction_penalty() {
        let (h, cg) = (0.1, 0.3);
        let sg = constants_for_sg(SchemeId::Baoab, 1.0, 10.0, 1e4, h, cg).unwrap();
        let penalty = sg.base.c - sg.c;
        assert!((penalty - 1.25 * h.powi(4) * cg).abs() < 1e-15);
    }

    #[test]
    fn implicit_ceiling_solves_fixed_point() {
        for scheme in [SchemeId::Baoab, SchemeId::Obabo, SchemeId::Roabao] {
            assert_eq!(max_stepsize(scheme, 10.0, 3.0).unwrap(), None);
            let g = 30.0;
            let hs = max_stepsize(scheme, 10.0, g).unwrap().unwrap();
            let k = constants_for(scheme, 1.0, 10.0, g, hs).unwrap();
            assert!((k.h0 - hs).abs() < 1e-12);
            assert!(constants_for(scheme, 1.0, 10.0, g, 0.5 * hs).unwrap().in_region());
            assert!(!constants_for(scheme, 1.0, 10.0, g, 1.5 * hs).unwrap().in_region());
        }
    }

    #[test]
    fn explicit_rates_monotone() {
        for scheme in [SchemeId::Em, SchemeId::Bbk, SchemeId::Spv, SchemeId::Svv, SchemeId::Ses] {
            let c = |g: f64, h: f64| constants_for(scheme, 1.0, 10.0, g, h).unwrap().c;
            assert!(c(20.0, 0.01) > c(20.0, 0.005));
            assert!(c(20.0, 0.01) > c(25.0, 0.01));
        }
    }
}
