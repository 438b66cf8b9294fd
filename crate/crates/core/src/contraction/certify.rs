use serde::Serialize;

use super::constants::{constants_for, SchemeConstants};
use crate::error::{Error, Result};
use crate::integrators::SchemeId;
use crate::linalg::Mat2;
use crate::spectral::mode_matrix;

pub const DEFAULT_LAMBDA_POINTS: usize = 2048;
pub const DEFAULT_U_POINTS: usize = 256;

/// Entries of the symmetric form `H = [[A, B], [B, C]]` at one `(λ, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Coefficients {
    pub fn determinant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub scheme: SchemeId,
    pub m: f64,
    pub big_m: f64,
    pub gamma: f64,
    pub h: f64,
    pub lambda_points: usize,
    /// 1 for schemes without a midpoint parameter.
    pub u_points: usize,
    pub min_a: f64,
    pub min_determinant: f64,
    /// Largest gap between the transcribed polynomials and the form built
    /// from the difference map, relative to the entry scale. `None` for the
    /// extended schemes, which have no transcription.
    pub transcription_gap: Option<f64>,
    /// Certified through the extended route (single-step map only).
    pub extended: bool,
    pub pass: bool,
}

/// The difference map used in the proof: one gradient evaluation per step,
/// with the head and tail sub-steps split off.
fn proof_map(k: &SchemeConstants, lambda: f64, u: f64) -> Result<Mat2> {
    let (h, gamma) = (k.h, k.gamma);
    let eta = (-gamma * h).exp();
    Ok(match k.scheme {
        SchemeId::Bbk => {
            let d = 1.0 + 0.5 * gamma * h;
            let r = (1.0 - 0.5 * gamma * h) / d;
            let q = h * lambda / d;
            Mat2::new(1.0, h, -q, r - q * h)
        }
        SchemeId::Spv | SchemeId::Svv => {
            let kk = -(-gamma * h).exp_m1() / gamma;
            Mat2::new(1.0, h, -kk * lambda, eta - kk * lambda * h)
        }
        SchemeId::Roabao => Mat2::new(
            1.0 - 0.5 * h * h * lambda,
            h - 0.5 * h * h * lambda * u,
            -h * eta * lambda,
            eta - h * eta * lambda * u,
        ),
        // Extended route: the full single-step map.
        SchemeId::Em | SchemeId::Baoab | SchemeId::Obabo | SchemeId::Ses => {
            mode_matrix(k.scheme, lambda, h, gamma)?.matrix()?
        }
        _ => unreachable!("checked by certify"),
    })
}

/// `H = (1 − c)G − PᵀGP` with `G = [[1, b], [b, a]]`. `H ⪰ 0` is exactly
/// `‖Pz‖² ≤ (1 − c)‖z‖²` in the twisted norm.
pub fn form_from_map(k: &SchemeConstants, p: &Mat2) -> Coefficients {
    let g = Mat2::new(1.0, k.b, k.b, k.a);
    let h = g.scale(1.0 - k.c).sub(&p.transpose().mul(&g).mul(p));
    Coefficients {
        a: h.get(0, 0),
        b: 0.5 * (h.get(0, 1) + h.get(1, 0)),
        c: h.get(1, 1),
    }
}

/// The polynomial coefficients as written out in the proofs.
pub fn transcribed_form(k: &SchemeConstants, lambda: f64, u: f64) -> Result<Coefficients> {
    let (a, b, c, h, gamma) = (k.a, k.b, k.c, k.h, k.gamma);
    let l = lambda;
    let l2 = l * l;
    Ok(match k.scheme {
        SchemeId::Bbk => {
            let d = 0.5 * gamma * h + 1.0;
            let e = 1.0 - 0.5 * gamma * h;
            let d2 = d * d;
            Coefficients {
                a: -c + 2.0 * b * h * l / d - a * h * h * l2 / d2,
                b: b * gamma * h / d - h - b * c + l * (a * h * e / d2 + 2.0 * b * h * h / d)
                    - a * h.powi(3) * l2 / d2,
                c: a * (1.0 - c) - h * h - a * e * e / d2 - 2.0 * b * h * e / d
                    + l * (2.0 * a * h * h * e / d2 + 2.0 * b * h.powi(3) / d)
                    - a * h.powi(4) * l2 / d2,
            }
        }
        SchemeId::Spv | SchemeId::Svv => {
            let eta = (-gamma * h).exp();
            let ome = -(-gamma * h).exp_m1();
            let kk = ome / gamma;
            Coefficients {
                a: -c + 2.0 * b * kk * l - a * kk * kk * l2,
                b: b * ome - h - b * c + (a * eta * kk + 2.0 * b * h * kk) * l - a * h * kk * kk * l2,
                c: a * (1.0 - eta * eta) - a * c - 2.0 * b * eta * h - h * h + 2.0 * h * kk * (a * eta + b * h) * l
                    - a * kk * kk * h * h * l2,
            }
        }
        SchemeId::Roabao => {
            let eta = (-gamma * h).exp();
            let ome = -(-gamma * h).exp_m1();
            let (e2, h2, h3, h4) = (eta * eta, h * h, h.powi(3), h.powi(4));
            Coefficients {
                a: -c + l * (2.0 * b * eta * h + h2) + l2 * (-a * e2 * h2 - b * eta * h3 - 0.25 * h4),
                b: b * ome - h - b * c
                    + l * (a * e2 * h + 1.5 * b * eta * h2 + b * eta * h * u + 0.5 * h2 * u + 0.5 * h3)
                    + l2 * (-a * e2 * h2 * u - b * eta * h3 * u - 0.25 * h4 * u),
                c: a * (1.0 - e2) - a * c - 2.0 * b * eta * h - h2
                    + l * (2.0 * a * e2 * h * u + 3.0 * b * eta * h2 * u + h3 * u)
                    + l2 * (-a * e2 * h2 * u * u - b * eta * h3 * u * u - 0.25 * h4 * u * u),
            }
        }
        s => return Err(Error::UnsupportedScheme(s, "no transcribed polynomials for this scheme")),
    })
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else if i == n - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Evaluates `A(λ)` and `A(λ)C(λ) − B(λ)²` over a uniform `λ`-grid on
/// `[m, M]` (and a `u`-grid on `[0, h]` for rOABAO), with `a`, `b`, `c`
/// taken from [`constants_for`]. BBK, SPV, SVV and rOABAO are certified
/// from the proofs' difference maps and cross-checked against the
/// transcribed polynomials. EM, BAOAB, OBABO and SES need `extended` and
/// are certified on their single-step map only.
#[allow(clippy::too_many_arguments)]
pub fn certify(
    scheme: SchemeId,
    m: f64,
    big_m: f64,
    gamma: f64,
    h: f64,
    lambda_points: usize,
    u_points: usize,
    extended: bool,
) -> Result<CertificateReport> {
    let transcribed = matches!(scheme, SchemeId::Bbk | SchemeId::Spv | SchemeId::Svv | SchemeId::Roabao);
    if !scheme.is_kinetic() {
        return Err(Error::OverdampedScheme(scheme));
    }
    if !transcribed && !extended {
        return Err(Error::UnsupportedScheme(
            scheme,
            "certification of EM, BAOAB, OBABO and SES needs the extended flag",
        ));
    }
    if lambda_points < 2 || u_points == 0 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 lambda points and 1 u point, got {lambda_points} and {u_points}"
        )));
    }
    let k = constants_for(scheme, m, big_m, gamma, h)?;
    let u_count = if scheme == SchemeId::Roabao { u_points } else { 1 };
    let mut min_a = f64::INFINITY;
    let mut min_det = f64::INFINITY;
    let mut worst_gap: f64 = 0.0;
    for lambda in grid(m, big_m, lambda_points) {
        for u in grid(0.0, h, u_count) {
            let p = proof_map(&k, lambda, u)?;
            let f = form_from_map(&k, &p);
            if transcribed {
                let t = transcribed_form(&k, lambda, u)?;
                let scale = f.a.abs().max(f.b.abs()).max(f.c.abs()).max(k.a);
                for (x, y) in [(f.a, t.a), (f.b, t.b), (f.c, t.c)] {
                    worst_gap = worst_gap.max((x - y).abs() / scale);
                }
            }
            min_a = min_a.min(f.a);
            min_det = min_det.min(f.determinant());
        }
    }
    Ok(CertificateReport {
        scheme,
        m,
        big_m,
        gamma,
        h,
        lambda_points,
        u_points: u_count,
        min_a,
        min_determinant: min_det,
        transcription_gap: transcribed.then_some(worst_gap),
        extended: !transcribed,
        pass: min_a > 0.0 && min_det > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbk_example_passes() {
        let g = 120f64.sqrt();
        let r = certify(SchemeId::Bbk, 1.0, 10.0, g, 1.0 / (8.0 * g), 1001, 1, false).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.transcription_gap.unwrap() < 1e-12);
    }

    #[test]
    fn spv_example_and_a_lower_bound() {
        let g = 110f64.sqrt();
        let h = 1.0 / (4.0 * g);
        let r = certify(SchemeId::Spv, 1.0, 10.0, g, h, DEFAULT_LAMBDA_POINTS, 1, false).unwrap();
        assert!(r.pass);
        assert!(r.transcription_gap.unwrap() < 1e-12);
        let k = constants_for(SchemeId::Spv, 1.0, 10.0, g, h).unwrap();
        let ome = -(-g * h).exp_m1();
        for lambda in [1.0, 3.0, 10.0] {
            let f = form_from_map(&k, &proof_map(&k, lambda, 0.0).unwrap());
            let bound = h * lambda / g * (1.75 - ome * ome / (h * g));
            assert!(f.a >= bound - 1e-15);
        }
    }

    #[test]
    fn roabao_passes_inside_and_fails_far_outside() {
        let (m, big_m, g) = (1.0, 10.0, 5.0 * 10f64.sqrt());
        // h = (1 − η)/(4√M) solved by bisection.
        let h = crate::contraction::max_stepsize(SchemeId::Obabo, big_m, g).unwrap().unwrap();
        let r = certify(SchemeId::Roabao, m, big_m, g, h, 256, 64, false).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.transcription_gap.unwrap() < 1e-12);
        // Four times the ceiling h = (1 − η)/(2√M).
        let h2 = crate::contraction::max_stepsize(SchemeId::Roabao, big_m, g).unwrap().unwrap();
        let bad = certify(SchemeId::Roabao, m, big_m, g, 4.0 * h2, 256, 64, false).unwrap();
        assert!(!bad.pass);
    }

    #[test]
    fn extended_is_opt_in() {
        assert!(certify(SchemeId::Em, 1.0, 10.0, 7.0, 0.01, 100, 1, false).is_err());
        let r = certify(SchemeId::Em, 1.0, 10.0, 7.0, 0.01, 100, 1, true).unwrap();
        assert!(r.extended && r.transcription_gap.is_none());
        assert!(r.pass);
        assert!(certify(SchemeId::OdEm, 1.0, 10.0, 7.0, 0.01, 100, 1, true).is_err());
    }

    #[test]
    fn form_is_the_norm_contraction() {
        // zᵀHz = (1 − c)‖z‖² − ‖Pz‖² in the twisted norm.
        let k = constants_for(SchemeId::Bbk, 1.0, 10.0, 12.0, 0.01).unwrap();
        let p = proof_map(&k, 4.0, 0.0).unwrap();
        let f = form_from_map(&k, &p);
        let z = [0.7, -1.3];
        let pz = p.apply(z);
        let nsq = |w: [f64; 2]| w[0] * w[0] + 2.0 * k.b * w[0] * w[1] + k.a * w[1] * w[1];
        let quad = f.a * z[0] * z[0] + 2.0 * f.b * z[0] * z[1] + f.c * z[1] * z[1];
        assert!((quad - ((1.0 - k.c) * nsq(z) - nsq(pz))).abs() < 1e-14);
    }
}
