use serde::Serialize;

use super::overdamped::{step_overdamped, OverdampedState};
use super::params::IntegratorParams;
use super::scheme::SchemeId;
use super::state::IntegratorState;
use crate::error::{Error, Result};
use crate::noise::{NoiseSource, NoiseStream, RecordingNoise, ScriptedNoise};
use crate::phase::PhaseState;
use crate::potentials::{gaussian_potential, FullGradient, Potential};

#[derive(Debug, Clone, Serialize)]
pub struct GlcReport {
    pub scheme: SchemeId,
    pub h: f64,
    pub steps: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Runs `scheme` with `η = 0` against its overdamped limit map on matched
/// noise: 100 steps on the 2D Gaussian with curvatures 1 and 10.
pub fn glc_limit_check(scheme: SchemeId, h: f64, tolerance: f64, seed: u64) -> Result<GlcReport> {
    let target = gaussian_potential(&[1.0, 10.0])?;
    glc_limit_check_with(scheme, &target, &[1.0, -1.0], h, 100, tolerance, seed)
}

/// General form of [`glc_limit_check`]: the limit of BAOAB is OD-LM and that
/// of OBABO is OD-EM, both with stepsize `h²/2`; rOABAO tends to
/// `x' = x − (h²/2)∇U(x + uξ) + hξ`.
pub fn glc_limit_check_with<P: Potential>(
    scheme: SchemeId,
    potential: &P,
    x0: &[f64],
    h: f64,
    steps: usize,
    tolerance: f64,
    seed: u64,
) -> Result<GlcReport> {
    match scheme {
        SchemeId::Baoab | SchemeId::Obabo | SchemeId::Roabao => {}
        SchemeId::Bbk | SchemeId::Spv | SchemeId::Svv => return Err(Error::NotGlc(scheme)),
        _ => return Err(Error::UnsupportedScheme(scheme, "limit check covers BAOAB, OBABO, rOABAO")),
    }
    let n = potential.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x0.len(),
        });
    }
    let params = IntegratorParams::high_friction_limit(h)?;
    let delta = 0.5 * h * h;
    let mut kin_grad = FullGradient::new(potential);
    let mut lim_grad = FullGradient::new(potential);
    let mut noise = NoiseStream::new(seed, 0);

    let mut v0 = vec![0.0; n];
    let mut lim = OverdampedState::new(x0.to_vec());
    if scheme == SchemeId::Baoab {
        // v₀ = ξ₀ − (h/2)∇U(x₀) puts BAOAB on the OD-LM path with carry ξ₀.
        let mut xi0 = vec![0.0; n];
        noise.standard_normals(&mut xi0);
        let mut g = vec![0.0; n];
        potential.gradient(x0, &mut g);
        for i in 0..n {
            v0[i] = xi0[i] - 0.5 * h * g[i];
        }
        lim = OverdampedState::with_carried_noise(x0.to_vec(), xi0)?;
    }
    let mut kin = IntegratorState::new(PhaseState::new(x0.to_vec(), v0)?);
    let mut rec = RecordingNoise::new(noise.clone());
    let mut lm_noise = noise;
    let mut worst: f64 = 0.0;
    let mut g = vec![0.0; n];
    let mut y = vec![0.0; n];
    for _ in 0..steps {
        rec.clear();
        kin.step(scheme, &mut kin_grad, &params, &mut rec)?;
        match scheme {
            SchemeId::Baoab => {
                step_overdamped(SchemeId::OdLm, &mut lim, &mut lim_grad, delta, &mut lm_noise)?;
            }
            SchemeId::Obabo => {
                let mut first = ScriptedNoise::new(vec![rec.normals[0].clone()], vec![]);
                step_overdamped(SchemeId::OdEm, &mut lim, &mut lim_grad, delta, &mut first)?;
            }
            _ => {
                let u = h * rec.uniforms[0];
                let xi = &rec.normals[0];
                for i in 0..n {
                    y[i] = lim.x[i] + u * xi[i];
                }
                potential.gradient(&y, &mut g);
                for i in 0..n {
                    lim.x[i] += -delta * g[i] + h * xi[i];
                }
            }
        }
        for (a, b) in kin.phase.x.iter().zip(&lim.x) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(GlcReport {
        scheme,
        h,
        steps,
        max_deviation: worst,
        tolerance,
        pass: worst < tolerance,
    })
}
