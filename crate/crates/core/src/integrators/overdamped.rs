use serde::{Deserialize, Serialize};

use super::scheme::SchemeId;
use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::potentials::GradientSource;

/// Position of an overdamped chain. OD-LM also carries `ξ_k` between steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverdampedState {
    pub x: Vec<f64>,
    carried_noise: Option<Vec<f64>>,
}

impl OverdampedState {
    pub fn new(x: Vec<f64>) -> Self {
        Self {
            x,
            carried_noise: None,
        }
    }

    /// OD-LM state whose first step averages `xi0` with a fresh draw.
    pub fn with_carried_noise(x: Vec<f64>, xi0: Vec<f64>) -> Result<Self> {
        if xi0.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: xi0.len(),
            });
        }
        Ok(Self {
            x,
            carried_noise: Some(xi0),
        })
    }
}

/// One step of OD-EM, `x' = x − h∇U(x) + √(2h) ξ`, or OD-LM,
/// `x' = x − h∇U(x) + √(2h)(ξ_k + ξ_{k+1})/2`.
pub fn step_overdamped<G, N>(
    scheme: SchemeId,
    state: &mut OverdampedState,
    grad: &mut G,
    h: f64,
    noise: &mut N,
) -> Result<()>
where
    G: GradientSource + ?Sized,
    N: NoiseSource + ?Sized,
{
    if scheme.is_kinetic() {
        return Err(Error::KineticScheme(scheme));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let n = state.x.len();
    if grad.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: grad.dim(),
        });
    }
    let mut g = vec![0.0; n];
    grad.gradient(&state.x, &mut g);
    let sd = (2.0 * h).sqrt();
    match scheme {
        SchemeId::OdEm => {
            let mut xi = vec![0.0; n];
            noise.standard_normals(&mut xi);
            for i in 0..n {
                state.x[i] += -h * g[i] + sd * xi[i];
            }
        }
        _ => {
            let prev = match state.carried_noise.take() {
                Some(p) => p,
                None => {
                    let mut p = vec![0.0; n];
                    noise.standard_normals(&mut p);
                    p
                }
            };
            let mut next = vec![0.0; n];
            noise.standard_normals(&mut next);
            for i in 0..n {
                state.x[i] += -h * g[i] + sd * (0.5 * (prev[i] + next[i]));
            }
            state.carried_noise = Some(next);
        }
    }
    if state.x.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite { scheme, step: 0 });
    }
    Ok(())
}
