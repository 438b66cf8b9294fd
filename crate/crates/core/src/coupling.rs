//! Synchronously coupled chain pairs.

use crate::error::{Error, Result};
use crate::integrators::{IntegratorParams, IntegratorState, SchemeId};
use crate::noise::NoiseStream;
use crate::phase::{ModifiedNorm, PhaseState};
use crate::potentials::GradientSource;

/// Two chains driven by one noise stream. Each step replays the same draws
/// into both chains and checks that they consumed the same number of words.
#[derive(Debug, Clone)]
pub struct CouplingPair {
    pub a: IntegratorState,
    pub b: IntegratorState,
    noise: NoiseStream,
}

impl CouplingPair {
    pub fn new(a: PhaseState, b: PhaseState, noise: NoiseStream) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                actual: b.dim(),
            });
        }
        Ok(Self {
            a: IntegratorState::new(a),
            b: IntegratorState::new(b),
            noise,
        })
    }

    pub fn noise(&self) -> &NoiseStream {
        &self.noise
    }

    pub fn distance_sq(&self, norm: &ModifiedNorm) -> f64 {
        norm.distance_sq(&self.a.phase, &self.b.phase)
    }

    /// One coupled step. The gradient sources must themselves be coupled
    /// (clones of one estimator) for stochastic gradients.
    pub fn step<GA, GB>(
        &mut self,
        scheme: SchemeId,
        grad_a: &mut GA,
        grad_b: &mut GB,
        params: &IntegratorParams,
    ) -> Result<()>
    where
        GA: GradientSource + ?Sized,
        GB: GradientSource + ?Sized,
    {
        let mut na = self.noise.clone();
        let mut nb = self.noise.clone();
        self.a.step(scheme, grad_a, params, &mut na)?;
        self.b.step(scheme, grad_b, params, &mut nb)?;
        assert_eq!(
            na.counter(),
            nb.counter(),
            "coupled chains drew different amounts of noise"
        );
        self.noise = na;
        Ok(())
    }
}
