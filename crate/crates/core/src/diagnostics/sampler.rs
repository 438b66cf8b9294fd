use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ess::{batch_means_variance, ess};
use crate::error::{Error, Result};
use crate::integrators::{step_overdamped, IntegratorParams, IntegratorState, OverdampedState, SchemeId};
use crate::noise::{NoiseSource, NoiseStream};
use crate::phase::PhaseState;
use crate::potentials::{EstimatorKind, FullGradient, GradientSource, Potential};

/// Scalar test function of the position.
pub type TestFn<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerSettings {
    pub scheme: SchemeId,
    pub h: f64,
    /// Ignored by the overdamped schemes.
    pub gamma: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub replicas: usize,
    pub seed: u64,
    pub grad: EstimatorKind,
    /// `None` for exact gradients.
    pub batch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scheme: SchemeId,
    pub h: f64,
    pub gamma: f64,
    pub grad: EstimatorKind,
    pub batch: Option<usize>,
    /// Mean of the test function over all retained samples.
    pub mean: f64,
    /// Across-replica standard error (batch-means error for one replica).
    pub std_error: f64,
    /// Sum over replicas, each capped at its sample count.
    pub ess: f64,
    pub samples: usize,
    pub grad_evals: u64,
    /// First iteration at which some replica produced a non-finite state.
    pub failed_at: Option<usize>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl RunSummary {
    pub fn converged(&self) -> bool {
        self.failed_at.is_none() && self.mean.is_finite()
    }
}

struct ReplicaOutcome {
    trace: Vec<f64>,
    evals: u64,
    failed_at: Option<usize>,
}

fn run_replica<G: GradientSource>(
    s: &SamplerSettings,
    params: Option<&IntegratorParams>,
    start: &[f64],
    mut grad: G,
    test_fn: &TestFn<'_>,
    r: u64,
) -> Result<ReplicaOutcome> {
    let n = start.len();
    let mut noise = NoiseStream::new(s.seed, r);
    let mut trace = Vec::with_capacity(s.iterations - s.burn_in);
    let mut failed_at = None;
    if let Some(params) = params {
        let mut v = vec![0.0; n];
        noise.standard_normals(&mut v);
        let mut state = IntegratorState::new(PhaseState::new(start.to_vec(), v)?);
        for k in 0..s.iterations {
            match state.step(s.scheme, &mut grad, params, &mut noise) {
                Ok(()) => {}
                Err(Error::NonFinite { .. }) => {
                    failed_at = Some(k);
                    break;
                }
                Err(e) => return Err(e),
            }
            if k >= s.burn_in {
                trace.push(test_fn(&state.phase.x));
            }
        }
    } else {
        let mut state = OverdampedState::new(start.to_vec());
        for k in 0..s.iterations {
            match step_overdamped(s.scheme, &mut state, &mut grad, s.h, &mut noise) {
                Ok(()) => {}
                Err(Error::NonFinite { .. }) => {
                    failed_at = Some(k);
                    break;
                }
                Err(e) => return Err(e),
            }
            if k >= s.burn_in {
                trace.push(test_fn(&state.x));
            }
        }
    }
    Ok(ReplicaOutcome {
        trace,
        evals: grad.evaluations(),
        failed_at,
    })
}

/// Runs `replicas` independent chains from `start` (velocities drawn from
/// `N(0, I)`), replica `r` on stream `r` of the seed, with gradient source
/// `make_grad(r)`. The test function defaults to the potential.
pub fn run_sampler<P, G, F>(
    settings: &SamplerSettings,
    potential: &P,
    start: &[f64],
    make_grad: F,
    test_fn: Option<&TestFn<'_>>,
) -> Result<RunSummary>
where
    P: Potential,
    G: GradientSource,
    F: Fn(u64) -> G + Sync,
{
    let s = settings;
    if s.burn_in >= s.iterations {
        return Err(Error::InvalidParameter(format!(
            "burn-in {} leaves no samples out of {} iterations",
            s.burn_in, s.iterations
        )));
    }
    if s.replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }
    if start.len() != potential.dim() {
        return Err(Error::DimensionMismatch {
            expected: potential.dim(),
            actual: start.len(),
        });
    }
    let params = if s.scheme.is_kinetic() {
        Some(IntegratorParams::new(s.h, s.gamma)?)
    } else {
        None
    };
    let default_fn = |x: &[f64]| potential.value(x);
    let f: &TestFn<'_> = match test_fn {
        Some(f) => f,
        None => &default_fn,
    };
    let clock = Instant::now();
    let outcomes = (0..s.replicas as u64)
        .into_par_iter()
        .map(|r| run_replica(s, params.as_ref(), start, make_grad(r), f, r))
        .collect::<Result<Vec<_>>>()?;
    let wall_time_secs = clock.elapsed().as_secs_f64();

    let grad_evals = outcomes.iter().map(|o| o.evals).sum();
    let failed_at = outcomes.iter().filter_map(|o| o.failed_at).min();
    let samples = outcomes.iter().map(|o| o.trace.len()).sum();
    let mut summary = RunSummary {
        scheme: s.scheme,
        h: s.h,
        gamma: s.gamma,
        grad: s.grad,
        batch: s.batch,
        mean: f64::NAN,
        std_error: f64::NAN,
        ess: f64::NAN,
        samples,
        grad_evals,
        failed_at,
        wall_time_secs,
    };
    if failed_at.is_some() {
        return Ok(summary);
    }
    let means: Vec<f64> = outcomes
        .iter()
        .map(|o| o.trace.iter().sum::<f64>() / o.trace.len() as f64)
        .collect();
    let r = means.len() as f64;
    summary.mean = means.iter().sum::<f64>() / r;
    summary.std_error = if means.len() > 1 {
        let var = means.iter().map(|m| (m - summary.mean).powi(2)).sum::<f64>() / (r - 1.0);
        (var / r).sqrt()
    } else {
        let t = &outcomes[0].trace;
        batch_means_variance(t).map(|v| (v / t.len() as f64).sqrt()).unwrap_or(f64::NAN)
    };
    summary.ess = outcomes
        .iter()
        .map(|o| ess(&o.trace).map(|e| e.min(o.trace.len() as f64)).unwrap_or(f64::NAN))
        .sum();
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellStatus {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "N.A.")]
    NotConverged,
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellStatus::Ok => "ok",
            CellStatus::NotConverged => "N.A.",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasCell {
    pub summary: RunSummary,
    pub bias: f64,
    /// `√(SE² + SE_ref²)`.
    pub se: f64,
    pub evals_per_ess: f64,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasTable {
    pub reference: f64,
    pub reference_se: f64,
    /// Whether `reference` was computed by the internal BAOAB run.
    pub internal_reference: bool,
    pub cells: Vec<BiasCell>,
}

/// Where the reference mean comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Known value with its standard error.
    Given { mean: f64, se: f64 },
    /// BAOAB with exact gradients at a quarter of the smallest stepsize,
    /// the first kinetic cell's friction, and ten times the iterations.
    Internal,
}

/// Bias of the test-function mean for each `(scheme, h, γ)` cell against a
/// reference. Diverged cells are reported as N.A. rather than errors.
#[allow(clippy::too_many_arguments)]
pub fn bias_table<P, G, F>(
    cells: &[(SchemeId, f64, f64)],
    potential: &P,
    start: &[f64],
    make_grad: F,
    grad: EstimatorKind,
    batch: Option<usize>,
    reference: Reference,
    iterations: usize,
    burn_in: usize,
    replicas: usize,
    seed: u64,
    test_fn: Option<&TestFn<'_>>,
) -> Result<BiasTable>
where
    P: Potential,
    G: GradientSource,
    F: Fn(u64) -> G + Sync,
{
    if cells.is_empty() {
        return Err(Error::InvalidParameter("bias table needs at least one cell".into()));
    }
    let (reference, reference_se, internal) = match reference {
        Reference::Given { mean, se } => (mean, se, false),
        Reference::Internal => {
            let h_min = cells.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let gamma = cells.iter().map(|c| c.2).find(|g| g.is_finite()).ok_or_else(|| {
                Error::InvalidParameter("internal reference needs a kinetic cell for its friction".into())
            })?;
            let settings = SamplerSettings {
                scheme: SchemeId::Baoab,
                h: 0.25 * h_min,
                gamma,
                iterations: 10 * iterations,
                burn_in: 10 * burn_in,
                replicas,
                seed: seed ^ 0x005e_ed0f_5eed,
                grad: EstimatorKind::Full,
                batch: None,
            };
            let s = run_sampler(&settings, potential, start, |_| FullGradient::new(potential), test_fn)?;
            if !s.converged() {
                return Err(Error::Degenerate("internal reference run diverged".into()));
            }
            (s.mean, s.std_error, true)
        }
    };
    let mut out = Vec::with_capacity(cells.len());
    for (i, &(scheme, h, gamma)) in cells.iter().enumerate() {
        let settings = SamplerSettings {
            scheme,
            h,
            gamma,
            iterations,
            burn_in,
            replicas,
            seed: seed.wrapping_add(i as u64),
            grad,
            batch,
        };
        let summary = run_sampler(&settings, potential, start, &make_grad, test_fn)?;
        let ok = summary.converged();
        out.push(BiasCell {
            bias: if ok { summary.mean - reference } else { f64::NAN },
            se: if ok {
                summary.std_error.hypot(reference_se)
            } else {
                f64::NAN
            },
            evals_per_ess: if ok {
                summary.grad_evals as f64 / summary.ess
            } else {
                f64::NAN
            },
            status: if ok { CellStatus::Ok } else { CellStatus::NotConverged },
            summary,
        });
    }
    Ok(BiasTable {
        reference,
        reference_se,
        internal_reference: internal,
        cells: out,
    })
}
