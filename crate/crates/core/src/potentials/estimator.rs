use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, BlrPotential};
use super::{GradientSource, Potential};
use crate::error::{Error, Result};
use crate::linalg::{dot, power_iteration_sym};
use crate::noise::{NoiseSource, NoiseStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Full,
    Subsampled,
    VarianceReduced,
}

#[derive(Debug)]
struct Anchor {
    point: Vec<f64>,
    /// Data part of the full gradient at `point`, accumulated in row order.
    data_gradient: Vec<f64>,
    /// `σ(⟨xʲ, point⟩)` per row.
    sigmoids: Vec<f64>,
}

/// Minibatch gradient estimator for a logistic-regression potential.
///
/// Each evaluation draws a fresh batch of `b` distinct rows, uniformly
/// without replacement, from the estimator's own stream. Cloning the
/// estimator clones the stream, so two clones fed the same evaluation
/// sequence see the same batches (synchronous coupling of the gradient
/// noise).
#[derive(Debug, Clone)]
pub struct StochasticGradient<'a> {
    potential: &'a BlrPotential,
    kind: EstimatorKind,
    batch_size: usize,
    anchor: Option<Arc<Anchor>>,
    noise: NoiseStream,
    evaluations: u64,
    batch: Vec<usize>,
    taken: Vec<bool>,
}

/// Builds an estimator. `anchor` is required for the variance-reduced kind
/// and ignored otherwise.
pub fn make_estimator<'a>(
    potential: &'a BlrPotential,
    kind: EstimatorKind,
    batch_size: usize,
    anchor: Option<&[f64]>,
    noise: NoiseStream,
) -> Result<StochasticGradient<'a>> {
    let n = potential.n_rows();
    if batch_size == 0 || batch_size > n {
        return Err(Error::InvalidParameter(format!(
            "batch size must lie in 1..={n}, got {batch_size}"
        )));
    }
    let anchor = match (kind, anchor) {
        (EstimatorKind::VarianceReduced, None) => {
            return Err(Error::InvalidParameter(
                "variance-reduced estimator needs an anchor point".into(),
            ))
        }
        (EstimatorKind::VarianceReduced, Some(a)) => {
            if a.len() != potential.dim() {
                return Err(Error::DimensionMismatch {
                    expected: potential.dim(),
                    actual: a.len(),
                });
            }
            let mut data_gradient = vec![0.0; a.len()];
            potential.data_gradient(a, &mut data_gradient);
            let t = potential.target();
            let sigmoids = (0..n).map(|j| sigmoid(dot(t.row(j), a))).collect();
            Some(Arc::new(Anchor {
                point: a.to_vec(),
                data_gradient,
                sigmoids,
            }))
        }
        _ => None,
    };
    Ok(StochasticGradient {
        potential,
        kind,
        batch_size,
        anchor,
        noise,
        evaluations: 0,
        batch: Vec::with_capacity(batch_size),
        taken: vec![false; n],
    })
}

impl<'a> StochasticGradient<'a> {
    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn potential(&self) -> &'a BlrPotential {
        self.potential
    }

    pub fn anchor(&self) -> Option<&[f64]> {
        self.anchor.as_deref().map(|a| a.point.as_slice())
    }

    pub fn is_stochastic(&self) -> bool {
        self.kind != EstimatorKind::Full && self.batch_size < self.potential.n_rows()
    }

    pub fn noise(&self) -> &NoiseStream {
        &self.noise
    }

    /// A copy drawing its batches from `noise`, with the evaluation count reset.
    pub fn with_noise(&self, noise: NoiseStream) -> Self {
        Self {
            noise,
            evaluations: 0,
            ..self.clone()
        }
    }

    /// Floyd's sampling of `b` distinct rows, then sorted so that summation
    /// order depends only on the set. For `b = N` this is `0..N`.
    fn draw_batch(&mut self) {
        let n = self.potential.n_rows();
        self.batch.clear();
        for j in (n - self.batch_size)..n {
            let t = self.noise.below(j as u64 + 1) as usize;
            let pick = if self.taken[t] { j } else { t };
            self.taken[pick] = true;
            self.batch.push(pick);
        }
        for &j in &self.batch {
            self.taken[j] = false;
        }
        self.batch.sort_unstable();
    }

    /// Gradient estimate on an explicit batch (rows need not be sorted).
    pub fn gradient_on_batch(&self, q: &[f64], batch: &[usize], out: &mut [f64]) {
        let p = self.potential;
        let scale = p.n_rows() as f64 / batch.len() as f64;
        match self.kind {
            EstimatorKind::Full => p.gradient(q, out),
            EstimatorKind::Subsampled => {
                out.fill(0.0);
                p.add_data_gradient(q, batch.iter().copied(), 1.0, out);
                let inv_var = p.inv_prior_variance();
                for (o, qi) in out.iter_mut().zip(q) {
                    *o = qi * inv_var + scale * *o;
                }
            }
            EstimatorKind::VarianceReduced => {
                let anchor = self.anchor.as_ref().expect("anchor checked at construction");
                let t = p.target();
                out.fill(0.0);
                for &j in batch {
                    let x = t.row(j);
                    let w = sigmoid(dot(x, q)) - anchor.sigmoids[j];
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o += w * xi;
                    }
                }
                let inv_var = p.inv_prior_variance();
                for ((o, qi), ga) in out.iter_mut().zip(q).zip(&anchor.data_gradient) {
                    *o = qi * inv_var + (ga + scale * *o);
                }
            }
        }
    }

    /// Draws the next batch from the stream (without evaluating anything).
    pub fn next_batch(&mut self) -> &[usize] {
        self.draw_batch();
        &self.batch
    }
}

impl GradientSource for StochasticGradient<'_> {
    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn gradient(&mut self, q: &[f64], out: &mut [f64]) {
        self.evaluations += 1;
        if self.kind == EstimatorKind::Full {
            self.potential.gradient(q, out);
            return;
        }
        self.draw_batch();
        let batch = std::mem::take(&mut self.batch);
        self.gradient_on_batch(q, &batch, out);
        self.batch = batch;
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CgMethod {
    Analytic,
    Sampled,
}

/// Bound on `E‖D_x𝒢(x, W) − ∇²U(x)‖²` (spectral norm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianVarianceBound {
    pub c_g: f64,
    pub method: CgMethod,
    /// 95% normal-approximation interval for the sampled estimate at the
    /// maximizing probe; collapses to `[c_g, c_g]` for the analytic case.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl JacobianVarianceBound {
    fn exact_zero() -> Self {
        Self {
            c_g: 0.0,
            method: CgMethod::Analytic,
            ci_low: 0.0,
            ci_high: 0.0,
        }
    }
}

const CG_POWER_ITERS: usize = 50;
const CG_POWER_TOL: f64 = 1e-10;

/// Squared spectral norm of the symmetric row-major `d × d` matrix `delta`,
/// via power iteration on `deltaᵀ delta`.
pub(crate) fn spectral_norm_sq(delta: &[f64], d: usize, scratch: &mut [f64]) -> f64 {
    if delta.iter().all(|&c| c == 0.0) {
        return 0.0;
    }
    let start: Vec<f64> = (0..d).map(|i| 1.0 + ((i * 7 + 3) % 11) as f64 / 11.0).collect();
    power_iteration_sym(d, &start, CG_POWER_ITERS, CG_POWER_TOL, |v, w| {
        for a in 0..d {
            scratch[a] = dot(&delta[a * d..(a + 1) * d], v);
        }
        for a in 0..d {
            w[a] = dot(&delta[a * d..(a + 1) * d], scratch);
        }
    })
}

/// Monte Carlo estimate of the Jacobian-variance constant at each probe; the
/// reported value is the largest per-probe mean.
///
/// Batches are drawn from the estimator's own stream, so this advances it.
pub fn estimate_cg(
    estimator: &mut StochasticGradient<'_>,
    probes: &[Vec<f64>],
    samples_per_point: usize,
) -> Result<JacobianVarianceBound> {
    if !estimator.is_stochastic() {
        return Ok(JacobianVarianceBound::exact_zero());
    }
    if samples_per_point < 2 {
        return Err(Error::InvalidParameter(
            "estimate_cg needs at least 2 samples per probe".into(),
        ));
    }
    if probes.is_empty() {
        return Err(Error::InvalidParameter("estimate_cg needs a probe point".into()));
    }
    let p = estimator.potential;
    let d = p.dim();
    let n = p.n_rows();
    let scale = n as f64 / estimator.batch_size as f64;
    let mut best: Option<JacobianVarianceBound> = None;
    let mut full = vec![0.0; d * d];
    let mut delta = vec![0.0; d * d];
    let mut scratch = vec![0.0; d];
    for q in probes {
        if q.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: q.len(),
            });
        }
        // The prior term is common to both Jacobians and cancels.
        full.fill(0.0);
        p.add_data_hessian(q, 0..n, 1.0, &mut full);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..samples_per_point {
            estimator.draw_batch();
            delta.fill(0.0);
            p.add_data_hessian(q, estimator.batch.iter().copied(), scale, &mut delta);
            for (dl, f) in delta.iter_mut().zip(&full) {
                *dl -= f;
            }
            let s = spectral_norm_sq(&delta, d, &mut scratch);
            sum += s;
            sum_sq += s * s;
        }
        let k = samples_per_point as f64;
        let mean = sum / k;
        let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
        let half = 1.96 * (var / k).sqrt();
        let here = JacobianVarianceBound {
            c_g: mean,
            method: CgMethod::Sampled,
            ci_low: (mean - half).max(0.0),
            ci_high: mean + half,
        };
        if best.is_none_or(|b| here.c_g > b.c_g) {
            best = Some(here);
        }
    }
    Ok(best.expect("at least one probe"))
}
