use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Potential;
use crate::error::{Error, Result};
use crate::linalg::{dot, power_iteration_sym};
use crate::noise::{NoiseSource, NoiseStream};

/// Binary classification data with a Gaussian prior `N(0, σ² I)` on weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegressionTarget {
    /// Row-major `N × d`.
    features: Vec<f64>,
    labels: Vec<u8>,
    dim: usize,
    prior_variance: f64,
}

impl LogisticRegressionTarget {
    pub fn new(features: Vec<f64>, labels: Vec<u8>, dim: usize, prior_variance: f64) -> Result<Self> {
        if dim == 0 || labels.is_empty() {
            return Err(Error::InvalidParameter("dataset needs N >= 1 and d >= 1".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * dim,
                actual: features.len(),
            });
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
        }
        if !(prior_variance > 0.0 && prior_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "prior variance must be positive, got {prior_variance}"
            )));
        }
        if features.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidParameter("features must be finite".into()));
        }
        Ok(Self {
            features,
            labels,
            dim,
            prior_variance,
        })
    }

    pub fn with_prior_variance(mut self, prior_variance: f64) -> Result<Self> {
        if !(prior_variance > 0.0 && prior_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "prior variance must be positive, got {prior_variance}"
            )));
        }
        self.prior_variance = prior_variance;
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.dim..(j + 1) * self.dim]
    }

    pub fn label(&self, j: usize) -> u8 {
        self.labels[j]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// CSV with header `y,x1,...,xd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "y")?;
        for i in 1..=self.dim {
            write!(w, ",x{i}")?;
        }
        writeln!(w)?;
        for j in 0..self.n_rows() {
            write!(w, "{}", self.labels[j])?;
            for f in self.row(j) {
                write!(w, ",{f:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    let r = 1.0 / (1.0 + e);
    if t >= 0.0 {
        r
    } else {
        e * r
    }
}

/// Rows per product in `value`. Each factor `1 + e^{-|t|}` lies in
/// `(1, 2]`, so a block cannot overflow.
const LOG_BLOCK: usize = 64;

/// Bayesian logistic regression posterior potential
/// `U(q) = ‖q‖²/(2σ²) + Σⱼ [log(1 + exp⟨xʲ,q⟩) − yʲ⟨xʲ,q⟩]`.
#[derive(Debug, Clone)]
pub struct BlrPotential {
    target: LogisticRegressionTarget,
    inv_var: f64,
    big_m: f64,
}

pub fn blr_potential(target: LogisticRegressionTarget) -> Result<BlrPotential> {
    BlrPotential::new(target)
}

impl BlrPotential {
    pub fn new(target: LogisticRegressionTarget) -> Result<Self> {
        if target.n_rows() == 0 {
            return Err(Error::Degenerate("empty dataset".into()));
        }
        let inv_var = 1.0 / target.prior_variance;
        let lam = gram_lambda_max(&target);
        Ok(Self {
            inv_var,
            big_m: inv_var + 0.25 * lam,
            target,
        })
    }

    pub fn target(&self) -> &LogisticRegressionTarget {
        &self.target
    }

    pub fn n_rows(&self) -> usize {
        self.target.n_rows()
    }

    pub fn inv_prior_variance(&self) -> f64 {
        self.inv_var
    }

    /// `σ(⟨xʲ,q⟩) − yʲ`, the scalar weight of datum `j` in the gradient.
    pub(crate) fn residual(&self, j: usize, q: &[f64]) -> f64 {
        sigmoid(dot(self.target.row(j), q)) - self.target.label(j) as f64
    }

    /// Adds `Σ_{j ∈ rows} (σ(⟨xʲ,q⟩) − yʲ) xʲ` into `out`.
    pub(crate) fn add_data_gradient(&self, q: &[f64], rows: impl Iterator<Item = usize>, scale: f64, out: &mut [f64]) {
        for j in rows {
            let w = scale * self.residual(j, q);
            for (o, x) in out.iter_mut().zip(self.target.row(j)) {
                *o += w * x;
            }
        }
    }

    /// Data part of the gradient over all rows, in row order.
    pub(crate) fn data_gradient(&self, q: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        self.add_data_gradient(q, 0..self.n_rows(), 1.0, out);
    }

    /// Adds `scale · Σ_{j ∈ rows} σ'(⟨xʲ,q⟩) xʲ xʲᵀ` into the row-major `d × d`
    /// matrix `out`.
    pub(crate) fn add_data_hessian(&self, q: &[f64], rows: impl Iterator<Item = usize>, scale: f64, out: &mut [f64]) {
        let d = self.target.dim;
        for j in rows {
            let x = self.target.row(j);
            let s = sigmoid(dot(x, q));
            let w = scale * s * (1.0 - s);
            for a in 0..d {
                let wa = w * x[a];
                let row = &mut out[a * d..(a + 1) * d];
                for (o, xb) in row.iter_mut().zip(x) {
                    *o += wa * xb;
                }
            }
        }
    }

    /// Full Hessian `I/σ² + Σⱼ σ'(⟨xʲ,q⟩) xʲxʲᵀ`, row-major.
    pub fn hessian(&self, q: &[f64]) -> Vec<f64> {
        let d = self.target.dim;
        let mut h = vec![0.0; d * d];
        self.add_data_hessian(q, 0..self.n_rows(), 1.0, &mut h);
        for a in 0..d {
            h[a * d + a] += self.inv_var;
        }
        h
    }

    /// Extreme eigenvalues `(min, max)` of the Hessian at `q`, by power
    /// iteration. This is the alternative to the global `(m, M)` bounds.
    pub fn hessian_extremes_at(&self, q: &[f64]) -> (f64, f64) {
        let d = self.target.dim;
        let h = self.hessian(q);
        let start: Vec<f64> = (0..d).map(|i| 1.0 + 0.1 * (i % 7) as f64).collect();
        let apply = |shift: f64, sign: f64| {
            let h = &h;
            move |v: &[f64], w: &mut [f64]| {
                for a in 0..d {
                    w[a] = shift * v[a] + sign * dot(&h[a * d..(a + 1) * d], v);
                }
            }
        };
        let top = power_iteration_sym(d, &start, 5000, 1e-14, apply(0.0, 1.0));
        let gap = power_iteration_sym(d, &start, 5000, 1e-14, apply(top, -1.0));
        (top - gap, top)
    }
}

/// `λ_max(XᵀX)` by power iteration on `v ↦ Xᵀ(Xv)`, nudged up by a relative
/// 1e−9 so the result stays an upper bound after finite iterations.
fn gram_lambda_max(t: &LogisticRegressionTarget) -> f64 {
    let d = t.dim;
    let mut xv = vec![0.0; t.n_rows()];
    let start = vec![1.0; d];
    let lam = power_iteration_sym(d, &start, 10_000, 1e-15, |v, w| {
        for (j, c) in xv.iter_mut().enumerate() {
            *c = dot(t.row(j), v);
        }
        w.fill(0.0);
        for (j, c) in xv.iter().enumerate() {
            for (wi, x) in w.iter_mut().zip(t.row(j)) {
                *wi += c * x;
            }
        }
    });
    lam * (1.0 + 1e-9)
}

impl Potential for BlrPotential {
    fn dim(&self) -> usize {
        self.target.dim
    }

    fn value(&self, q: &[f64]) -> f64 {
        let prior = 0.5 * self.inv_var * dot(q, q);
        // softplus(t) = max(t, 0) + ln(1 + e^{-|t|}), with the logs taken
        // once per block of rows.
        let mut linear = 0.0;
        let mut logs = 0.0;
        let mut product = 1.0;
        for j in 0..self.n_rows() {
            let t = dot(self.target.row(j), q);
            linear += t.max(0.0) - self.target.label(j) as f64 * t;
            product *= 1.0 + (-t.abs()).exp();
            if (j + 1) % LOG_BLOCK == 0 {
                logs += product.ln();
                product = 1.0;
            }
        }
        prior + linear + logs + product.ln()
    }

    fn gradient(&self, q: &[f64], out: &mut [f64]) {
        self.data_gradient(q, out);
        for (o, qi) in out.iter_mut().zip(q) {
            *o += qi * self.inv_var;
        }
    }

    fn strong_convexity(&self) -> f64 {
        self.inv_var
    }

    fn gradient_lipschitz(&self) -> f64 {
        self.big_m
    }
}

/// Synthetic logistic-regression data: standard normal features, labels
/// drawn from the logistic model at a weight vector of norm `separation`.
/// The prior variance defaults to 1.
pub fn synth_dataset(seed: u64, n: usize, d: usize, separation: f64) -> Result<LogisticRegressionTarget> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("synthetic dataset needs N, d >= 1".into()));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "separation must be nonnegative, got {separation}"
        )));
    }
    let mut noise = NoiseStream::new(seed, 0);
    let mut w = vec![0.0; d];
    noise.standard_normals(&mut w);
    let norm = dot(&w, &w).sqrt();
    w.iter_mut().for_each(|c| *c *= separation / norm);
    let mut features = vec![0.0; n * d];
    noise.standard_normals(&mut features);
    let labels = features
        .chunks_exact(d)
        .map(|x| u8::from(noise.uniform() < sigmoid(dot(x, &w))))
        .collect();
    LogisticRegressionTarget::new(features, labels, d, 1.0)
}
