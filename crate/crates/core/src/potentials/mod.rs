//! Target potentials `U = −log π`, gradient oracles and data ingestion.

mod estimator;
mod gaussian;
mod idx;
mod logistic;
mod minimize;

pub use estimator::{
    estimate_cg, make_estimator, CgMethod, EstimatorKind, JacobianVarianceBound,
    StochasticGradient,
};
pub use gaussian::{gaussian_potential, AnisotropicGaussian};
pub use idx::{load_idx, read_idx_images, read_idx_labels};
pub use logistic::{blr_potential, synth_dataset, BlrPotential, LogisticRegressionTarget};
pub use minimize::minimize;

use crate::linalg::dot;
use crate::noise::NoiseSource;

/// A potential with strong-convexity constant `m` and gradient-Lipschitz
/// constant `M`, `0 < m <= M`.
pub trait Potential: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// `m`
    fn strong_convexity(&self) -> f64;
    /// `M`
    fn gradient_lipschitz(&self) -> f64;
}

impl<P: Potential + ?Sized> Potential for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient(x, out)
    }
    fn strong_convexity(&self) -> f64 {
        (**self).strong_convexity()
    }
    fn gradient_lipschitz(&self) -> f64 {
        (**self).gradient_lipschitz()
    }
}

/// Anything the integrators can ask for a force: the exact gradient or a
/// stochastic estimate of it. Evaluations are counted.
pub trait GradientSource {
    fn dim(&self) -> usize;
    fn gradient(&mut self, x: &[f64], out: &mut [f64]);
    fn evaluations(&self) -> u64;
}

/// Exact gradient of a [`Potential`], with an evaluation counter.
#[derive(Debug)]
pub struct FullGradient<P> {
    potential: P,
    evaluations: u64,
}

impl<P: Clone> Clone for FullGradient<P> {
    fn clone(&self) -> Self {
        Self {
            potential: self.potential.clone(),
            evaluations: self.evaluations,
        }
    }
}

impl<P: Potential> FullGradient<P> {
    pub fn new(potential: P) -> Self {
        Self {
            potential,
            evaluations: 0,
        }
    }

    pub fn potential(&self) -> &P {
        &self.potential
    }
}

impl<P: Potential> GradientSource for FullGradient<P> {
    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn gradient(&mut self, x: &[f64], out: &mut [f64]) {
        self.evaluations += 1;
        self.potential.gradient(x, out);
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// Worst relative error of central finite differences against the analytic
/// gradient over the probes; each component compares
/// `|fd − g| / max(1, |g|)`.
pub fn finite_difference_error<P: Potential + ?Sized>(
    potential: &P,
    probes: &[Vec<f64>],
    eps: f64,
) -> f64 {
    let n = potential.dim();
    let mut grad = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for x in probes {
        potential.gradient(x, &mut grad);
        let mut xp = x.clone();
        for i in 0..n {
            let orig = xp[i];
            xp[i] = orig + eps;
            let up = potential.value(&xp);
            xp[i] = orig - eps;
            let down = potential.value(&xp);
            xp[i] = orig;
            let fd = (up - down) / (2.0 * eps);
            worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
        }
    }
    worst
}

/// Checks `m‖x−y‖² ≤ ⟨∇U(x)−∇U(y), x−y⟩ ≤ M‖x−y‖²` on random pairs drawn
/// as `scale · N(0, I)`, with relative slack `tol`.
pub fn monotonicity_check<P: Potential + ?Sized>(
    potential: &P,
    pairs: usize,
    scale: f64,
    tol: f64,
    noise: &mut impl NoiseSource,
) -> bool {
    let n = potential.dim();
    let (m, big_m) = (potential.strong_convexity(), potential.gradient_lipschitz());
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    for _ in 0..pairs {
        noise.standard_normals(&mut x);
        noise.standard_normals(&mut y);
        x.iter_mut().chain(y.iter_mut()).for_each(|c| *c *= scale);
        potential.gradient(&x, &mut gx);
        potential.gradient(&y, &mut gy);
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a - b).collect();
        let dd = dot(&d, &d);
        let inner = dot(&dg, &d);
        if inner < m * dd * (1.0 - tol) || inner > big_m * dd * (1.0 + tol) {
            return false;
        }
    }
    true
}
