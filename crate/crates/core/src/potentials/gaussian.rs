use serde::{Deserialize, Serialize};

use super::Potential;
use crate::error::{Error, Result};

/// Diagonal quadratic `U(x) = ½ Σ λᵢ xᵢ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicGaussian {
    eigenvalues: Vec<f64>,
    m: f64,
    big_m: f64,
}

impl AnisotropicGaussian {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidParameter("need at least one eigenvalue".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalues must be positive and finite, got {bad}"
            )));
        }
        let m = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let big_m = eigenvalues.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            eigenvalues,
            m,
            big_m,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

pub fn gaussian_potential(eigenvalues: &[f64]) -> Result<AnisotropicGaussian> {
    AnisotropicGaussian::new(eigenvalues.to_vec())
}

impl Potential for AnisotropicGaussian {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self
            .eigenvalues
            .iter()
            .zip(x)
            .map(|(l, xi)| l * xi * xi)
            .sum::<f64>()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, l), xi) in out.iter_mut().zip(&self.eigenvalues).zip(x) {
            *o = l * xi;
        }
    }

    fn strong_convexity(&self) -> f64 {
        self.m
    }

    fn gradient_lipschitz(&self) -> f64 {
        self.big_m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{NoiseSource, NoiseStream};
    use crate::potentials::{finite_difference_error, monotonicity_check};

    #[test]
    fn two_dim_example() {
        let p = gaussian_potential(&[1.0, 10.0]).unwrap();
        let mut g = [0.0; 2];
        p.gradient(&[1.0, 1.0], &mut g);
        assert_eq!(g, [1.0, 10.0]);
        assert_eq!(p.value(&[1.0, 1.0]), 5.5);
        assert_eq!((p.strong_convexity(), p.gradient_lipschitz()), (1.0, 10.0));
    }

    #[test]
    fn minimum_is_zero() {
        let p = gaussian_potential(&[1.0]).unwrap();
        let mut g = [1.0];
        p.gradient(&[0.0], &mut g);
        assert_eq!((g[0], p.value(&[0.0])), (0.0, 0.0));
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(gaussian_potential(&[1.0, 0.0]).is_err());
        assert!(gaussian_potential(&[-2.0]).is_err());
        assert!(gaussian_potential(&[]).is_err());
    }

    #[test]
    fn finite_differences_and_monotonicity() {
        let p = gaussian_potential(&[2.0, 3.0]).unwrap();
        let mut noise = NoiseStream::new(4, 0);
        let probes: Vec<Vec<f64>> = (0..64)
            .map(|_| {
                let mut x = vec![0.0; 2];
                noise.standard_normals(&mut x);
                x
            })
            .collect();
        assert!(finite_difference_error(&p, &probes, 1e-5) < 1e-8);
        assert!(monotonicity_check(&p, 64, 2.0, 1e-12, &mut noise));
    }
}
