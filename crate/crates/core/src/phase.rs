//! Phase-space states and the modified Euclidean norm
//! `‖z‖²_{a,b} = ‖x‖² + 2b⟨x,v⟩ + a‖v‖²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position/velocity pair in `ℝⁿ × ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParameter("phase state needs n >= 1".into()));
        }
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                actual: v.len(),
            });
        }
        Ok(Self { x, v })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|c| c.is_finite())
    }

    /// `self - other`, componentwise.
    pub fn difference(&self, other: &PhaseState) -> Result<PhaseState> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(PhaseState {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
        })
    }
}

/// Coefficients of the twisted norm. Construction enforces `a > 0`,
/// `b >= 0` and `b² < a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifiedNorm {
    a: f64,
    b: f64,
}

impl ModifiedNorm {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "norm coefficients must satisfy a > 0, b >= 0 (a = {a}, b = {b})"
            )));
        }
        if b * b >= a {
            return Err(Error::NormNotEquivalent { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn euclidean() -> Self {
        Self { a: 1.0, b: 0.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// The same `a` with the cross term dropped.
    pub fn untwisted(&self) -> Self {
        Self { a: self.a, b: 0.0 }
    }

    /// Squared norm of the pair `(x, v)`; slices must have equal length.
    pub fn norm_sq_parts(&self, x: &[f64], v: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), v.len());
        let mut xx = 0.0;
        let mut xv = 0.0;
        let mut vv = 0.0;
        for (xi, vi) in x.iter().zip(v) {
            xx += xi * xi;
            xv += xi * vi;
            vv += vi * vi;
        }
        xx + 2.0 * self.b * xv + self.a * vv
    }

    /// Squared norm of the difference `z - w` without allocating.
    pub fn distance_sq(&self, z: &PhaseState, w: &PhaseState) -> f64 {
        let mut xx = 0.0;
        let mut xv = 0.0;
        let mut vv = 0.0;
        for i in 0..z.dim() {
            let dx = z.x[i] - w.x[i];
            let dv = z.v[i] - w.v[i];
            xx += dx * dx;
            xv += dx * dv;
            vv += dv * dv;
        }
        xx + 2.0 * self.b * xv + self.a * vv
    }

    /// Eigenvalues of the 2×2 Gram matrix `[[1, b], [b, a]]`, ascending.
    pub fn gram_eigenvalues(&self) -> (f64, f64) {
        let tr = 1.0 + self.a;
        let det = self.a - self.b * self.b;
        let disc = ((1.0 - self.a).powi(2) + 4.0 * self.b * self.b).sqrt();
        let hi = 0.5 * (tr + disc);
        // det / hi avoids cancellation in the small root.
        (det / hi, hi)
    }
}

/// `‖z‖²_{a,b}` for a phase-space difference `z`.
pub fn modified_norm_sq(z: &PhaseState, norm: &ModifiedNorm) -> Result<f64> {
    if z.x.len() != z.v.len() {
        return Err(Error::DimensionMismatch {
            expected: z.x.len(),
            actual: z.v.len(),
        });
    }
    Ok(norm.norm_sq_parts(&z.x, &z.v))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// `‖z‖²_{a,b} / ‖z‖²_{a,0}` per sample.
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Every ratio lies in `[1/2, 3/2]`.
    pub pass: bool,
}

/// Empirical check of `½‖z‖²_{a,0} ≤ ‖z‖²_{a,b} ≤ (3/2)‖z‖²_{a,0}`.
///
/// Zero samples are skipped (the ratio is undefined there).
pub fn norm_equivalence_check(
    norm: &ModifiedNorm,
    samples: &[PhaseState],
) -> Result<EquivalenceReport> {
    if samples.is_empty() {
        return Err(Error::Degenerate("no samples for norm equivalence".into()));
    }
    let plain = norm.untwisted();
    let mut ratios = Vec::with_capacity(samples.len());
    for z in samples {
        let base = modified_norm_sq(z, &plain)?;
        if base == 0.0 {
            continue;
        }
        ratios.push(modified_norm_sq(z, norm)? / base);
    }
    if ratios.is_empty() {
        return Err(Error::Degenerate("all equivalence samples are zero".into()));
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(EquivalenceReport {
        pass: min_ratio >= 0.5 && max_ratio <= 1.5,
        ratios,
        min_ratio,
        max_ratio,
    })
}
