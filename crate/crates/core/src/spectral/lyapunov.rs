use rayon::prelude::*;
use serde::Serialize;

use super::mode::roabao_matrix;
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::noise::{NoiseSource, NoiseStream};

/// Factors multiplied between QR renormalizations.
pub const QR_CADENCE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    /// Mean over replicas of the per-step growth factor of the slower mode.
    pub rate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicas: usize,
    pub products: usize,
}

/// Per-step growth factor of the first column of `P_N ⋯ P_1 W₀` (Benettin's
/// recursion, QR every [`QR_CADENCE`] factors), where `W₀` is the rotation
/// taking `e₁` to `start`. The first tenth of the factors only aligns the
/// column and is left out of the average.
fn growth<F: FnMut() -> Mat2>(n: usize, start: [f64; 2], mut next: F) -> Result<f64> {
    let burn = (n / 10 / QR_CADENCE).max(1) * QR_CADENCE;
    let mut w = Mat2::new(start[0], -start[1], start[1], start[0]);
    let mut log_acc = 0.0;
    for k in 1..=n {
        w = next().mul(&w);
        if k % QR_CADENCE == 0 || k == n {
            let (q, r) = w.qr();
            let s = r.get(0, 0);
            if !(s > f64::MIN_POSITIVE && s.is_finite()) {
                return Err(Error::ProductUnderflow);
            }
            if k > burn {
                log_acc += s.ln();
            }
            w = q;
        }
    }
    Ok((log_acc / (n - burn) as f64).exp())
}

/// Dominant direction of the mean-midpoint map, a good guess for the
/// random product's top direction.
fn start_direction(lambda: f64, h: f64, gamma: f64) -> [f64; 2] {
    roabao_matrix(lambda, h, gamma, 0.5 * h)
        .dominant_eigenvector()
        .unwrap_or([1.0, 0.0])
}

fn validate(m: f64, big_m: f64, h: f64, gamma: f64, n: usize) -> Result<()> {
    if !(m > 0.0 && m <= big_m && big_m.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < m <= M, got m = {m}, M = {big_m}"
        )));
    }
    if !(h > 0.0 && h.is_finite() && gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need h > 0 and gamma > 0, got h = {h}, gamma = {gamma}"
        )));
    }
    if n < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 products, got {n}")));
    }
    Ok(())
}

/// Lyapunov estimate of the rOABAO contraction factor on the modes
/// `λ ∈ {m, M}`, with `u_k` drawn uniformly on `[0, h]`. Replica `r` uses
/// stream `r` of `seed`, domain 0 for `m` and 1 for `M`.
pub fn lyapunov_rate_roabao(
    m: f64,
    big_m: f64,
    h: f64,
    gamma: f64,
    products: usize,
    replicas: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    validate(m, big_m, h, gamma, products)?;
    if replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }
    let rates = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for (domain, lambda) in [m, big_m].into_iter().enumerate() {
                let mut noise = NoiseStream::in_domain(seed, r, domain as u64);
                let start = start_direction(lambda, h, gamma);
                let g = growth(products, start, || roabao_matrix(lambda, h, gamma, h * noise.uniform()))?;
                worst = worst.max(g);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = rates.len() as f64;
    let rate = rates.iter().sum::<f64>() / k;
    let std_error = if rates.len() > 1 {
        let var = rates.iter().map(|x| (x - rate) * (x - rate)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Ok(LyapunovEstimate {
        rate,
        std_error,
        ci_low: rate - 1.96 * std_error,
        ci_high: rate + 1.96 * std_error,
        replicas,
        products,
    })
}

/// The same product with every midpoint fixed at `u`.
pub fn lyapunov_rate_roabao_fixed(m: f64, big_m: f64, h: f64, gamma: f64, products: usize, u: f64) -> Result<f64> {
    validate(m, big_m, h, gamma, products)?;
    if !(0.0..=h).contains(&u) {
        return Err(Error::InvalidParameter(format!("midpoint u = {u} outside [0, h]")));
    }
    let mut worst: f64 = 0.0;
    for lambda in [m, big_m] {
        let p = roabao_matrix(lambda, h, gamma, u);
        worst = worst.max(growth(products, p.dominant_eigenvector().unwrap_or([1.0, 0.0]), || p)?);
    }
    Ok(worst)
}
