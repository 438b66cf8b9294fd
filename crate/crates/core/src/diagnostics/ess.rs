use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 100;

fn check_len(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "effective sample size needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// Batch length `⌊√n⌋` and batch count `⌊n / b⌋`.
fn batching(n: usize) -> (usize, usize) {
    let b = (n as f64).sqrt().floor() as usize;
    (b, n / b)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Batch-means long-run variance `b · Var(batch means)` of a univariate
/// series, using the first `a·b` samples.
pub fn batch_means_variance(series: &[f64]) -> Result<f64> {
    check_len(series.len())?;
    let (b, a) = batching(series.len());
    let used = &series[..a * b];
    let mu = mean(used);
    let s = used
        .chunks_exact(b)
        .map(|c| {
            let d = mean(c) - mu;
            d * d
        })
        .sum::<f64>();
    Ok(b as f64 * s / (a - 1) as f64)
}

/// Univariate effective sample size `n · Var / σ²_bm`.
pub fn ess(series: &[f64]) -> Result<f64> {
    check_len(series.len())?;
    let n = series.len();
    let mu = mean(series);
    let var = series.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Degenerate("series has zero or non-finite variance".into()));
    }
    let lrv = batch_means_variance(series)?;
    if !(lrv > 0.0) {
        return Err(Error::Degenerate("batch means have zero variance".into()));
    }
    Ok(n as f64 * var / lrv)
}

/// Log-determinant of a symmetric positive definite `d × d` row-major
/// matrix via Cholesky; `None` if a pivot is not positive.
fn log_det_spd(mut a: Vec<f64>, d: usize) -> Option<f64> {
    let mut log_det = 0.0;
    for j in 0..d {
        let mut pivot = a[j * d + j];
        for k in 0..j {
            pivot -= a[j * d + k] * a[j * d + k];
        }
        if !(pivot > 0.0) {
            return None;
        }
        let l = pivot.sqrt();
        a[j * d + j] = l;
        log_det += 2.0 * l.ln();
        for i in (j + 1)..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = s / l;
        }
    }
    Some(log_det)
}

fn covariance<'a, I: Iterator<Item = &'a [f64]>>(rows: I, mu: &[f64], d: usize) -> (Vec<f64>, usize) {
    let mut cov = vec![0.0; d * d];
    let mut count = 0;
    for r in rows {
        count += 1;
        for i in 0..d {
            let di = r[i] - mu[i];
            for j in 0..=i {
                cov[i * d + j] += di * (r[j] - mu[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            cov[i * d + j] /= (count - 1) as f64;
            cov[j * d + i] = cov[i * d + j];
        }
    }
    (cov, count)
}

/// Multivariate effective sample size `n (|Λ| / |Σ_bm|)^{1/d}` of a
/// row-major `n × d` series, with `Λ` the sample covariance and `Σ_bm` the
/// batch-means covariance.
pub fn multivariate_ess(series: &[f64], d: usize) -> Result<f64> {
    if d == 0 || !series.len().is_multiple_of(d) {
        return Err(Error::InvalidParameter(format!(
            "series of length {} is not a whole number of {d}-vectors",
            series.len()
        )));
    }
    let n = series.len() / d;
    check_len(n)?;
    if d == 1 {
        return ess(series);
    }
    let mut mu = vec![0.0; d];
    for r in series.chunks_exact(d) {
        for i in 0..d {
            mu[i] += r[i];
        }
    }
    mu.iter_mut().for_each(|m| *m /= n as f64);
    let (lambda, _) = covariance(series.chunks_exact(d), &mu, d);

    let (b, a) = batching(n);
    let mut batch_means = vec![0.0; a * d];
    for (k, block) in series[..a * b * d].chunks_exact(b * d).enumerate() {
        for r in block.chunks_exact(d) {
            for i in 0..d {
                batch_means[k * d + i] += r[i];
            }
        }
    }
    batch_means.iter_mut().for_each(|x| *x /= b as f64);
    let mut bm_mu = vec![0.0; d];
    for r in batch_means.chunks_exact(d) {
        for i in 0..d {
            bm_mu[i] += r[i];
        }
    }
    bm_mu.iter_mut().for_each(|m| *m /= a as f64);
    let (mut sigma, _) = covariance(batch_means.chunks_exact(d), &bm_mu, d);
    sigma.iter_mut().for_each(|s| *s *= b as f64);

    let ld_lambda = log_det_spd(lambda, d)
        .ok_or_else(|| Error::Degenerate("sample covariance is not positive definite".into()))?;
    let ld_sigma = log_det_spd(sigma, d)
        .ok_or_else(|| Error::Degenerate("batch-means covariance is not positive definite".into()))?;
    Ok(n as f64 * ((ld_lambda - ld_sigma) / d as f64).exp())
}
