use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::lyapunov::lyapunov_rate_roabao;
use super::mode::spectral_gap;
use crate::error::{Error, Result};
use crate::integrators::SchemeId;

/// Settings for rOABAO cells, which are estimated rather than exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovSettings {
    pub products: usize,
    pub replicas: usize,
    pub seed: u64,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        Self {
            products: 10_000,
            replicas: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourCell {
    pub gamma: f64,
    pub h: f64,
    /// `1 − |λ_max|`, or one minus the Lyapunov factor for rOABAO.
    pub gap: f64,
    /// `ln(gap/h)`; NaN for divergent cells.
    pub value: f64,
    pub divergent: bool,
    /// Half-width of the 95% interval on `gap` (rOABAO only).
    pub ci: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourGrid {
    pub scheme: SchemeId,
    pub m: f64,
    pub big_m: f64,
    pub gamma_axis: Vec<f64>,
    pub h_axis: Vec<f64>,
    /// Row-major: all `h` for the first `γ`, then the next `γ`.
    pub cells: Vec<ContourCell>,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_axis(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad axis range [{lo}, {hi}]")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    if n == 0 {
        return Err(Error::InvalidParameter("axis needs at least one point".into()));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

/// Evaluates one cell.
pub fn contour_cell(
    scheme: SchemeId,
    m: f64,
    big_m: f64,
    gamma: f64,
    h: f64,
    lyapunov: &LyapunovSettings,
) -> Result<ContourCell> {
    let (gap, ci) = if scheme == SchemeId::Roabao {
        let e = lyapunov_rate_roabao(m, big_m, h, gamma, lyapunov.products, lyapunov.replicas, lyapunov.seed)?;
        (1.0 - e.rate, Some(1.96 * e.std_error))
    } else {
        (spectral_gap(scheme, m, big_m, h, gamma)?.gap, None)
    };
    let divergent = !(gap > 0.0);
    Ok(ContourCell {
        gamma,
        h,
        gap,
        value: if divergent { f64::NAN } else { (gap / h).ln() },
        divergent,
        ci,
    })
}

/// Grid over log-spaced `γ` and `h` axes. `resolution = (nγ, nh)`; a 1×1
/// grid is allowed and evaluates the lower corner.
pub fn contour_grid(
    scheme: SchemeId,
    m: f64,
    big_m: f64,
    h_range: (f64, f64),
    gamma_range: (f64, f64),
    resolution: (usize, usize),
    lyapunov: &LyapunovSettings,
) -> Result<ContourGrid> {
    if !scheme.is_kinetic() {
        return Err(Error::OverdampedScheme(scheme));
    }
    let gamma_axis = log_axis(gamma_range.0, gamma_range.1, resolution.0)?;
    let h_axis = log_axis(h_range.0, h_range.1, resolution.1)?;
    let points: Vec<(f64, f64)> = gamma_axis
        .iter()
        .flat_map(|&g| h_axis.iter().map(move |&h| (g, h)))
        .collect();
    let cells = points
        .par_iter()
        .map(|&(g, h)| contour_cell(scheme, m, big_m, g, h, lyapunov))
        .collect::<Result<Vec<_>>>()?;
    Ok(ContourGrid {
        scheme,
        m,
        big_m,
        gamma_axis,
        h_axis,
        cells,
    })
}

impl ContourGrid {
    pub fn divergent_count(&self) -> usize {
        self.cells.iter().filter(|c| c.divergent).count()
    }

    /// CSV with header `gamma,h,value,divergent` plus `ci` for rOABAO.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let with_ci = self.scheme == SchemeId::Roabao;
        if with_ci {
            writeln!(out, "gamma,h,value,divergent,ci")?;
        } else {
            writeln!(out, "gamma,h,value,divergent")?;
        }
        for c in &self.cells {
            write!(out, "{:.16e},{:.16e},{:.16e},{}", c.gamma, c.h, c.value, c.divergent)?;
            if with_ci {
                write!(out, ",{:.16e}", c.ci.unwrap_or(f64::NAN))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
