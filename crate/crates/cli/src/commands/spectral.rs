use langevin_kit::spectral::{contour_grid, LyapunovSettings};

use crate::args::SpectralArgs;
use crate::error::{require, CliError, Outcome};
use crate::output::{emit, scheme_outputs};
use crate::target::parse_schemes;

fn range(lo: Option<f64>, hi: Option<f64>, name: &str) -> Result<(f64, f64), CliError> {
    let lo = require(lo, &format!("{name}-min"))?;
    let hi = require(hi, &format!("{name}-max"))?;
    if !(lo > 0.0 && hi.is_finite() && lo <= hi) {
        return Err(CliError::Usage(format!(
            "--{name}-min/--{name}-max must satisfy 0 < min <= max, got [{lo}, {hi}]"
        )));
    }
    Ok((lo, hi))
}

pub fn run(args: &SpectralArgs) -> Result<Outcome, CliError> {
    let schemes = parse_schemes(require(args.scheme.as_deref(), "scheme")?, false)?;
    let m = require(args.m, "m")?;
    let big_m = require(args.big_m, "M")?;
    let h_range = range(args.h_min, args.h_max, "h")?;
    let gamma_range = range(args.gamma_min, args.gamma_max, "gamma")?;
    let resolution = (args.gamma_points.unwrap_or(40), args.h_points.unwrap_or(40));
    let defaults = LyapunovSettings::default();
    let lyapunov = LyapunovSettings {
        products: args.lyapunov_n.unwrap_or(defaults.products),
        replicas: args.replicas.unwrap_or(defaults.replicas),
        seed: args.seed.unwrap_or(defaults.seed),
    };
    let outputs = scheme_outputs(args.out.as_deref(), &schemes)?;
    let mut files = Vec::with_capacity(schemes.len());
    for &scheme in &schemes {
        let grid = contour_grid(scheme, m, big_m, h_range, gamma_range, resolution, &lyapunov)?;
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).expect("writing to memory");
        files.push(buf);
    }
    for (out, buf) in outputs.iter().zip(&files) {
        emit(out.as_deref(), buf)?;
    }
    Ok(Outcome::Ok)
}
