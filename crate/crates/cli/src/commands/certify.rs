use langevin_kit::contraction::{certify, constants_for, DEFAULT_LAMBDA_POINTS, DEFAULT_U_POINTS};
use serde::Serialize;

use crate::args::CertifyArgs;
use crate::error::{require, CliError, Outcome};
use crate::output::emit;
use crate::target::parse_schemes;

#[derive(Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    certificate: &'a langevin_kit::contraction::CertificateReport,
    /// Whether `(γ, h)` meets the scheme's stepsize and friction conditions.
    in_region: Option<bool>,
}

pub fn run(args: &CertifyArgs) -> Result<Outcome, CliError> {
    let schemes = parse_schemes(require(args.scheme.as_deref(), "scheme")?, false)?;
    let [scheme] = schemes[..] else {
        return Err(CliError::Usage("certify takes a single --scheme".into()));
    };
    let m = require(args.m, "m")?;
    let big_m = require(args.big_m, "M")?;
    let gamma = require(args.gamma, "gamma")?;
    let h = require(args.h, "h")?;
    let report = certify(
        scheme,
        m,
        big_m,
        gamma,
        h,
        args.lambda_points.unwrap_or(DEFAULT_LAMBDA_POINTS),
        args.u_points.unwrap_or(DEFAULT_U_POINTS),
        args.extended.unwrap_or(false),
    )?;
    let region = constants_for(scheme, m, big_m, gamma, h).ok();
    let out = Report {
        certificate: &report,
        in_region: region.as_ref().map(|c| c.in_region()),
    };
    let mut text = serde_json::to_string_pretty(&out).expect("report serializes");
    text.push('\n');
    emit(args.out.as_deref(), text.as_bytes())?;
    if report.pass {
        return Ok(Outcome::Ok);
    }
    eprintln!(
        "certificate failed for {scheme} at gamma = {gamma}, h = {h}: min A = {:e}, min det = {:e}",
        report.min_a, report.min_determinant
    );
    match region {
        Some(c) if c.in_region() => eprintln!("the point satisfies the stepsize and friction conditions"),
        Some(c) => eprintln!(
            "the point violates the conditions (needs h < {:e}{})",
            c.h0,
            if c.gamma0_implicit {
                String::new()
            } else {
                format!(" and gamma >= {:e}", c.gamma0)
            }
        ),
        None => eprintln!("no contraction constants exist at this point"),
    }
    Ok(Outcome::CertificateFailed)
}
