use std::fmt::Write as _;

use langevin_kit::diagnostics::{
    bias_table, run_sampler, BiasTable, CellStatus, Reference, RunSummary, SamplerSettings,
};
use langevin_kit::integrators::SchemeId;
use langevin_kit::noise::NoiseStream;
use langevin_kit::potentials::{make_estimator, EstimatorKind, FullGradient};

use crate::args::{BiasArgs, Format, GradKind, RunArgs, SampleArgs};
use crate::error::{require, CliError, Outcome};
use crate::output::{emit, num};
use crate::target::{estimator_kind, grad_tag, parse_schemes, Target};

struct Plan {
    cells: Vec<(SchemeId, f64, f64)>,
    iterations: usize,
    burn_in: usize,
    replicas: usize,
    seed: u64,
    grad: GradKind,
    batch: Option<usize>,
    format: Format,
}

/// Cartesian product of schemes, stepsizes and frictions. Overdamped
/// schemes get one cell per stepsize with `γ = NaN`.
fn plan(args: &RunArgs) -> Result<Plan, CliError> {
    let schemes = parse_schemes(require(args.scheme.as_deref(), "scheme")?, true)?;
    let hs = require(args.h.clone(), "h")?;
    let gammas = args.gamma.clone().unwrap_or_default();
    if hs.is_empty() {
        return Err(CliError::Usage("--h is empty".into()));
    }
    let mut cells = Vec::new();
    for &s in &schemes {
        for &h in &hs {
            if !s.is_kinetic() {
                cells.push((s, h, f64::NAN));
                continue;
            }
            if gammas.is_empty() {
                return Err(CliError::Usage(format!("missing required --gamma for {s}")));
            }
            cells.extend(gammas.iter().map(|&g| (s, h, g)));
        }
    }
    let iterations = args.iterations.unwrap_or(10_000);
    let grad = args.grad.unwrap_or(GradKind::Full);
    let batch = match grad {
        GradKind::Full => None,
        _ => Some(require(args.batch, "batch")?),
    };
    Ok(Plan {
        cells,
        iterations,
        burn_in: args.burn_in.unwrap_or(iterations / 10),
        replicas: args.replicas.unwrap_or(4),
        seed: args.seed.unwrap_or(0),
        grad,
        batch,
        format: args.format.unwrap_or(Format::Csv),
    })
}

fn batch_field(b: Option<usize>) -> String {
    b.map(|b| b.to_string()).unwrap_or_default()
}

fn status(converged: bool) -> CellStatus {
    if converged {
        CellStatus::Ok
    } else {
        CellStatus::NotConverged
    }
}

/// Runs `body` with a gradient-source factory for the requested kind.
macro_rules! with_grad {
    ($target:expr, $plan:expr, $center:expr, |$make:ident| $body:expr) => {{
        match $plan.grad {
            GradKind::Full => {
                let p = $target.potential();
                let $make = |_: u64| FullGradient::new(&p);
                $body
            }
            grad => {
                let blr = $target.require_blr(grad)?;
                let anchor = (grad == GradKind::Vrsg).then_some(&$center[..]);
                let seed = $plan.seed;
                let est = make_estimator(
                    blr,
                    estimator_kind(grad),
                    $plan.batch.expect("batch checked"),
                    anchor,
                    NoiseStream::in_domain(seed, 0, 1),
                )?;
                let $make = |r: u64| est.with_noise(NoiseStream::in_domain(seed, r, 1));
                $body
            }
        }
    }};
}

fn summary_csv(rows: &[RunSummary]) -> String {
    let mut s = String::from("scheme,h,gamma,grad,batch,mean,se,ess,grad_evals,status\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            num(r.h),
            num(r.gamma),
            grad_tag_of(r.grad),
            batch_field(r.batch),
            num(r.mean),
            num(r.std_error),
            num(r.ess),
            r.grad_evals,
            status(r.converged())
        )
        .unwrap();
    }
    s
}

fn bias_csv(t: &BiasTable) -> String {
    let mut s = String::from("scheme,h,gamma,grad,batch,bias,se,ess,grad_evals,status\n");
    for c in &t.cells {
        let r = &c.summary;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            num(r.h),
            num(r.gamma),
            grad_tag_of(r.grad),
            batch_field(r.batch),
            num(c.bias),
            num(c.se),
            num(r.ess),
            r.grad_evals,
            c.status
        )
        .unwrap();
    }
    s
}

fn grad_tag_of(k: EstimatorKind) -> &'static str {
    grad_tag(match k {
        EstimatorKind::Full => GradKind::Full,
        EstimatorKind::Subsampled => GradKind::Sg,
        EstimatorKind::VarianceReduced => GradKind::Vrsg,
    })
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    text
}

pub fn run_sample(args: &SampleArgs) -> Result<Outcome, CliError> {
    let plan = plan(&args.run)?;
    let target = Target::build(&args.run.target)?;
    let center = target.minimizer()?;
    let mut rows = Vec::with_capacity(plan.cells.len());
    for (i, &(scheme, h, gamma)) in plan.cells.iter().enumerate() {
        let settings = SamplerSettings {
            scheme,
            h,
            gamma,
            iterations: plan.iterations,
            burn_in: plan.burn_in,
            replicas: plan.replicas,
            seed: plan.seed.wrapping_add(i as u64),
            grad: estimator_kind(plan.grad),
            batch: plan.batch,
        };
        let s = with_grad!(target, plan, center, |make| run_sampler(
            &settings,
            &target.potential(),
            &center,
            make,
            None
        ))?;
        rows.push(s);
    }
    let text = match plan.format {
        Format::Csv => summary_csv(&rows),
        Format::Json => json(&rows),
    };
    emit(args.run.out.as_deref(), text.as_bytes())?;
    Ok(if rows.iter().all(|r| !r.converged()) {
        Outcome::AllDivergent
    } else {
        Outcome::Ok
    })
}

pub fn run_bias(args: &BiasArgs) -> Result<Outcome, CliError> {
    let plan = plan(&args.run)?;
    let target = Target::build(&args.run.target)?;
    let center = target.minimizer()?;
    let reference = match args.reference {
        Some(mean) => Reference::Given {
            mean,
            se: args.reference_se.unwrap_or(0.0),
        },
        None => {
            if plan.cells.iter().all(|c| c.2.is_nan()) {
                return Err(CliError::Usage(
                    "the internal reference run needs a friction; pass --gamma or --reference".into(),
                ));
            }
            Reference::Internal
        }
    };
    let table = with_grad!(target, plan, center, |make| bias_table(
        &plan.cells,
        &target.potential(),
        &center,
        make,
        estimator_kind(plan.grad),
        plan.batch,
        reference,
        plan.iterations,
        plan.burn_in,
        plan.replicas,
        plan.seed,
        None,
    ))?;
    let text = match plan.format {
        Format::Csv => bias_csv(&table),
        Format::Json => json(&table),
    };
    emit(args.run.out.as_deref(), text.as_bytes())?;
    Ok(if table.cells.iter().all(|c| c.status == CellStatus::NotConverged) {
        Outcome::AllDivergent
    } else {
        Outcome::Ok
    })
}
