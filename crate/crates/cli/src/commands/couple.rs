use std::fmt::Write as _;

use langevin_kit::contraction::{
    constants_for, coupled_run, coupled_run_overdamped, coupled_run_sg, CoupledTrajectory, MeanSquareTrajectory,
};
use langevin_kit::integrators::{IntegratorParams, SchemeId};
use langevin_kit::noise::{NoiseSource, NoiseStream};
use langevin_kit::phase::{ModifiedNorm, PhaseState};
use langevin_kit::potentials::{make_estimator, FullGradient};
use rayon::prelude::*;

use crate::args::{CoupleArgs, GradKind};
use crate::error::{require, CliError, Outcome};
use crate::output::{emit, num, scheme_outputs};
use crate::target::{estimator_kind, parse_schemes, Target};

/// Initial states are drawn from this noise domain, apart from the
/// integrator and minibatch streams.
const START_DOMAIN: u64 = 2;

/// Two independent points `center + N(0, I)`, phase states for the
/// kinetic schemes.
fn start_pair(center: &[f64], seed: u64, pair: u64) -> (PhaseState, PhaseState) {
    let n = center.len();
    let mut noise = NoiseStream::in_domain(seed, pair, START_DOMAIN);
    let mut draw = || {
        let mut x = vec![0.0; n];
        let mut v = vec![0.0; n];
        noise.standard_normals(&mut x);
        noise.standard_normals(&mut v);
        x.iter_mut().zip(center).for_each(|(x, c)| *x += c);
        PhaseState::new(x, v).expect("matching lengths")
    };
    let a = draw();
    let b = draw();
    (a, b)
}

fn pairs_csv(runs: &[CoupledTrajectory]) -> String {
    let mut s = String::from("pair,k,distance\n");
    for (p, run) in runs.iter().enumerate() {
        for (k, d) in run.distances().iter().enumerate() {
            writeln!(s, "{p},{k},{}", num(*d)).unwrap();
        }
    }
    s
}

fn mean_sq_csv(t: &MeanSquareTrajectory) -> String {
    let mut s = String::from("k,mean_sq_distance,se\n");
    for (k, (m, se)) in t.mean.iter().zip(&t.std_error).enumerate() {
        writeln!(s, "{k},{},{}", num(*m), num(*se)).unwrap();
    }
    s
}

struct SchemeResult {
    csv: String,
    all_divergent: bool,
}

fn run_kinetic(
    scheme: SchemeId,
    args: &CoupleArgs,
    target: &Target,
    center: &[f64],
    h: f64,
) -> Result<SchemeResult, CliError> {
    let gamma = require(args.gamma, "gamma")?;
    let steps = args.steps.unwrap_or(1000);
    let pairs = args.pairs.unwrap_or(8);
    let seed = args.seed.unwrap_or(0);
    let p = target.potential();
    let norm = match constants_for(scheme, p.strong_convexity(), p.gradient_lipschitz(), gamma, h)
        .and_then(|c| c.norm())
    {
        Ok(norm) => norm,
        Err(e) => {
            eprintln!("warning: {scheme}: {e}; distances use the Euclidean norm");
            ModifiedNorm::euclidean()
        }
    };
    let params = IntegratorParams::new(h, gamma)?;
    match args.grad.unwrap_or(GradKind::Full) {
        GradKind::Full => {
            let runs = (0..pairs as u64)
                .into_par_iter()
                .map(|r| {
                    let (z0, z0t) = start_pair(center, seed, r);
                    coupled_run(scheme, &p, &norm, &z0, &z0t, &params, steps, NoiseStream::new(seed, r))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SchemeResult {
                all_divergent: runs.iter().all(|r| r.divergent),
                csv: pairs_csv(&runs),
            })
        }
        grad => {
            let blr = target.require_blr(grad)?;
            let batch = require(args.batch, "batch")?;
            let anchor = (grad == GradKind::Vrsg).then_some(center);
            let est = make_estimator(blr, estimator_kind(grad), batch, anchor, NoiseStream::in_domain(seed, 0, 1))?;
            let (z0, z0t) = start_pair(center, seed, 0);
            let t = coupled_run_sg(scheme, &est, &norm, &z0, &z0t, &params, steps, pairs, seed)?;
            Ok(SchemeResult {
                all_divergent: t.divergent_replicas == t.replicas,
                csv: mean_sq_csv(&t),
            })
        }
    }
}

fn run_overdamped(
    scheme: SchemeId,
    args: &CoupleArgs,
    target: &Target,
    center: &[f64],
    h: f64,
) -> Result<SchemeResult, CliError> {
    let steps = args.steps.unwrap_or(1000);
    let replicas = args.pairs.unwrap_or(8);
    let seed = args.seed.unwrap_or(0);
    let (a, b) = start_pair(center, seed, 0);
    let t = match args.grad.unwrap_or(GradKind::Full) {
        GradKind::Full => {
            let p = target.potential();
            coupled_run_overdamped(scheme, |_| FullGradient::new(&p), &a.x, &b.x, h, steps, replicas, seed)?
        }
        grad => {
            let blr = target.require_blr(grad)?;
            let batch = require(args.batch, "batch")?;
            let anchor = (grad == GradKind::Vrsg).then_some(center);
            let est = make_estimator(blr, estimator_kind(grad), batch, anchor, NoiseStream::in_domain(seed, 0, 1))?;
            coupled_run_overdamped(
                scheme,
                |r| est.with_noise(NoiseStream::in_domain(seed, r, 1)),
                &a.x,
                &b.x,
                h,
                steps,
                replicas,
                seed,
            )?
        }
    };
    Ok(SchemeResult {
        all_divergent: t.divergent_replicas == t.replicas,
        csv: mean_sq_csv(&t),
    })
}

pub fn run(args: &CoupleArgs) -> Result<Outcome, CliError> {
    let schemes = parse_schemes(require(args.scheme.as_deref(), "scheme")?, true)?;
    let h = require(args.h, "h")?;
    let outputs = scheme_outputs(args.out.as_deref(), &schemes)?;
    let target = Target::build(&args.target)?;
    let center = target.minimizer()?;
    let mut all_divergent = true;
    let mut files = Vec::with_capacity(schemes.len());
    for &scheme in &schemes {
        let r = if scheme.is_kinetic() {
            run_kinetic(scheme, args, &target, &center, h)?
        } else {
            run_overdamped(scheme, args, &target, &center, h)?
        };
        all_divergent &= r.all_divergent;
        files.push(r.csv);
    }
    for (out, csv) in outputs.iter().zip(&files) {
        emit(out.as_deref(), csv.as_bytes())?;
    }
    Ok(if all_divergent { Outcome::AllDivergent } else { Outcome::Ok })
}
