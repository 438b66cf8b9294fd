//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p langevin-kit-cli --test acceptance -- 3 5`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use langevin_kit::contraction::{
    certify, constants_for, constants_for_sg, coupled_run, coupled_run_overdamped, coupled_run_sg, max_stepsize,
    overdamped_rate, DEFAULT_LAMBDA_POINTS, DEFAULT_U_POINTS,
};
use langevin_kit::diagnostics::{bias_table, ess, CellStatus, Reference};
use langevin_kit::integrators::{glc_limit_check, one_minus_eta, IntegratorParams, IntegratorState, SchemeId};
use langevin_kit::noise::{NoiseSource, NoiseStream, ZeroNoise};
use langevin_kit::phase::PhaseState;
use langevin_kit::potentials::{
    blr_potential, estimate_cg, gaussian_potential, make_estimator, minimize, synth_dataset, BlrPotential,
    EstimatorKind, FullGradient, GradientSource, Potential,
};
use langevin_kit::spectral::{lyapunov_rate_roabao, mode_matrix, spectral_gap};
use langevin_kit::Error;

type Check = Result<String, String>;

const M_SMALL: f64 = 1.0;
const M_BIG: f64 = 10.0;
/// Absolute slack on squared distances between chains whose states are
/// O(1): differences below about 1e-12 are dominated by rounding.
const ROUNDOFF_SQ: f64 = 1e-24;
/// Prior variance of the synthetic logistic-regression target; gives `m = 100`.
const BLR_PRIOR_VARIANCE: f64 = 0.01;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn log_uniform(noise: &mut NoiseStream, lo: f64, hi: f64) -> f64 {
    (lo.ln() + noise.uniform() * (hi / lo).ln()).exp()
}

fn normal_state(noise: &mut NoiseStream, n: usize) -> PhaseState {
    let mut x = vec![0.0; n];
    let mut v = vec![0.0; n];
    noise.standard_normals(&mut x);
    noise.standard_normals(&mut v);
    PhaseState::new(x, v).unwrap()
}

struct Blr {
    potential: BlrPotential,
    mode: Vec<f64>,
}

fn blr_target(rows: usize, dim: usize) -> Blr {
    let data = synth_dataset(0, rows, dim, 2.0).unwrap().with_prior_variance(BLR_PRIOR_VARIANCE).unwrap();
    let potential = blr_potential(data).unwrap();
    let mode = minimize(&potential, 1e-10, 10_000).unwrap();
    Blr { potential, mode }
}

/// Probes for the Jacobian-variance constant: the mode and four points at
/// posterior scale around it.
fn cg_probes(t: &Blr, seed: u64) -> Vec<Vec<f64>> {
    let d = t.mode.len();
    let scale = BLR_PRIOR_VARIANCE.sqrt();
    let mut noise = NoiseStream::new(seed, 99);
    let mut out = vec![t.mode.clone()];
    for _ in 0..4 {
        let mut z = vec![0.0; d];
        noise.standard_normals(&mut z);
        out.push(t.mode.iter().zip(&z).map(|(m, z)| m + scale * z).collect());
    }
    out
}

/// Friction and stepsize drawn inside the scheme's region: `γ` log-uniform
/// in `[γ₀, 4γ₀]` and `h` uniform in `(0.02, 0.999)·h₀(γ)`.
fn region_point(scheme: SchemeId, noise: &mut NoiseStream) -> (f64, f64) {
    let gamma0 = constants_for(scheme, M_SMALL, M_BIG, 10.0, 1e-3).unwrap().gamma0;
    loop {
        let gamma = log_uniform(noise, gamma0, 4.0 * gamma0);
        if let Some(h0) = max_stepsize(scheme, M_BIG, gamma).unwrap() {
            let h = h0 * (0.02 + 0.979 * noise.uniform());
            return (gamma, h);
        }
    }
}

fn criterion_1() -> Check {
    let target = gaussian_potential(&[M_SMALL, M_BIG]).map_err(err)?;
    let (points, pairs, steps) = (20, 20, 2000);
    let mut runs = 0;
    let mut worst: f64 = 0.0;
    for (si, &scheme) in SchemeId::KINETIC.iter().enumerate() {
        let mut noise = NoiseStream::in_domain(1, si as u64, 7);
        for p in 0..points {
            let (gamma, h) = region_point(scheme, &mut noise);
            let k = constants_for(scheme, M_SMALL, M_BIG, gamma, h).map_err(err)?;
            ensure(k.in_region(), || format!("{scheme} sample ({gamma}, {h}) outside region"))?;
            let norm = k.norm().map_err(err)?;
            let params = IntegratorParams::new(h, gamma).map_err(err)?;
            for q in 0..pairs {
                let z0 = normal_state(&mut noise, 2);
                let z0t = normal_state(&mut noise, 2);
                let stream = NoiseStream::new(1000 + si as u64, (p * pairs + q) as u64);
                let t = coupled_run(scheme, &target, &norm, &z0, &z0t, &params, steps, stream).map_err(err)?;
                ensure(!t.divergent && t.distances_sq.len() == steps + 1, || {
                    format!("{scheme} diverged at γ={gamma}, h={h}")
                })?;
                let d0 = t.distances_sq[0];
                for (i, &d) in t.distances_sq.iter().enumerate() {
                    let bound = k.squared_bound(i) * d0;
                    if i > 0 {
                        worst = worst.max(d / bound);
                    }
                    ensure(d <= bound * (1.0 + 1e-12), || {
                        format!("{scheme} γ={gamma} h={h} pair {q} step {i}: {d:e} > bound {bound:e}")
                    })?;
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} coupled runs x {steps} steps, 0 violations, max ratio to bound for k >= 1 {worst:.6}"))
}

fn criterion_2() -> Check {
    let gap = spectral_gap(SchemeId::Em, 1.0, 1.0, 0.1, 2.0).map_err(err)?;
    let p = mode_matrix(SchemeId::Em, 1.0, 0.1, 2.0).map_err(err)?.matrix().map_err(err)?;
    let (r1, r2) = p.eigen_moduli();
    ensure((gap.gap - 0.1).abs() < 1e-12, || format!("EM gap {} != 0.1", gap.gap))?;
    ensure((r1 - 0.9).abs() < 1e-12 && (r2 - 0.9).abs() < 1e-12, || {
        format!("EM eigenvalue moduli {r1}, {r2} != 0.9")
    })?;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for &scheme in &SchemeId::KINETIC {
        for &lambda in &[1.0, 10.0] {
            for &(gamma, h) in &[(2.0, 0.1), (5.0, 0.05), (0.5, 0.2), (20.0, 0.01)] {
                let target = gaussian_potential(&[lambda]).map_err(err)?;
                let params = IntegratorParams::new(h, gamma).map_err(err)?;
                let mut state = IntegratorState::new(PhaseState::new(vec![1.0], vec![-0.5]).map_err(err)?);
                let mut grad = FullGradient::new(&target);
                for _ in 0..100 {
                    state.step(scheme, &mut grad, &params, &mut ZeroNoise).map_err(err)?;
                }
                // Zero noise puts the rOABAO midpoint at h/2.
                let m = mode_matrix(scheme, lambda, h, gamma).map_err(err)?.at(0.5 * h);
                let want = m.pow(100).apply([1.0, -0.5]);
                let got = [state.phase.x[0], state.phase.v[0]];
                let scale = want[0].hypot(want[1]);
                let rel = (got[0] - want[0]).hypot(got[1] - want[1]) / scale;
                worst = worst.max(rel);
                ensure(rel <= 1e-10, || {
                    format!("{scheme} λ={lambda} γ={gamma} h={h}: relative error {rel:e}")
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!(
        "EM gap {:.15}, {cases} zero-noise 100-step runs match matrix powers (worst rel {worst:.1e})",
        gap.gap
    ))
}

fn criterion_3() -> Check {
    let n = 20;
    let mut cells = 0;
    let mut tightest = f64::INFINITY;
    for &scheme in &SchemeId::KINETIC {
        let gamma0 = constants_for(scheme, M_SMALL, M_BIG, 10.0, 1e-3).unwrap().gamma0;
        for i in 0..n {
            // Log-spaced over [1.01 γ₀, 10 γ₀]; h over (0, h₀(γ)).
            let gamma = 1.01 * gamma0 * (10.0f64 / 1.01).powf(i as f64 / (n - 1) as f64);
            let h0 = max_stepsize(scheme, M_BIG, gamma).map_err(err)?.ok_or("no stepsize ceiling")?;
            for j in 1..=n {
                let h = h0 * j as f64 / (n as f64 + 0.5);
                let k = constants_for(scheme, M_SMALL, M_BIG, gamma, h).map_err(err)?;
                ensure(k.in_region(), || format!("{scheme} cell ({gamma}, {h}) outside region"))?;
                let (gap, slack) = if scheme == SchemeId::Roabao {
                    let e = lyapunov_rate_roabao(M_SMALL, M_BIG, h, gamma, 10_000, 4, (i * n + j) as u64)
                        .map_err(err)?;
                    (1.0 - e.rate, 3.0 * 1.96 * e.std_error)
                } else {
                    (spectral_gap(scheme, M_SMALL, M_BIG, h, gamma).map_err(err)?.gap, 0.0)
                };
                tightest = tightest.min(gap / k.c);
                ensure(gap >= k.c - slack, || {
                    format!("{scheme} γ={gamma} h={h}: gap {gap:e} < c {:e}", k.c)
                })?;
                cells += 1;
            }
        }
    }
    Ok(format!("{cells} cells, 0 violations, min gap/c {tightest:.3}"))
}

fn criterion_4() -> Check {
    let m = M_BIG;
    let mut out = Vec::new();
    let g_bbk = (12.0 * m).sqrt() * 1.01;
    let g_spv = (11.0 * m).sqrt() * 1.01;
    let g_ro = 5.0 * m.sqrt();
    // h = (1 − η(h))/(4√M): the fixed point found by the OBABO ceiling.
    let h_ro = max_stepsize(SchemeId::Obabo, m, g_ro).map_err(err)?.ok_or("no ceiling")?;
    let fixed = one_minus_eta(g_ro, h_ro).map_err(err)? / (4.0 * m.sqrt());
    ensure((fixed - h_ro).abs() < 1e-12 * h_ro, || format!("rOABAO h {h_ro} is not a fixed point"))?;
    for (scheme, gamma, h) in [
        (SchemeId::Bbk, g_bbk, 1.0 / (8.0 * g_bbk)),
        (SchemeId::Spv, g_spv, 1.0 / (4.0 * g_spv)),
        (SchemeId::Roabao, g_ro, h_ro),
    ] {
        let r = certify(scheme, M_SMALL, m, gamma, h, DEFAULT_LAMBDA_POINTS, DEFAULT_U_POINTS, false).map_err(err)?;
        ensure(r.pass && r.min_a > 0.0 && r.min_determinant > 0.0, || {
            format!("{scheme}: min A {:e}, min det {:e}", r.min_a, r.min_determinant)
        })?;
        out.push(format!("{scheme} minA={:.2e} minDet={:.2e}", r.min_a, r.min_determinant));
    }
    Ok(out.join(", "))
}

/// The `h` on a fine log grid below `h_max` that maximises `rate(h)`.
fn best_stepsize(h_max: f64, rate: impl Fn(f64) -> f64) -> f64 {
    (1..=400)
        .map(|i| h_max * (1e-4f64).powf(1.0 - i as f64 / 400.0) * 0.999)
        .max_by(|a, b| rate(*a).total_cmp(&rate(*b)))
        .unwrap()
}

fn criterion_5() -> Check {
    let t = blr_target(500, 20);
    let p = &t.potential;
    let (m, big_m) = (p.strong_convexity(), p.gradient_lipschitz());
    let (replicas, steps, batch, seed) = (64, 500, 50, 5);
    let probes = cg_probes(&t, seed);
    let mut est = make_estimator(p, EstimatorKind::Subsampled, batch, None, NoiseStream::in_domain(seed, 0, 1))
        .map_err(err)?;
    let c_g = estimate_cg(&mut est, &probes, 400).map_err(err)?.c_g;
    let mut report = vec![format!("C_G={c_g:.4e}")];
    let mut noise = NoiseStream::in_domain(seed, 0, 2);
    let mut z0 = normal_state(&mut noise, t.mode.len());
    z0.x.iter_mut().zip(&t.mode).for_each(|(x, c)| *x = c + 0.1 * *x);
    let mut z0t = normal_state(&mut noise, t.mode.len());
    z0t.x.iter_mut().zip(&t.mode).for_each(|(x, c)| *x = c + 0.1 * *x);

    for (scheme, gamma_factor) in [(SchemeId::Baoab, 1.5), (SchemeId::Em, 1.0)] {
        let gamma0 = constants_for(scheme, m, big_m, 10.0, 1e-4).map_err(err)?.gamma0;
        let gamma = gamma_factor * gamma0;
        let h_max = max_stepsize(scheme, big_m, gamma).map_err(err)?.ok_or("no ceiling")?;
        let h = best_stepsize(h_max, |h| constants_for_sg(scheme, m, big_m, gamma, h, c_g).map(|k| k.c).unwrap_or(-1.0));
        let k = constants_for_sg(scheme, m, big_m, gamma, h, c_g).map_err(err)?;
        ensure(k.c > 0.0 && !k.vacuous, || format!("{scheme}: no stepsize with c(h) > 0"))?;
        let norm = k.base.norm().map_err(err)?;
        let params = IntegratorParams::new(h, gamma).map_err(err)?;
        let est = make_estimator(p, EstimatorKind::Subsampled, batch, None, NoiseStream::in_domain(seed, 0, 1))
            .map_err(err)?;
        let traj = coupled_run_sg(scheme, &est, &norm, &z0, &z0t, &params, steps, replicas, seed).map_err(err)?;
        let d0 = norm.distance_sq(&z0, &z0t);
        let mut worst: f64 = 0.0;
        for i in 0..=steps {
            let bound = k.squared_bound(i) * d0;
            if i > 0 {
                worst = worst.max(traj.upper_ci(i) / bound);
            }
            ensure(traj.upper_ci(i) <= bound * (1.0 + 1e-12) + ROUNDOFF_SQ, || {
                format!("{scheme} step {i}: upper CI {:e} > bound {bound:e}", traj.upper_ci(i))
            })?;
        }
        // Shrinking the batch inflates C_G until the rate is vacuous.
        let mut b = batch;
        let vacuous_at = loop {
            b /= 2;
            if b == 0 {
                break None;
            }
            let mut e = make_estimator(p, EstimatorKind::Subsampled, b, None, NoiseStream::in_domain(seed, 0, 1))
                .map_err(err)?;
            let cg_b = estimate_cg(&mut e, &probes, 400).map_err(err)?.c_g;
            let kb = constants_for_sg(scheme, m, big_m, gamma, h, cg_b).map_err(err)?;
            if kb.vacuous {
                ensure(kb.c <= 0.0, || "vacuous flag with positive rate".into())?;
                break Some(b);
            }
        };
        let b_vac = vacuous_at.ok_or_else(|| format!("{scheme}: vacuous flag never triggered"))?;
        report.push(format!(
            "{scheme} γ={gamma:.2} h={h:.3e} c={:.2e} max CI/bound (k >= 1) {worst:.3}, vacuous at b={b_vac}",
            k.c
        ));
    }
    Ok(report.join("; "))
}

fn criterion_6() -> Check {
    let target = gaussian_potential(&[M_SMALL, M_BIG]).map_err(err)?;
    let (x0, y0) = ([1.5, -0.7], [-0.4, 0.9]);
    let steps = 200;
    let mut checks = 0;
    for &scheme in &SchemeId::OVERDAMPED {
        for &h in &[0.01, 0.05, 0.1, 0.15, 0.19] {
            let t = coupled_run_overdamped(scheme, |_| FullGradient::new(&target), &x0, &y0, h, steps, 1, 3)
                .map_err(err)?;
            let factor = 1.0 - overdamped_rate(M_SMALL, M_BIG, h, 0.0);
            let d = &t.mean;
            for k in 0..steps {
                ensure(d[k + 1] <= factor * d[k] * (1.0 + 1e-12), || {
                    format!("{scheme} h={h} step {k}: ratio {} > {factor}", d[k + 1] / d[k])
                })?;
                // Linear oracle: Δx_k = (I − hH)^k Δx_0 coordinatewise.
                let want: f64 = [M_SMALL, M_BIG]
                    .iter()
                    .zip(x0.iter().zip(&y0))
                    .map(|(l, (a, b))| ((1.0 - h * l).powi(k as i32 + 1) * (a - b)).powi(2))
                    .sum();
                // Both chains carry O(1) noise, so the difference has an
                // absolute roundoff floor of about 1e-15.
                ensure((d[k + 1].sqrt() - want.sqrt()).abs() <= 1e-10 * want.sqrt() + 1e-13, || {
                    format!("{scheme} h={h} step {k}: {} vs oracle {want}", d[k + 1])
                })?;
            }
            checks += 1;
        }
    }

    let t = blr_target(500, 20);
    let p = &t.potential;
    let (m, big_m) = (p.strong_convexity(), p.gradient_lipschitz());
    let (replicas, steps, batch, seed) = (64, 500, 50, 6);
    let est = make_estimator(p, EstimatorKind::Subsampled, batch, None, NoiseStream::in_domain(seed, 0, 1))
        .map_err(err)?;
    let c_g = estimate_cg(&mut est.clone(), &cg_probes(&t, seed), 400).map_err(err)?.c_g;
    let h = best_stepsize(2.0 / big_m, |h| overdamped_rate(m, big_m, h, c_g));
    let rate = overdamped_rate(m, big_m, h, c_g);
    ensure(rate > 0.0, || "no stepsize with a positive overdamped rate".into())?;
    let mut noise = NoiseStream::in_domain(seed, 0, 2);
    let mut x0 = vec![0.0; t.mode.len()];
    let mut y0 = vec![0.0; t.mode.len()];
    noise.standard_normals(&mut x0);
    noise.standard_normals(&mut y0);
    for (x, y, c) in x0.iter_mut().zip(y0.iter_mut()).zip(&t.mode).map(|((x, y), c)| (x, y, c)) {
        *x = c + 0.1 * *x;
        *y = c + 0.1 * *y;
    }
    let mut worst: f64 = 0.0;
    for &scheme in &SchemeId::OVERDAMPED {
        let traj = coupled_run_overdamped(
            scheme,
            |r| est.with_noise(NoiseStream::in_domain(seed, r, 1)),
            &x0,
            &y0,
            h,
            steps,
            replicas,
            seed,
        )
        .map_err(err)?;
        let d0: f64 = x0.iter().zip(&y0).map(|(a, b)| (a - b) * (a - b)).sum();
        for k in 0..=steps {
            let bound = (1.0 - rate).powi(k as i32) * d0;
            if k > 0 && bound > ROUNDOFF_SQ {
                worst = worst.max(traj.upper_ci(k) / bound);
            }
            ensure(traj.upper_ci(k) <= bound * (1.0 + 1e-12) + ROUNDOFF_SQ, || {
                format!("SG {scheme} step {k}: upper CI {:e} > bound {bound:e}", traj.upper_ci(k))
            })?;
        }
    }
    Ok(format!(
        "{checks} full-gradient runs match the linear oracle; SG C_G={c_g:.3e} h={h:.3e} rate={rate:.2e}, max CI/bound (k >= 1) {worst:.3}"
    ))
}

fn criterion_7() -> Check {
    let mut out = Vec::new();
    for scheme in [SchemeId::Baoab, SchemeId::Obabo] {
        let r = glc_limit_check(scheme, 0.1, 1e-12, 7).map_err(err)?;
        ensure(r.pass && r.steps == 100, || format!("{scheme}: deviation {:e}", r.max_deviation))?;
        out.push(format!("{scheme} dev {:.1e}", r.max_deviation));
    }
    for scheme in [SchemeId::Bbk, SchemeId::Spv, SchemeId::Svv] {
        ensure(matches!(glc_limit_check(scheme, 0.1, 1e-12, 7), Err(Error::NotGlc(_))), || {
            format!("{scheme} did not raise the non-GLC error")
        })?;
    }
    out.push("BBK/SPV/SVV rejected".into());
    Ok(out.join(", "))
}

fn z_test(p: &BlrPotential, mut est: impl GradientSource, q: &[f64], draws: usize) -> Result<f64, String> {
    let d = q.len();
    let mut full = vec![0.0; d];
    p.gradient(q, &mut full);
    let mut g = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for _ in 0..draws {
        est.gradient(q, &mut g);
        for i in 0..d {
            let e = g[i] - full[i];
            sum[i] += e;
            sum_sq[i] += e * e;
        }
    }
    let n = draws as f64;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        let mean = sum[i] / n;
        let var = (sum_sq[i] - n * mean * mean) / (n - 1.0);
        let z = mean / (var / n).sqrt();
        ensure(z.is_finite(), || format!("component {i}: z not finite"))?;
        worst = worst.max(z.abs());
    }
    Ok(worst)
}

fn sym2_norm_sq(a: f64, b: f64, c: f64) -> f64 {
    // Eigenvalues of [[a, b], [b, c]].
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mid.abs() + rad).powi(2)
}

fn criterion_8() -> Check {
    let t = blr_target(500, 20);
    let p = &t.potential;
    let mut noise = NoiseStream::new(8, 0);
    let mut off = vec![0.0; t.mode.len()];
    noise.standard_normals(&mut off);
    let q: Vec<f64> = t.mode.iter().zip(&off).map(|(m, o)| m + 0.1 * o).collect();
    let draws = 100_000;
    let sg = make_estimator(p, EstimatorKind::Subsampled, 50, None, NoiseStream::in_domain(8, 1, 1)).map_err(err)?;
    let z_sg = z_test(p, sg, &q, draws)?;
    let vr = make_estimator(p, EstimatorKind::VarianceReduced, 50, Some(&t.mode), NoiseStream::in_domain(8, 2, 1))
        .map_err(err)?;
    let z_vr = z_test(p, vr.clone(), &q, draws)?;
    ensure(z_sg < 4.0 && z_vr < 4.0, || format!("max |z|: subsampled {z_sg}, variance-reduced {z_vr}"))?;

    let mut full = vec![0.0; q.len()];
    p.gradient(&t.mode, &mut full);
    let mut g = vec![0.0; q.len()];
    let mut vr = vr;
    let mut dev: f64 = 0.0;
    for _ in 0..100 {
        vr.gradient(&t.mode, &mut g);
        dev = dev.max(g.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    ensure(dev == 0.0, || format!("variance-reduced deviation at anchor {dev:e}"))?;

    // Exhaustive expectation over all C(20, 10) batches.
    let small = blr_target(20, 2);
    let sp = &small.potential;
    let (n, b) = (20usize, 10usize);
    let weights: Vec<(f64, f64, f64)> = (0..n)
        .map(|j| {
            let x = sp.target().row(j);
            let s = 1.0 / (1.0 + (-(x[0] * small.mode[0] + x[1] * small.mode[1])).exp());
            let w = s * (1.0 - s);
            (w * x[0] * x[0], w * x[0] * x[1], w * x[1] * x[1])
        })
        .collect();
    let total = weights.iter().fold((0.0, 0.0, 0.0), |a, w| (a.0 + w.0, a.1 + w.1, a.2 + w.2));
    let scale = n as f64 / b as f64;
    let mut idx: Vec<usize> = (0..b).collect();
    let (mut acc, mut count) = (0.0, 0u64);
    loop {
        let s = idx.iter().fold((0.0, 0.0, 0.0), |a, &j| {
            let w = weights[j];
            (a.0 + w.0, a.1 + w.1, a.2 + w.2)
        });
        acc += sym2_norm_sq(scale * s.0 - total.0, scale * s.1 - total.1, scale * s.2 - total.2);
        count += 1;
        // Next combination in lexicographic order.
        let Some(i) = (0..b).rev().find(|&i| idx[i] < n - b + i) else {
            break;
        };
        idx[i] += 1;
        for k in i + 1..b {
            idx[k] = idx[k - 1] + 1;
        }
    }
    let oracle = acc / count as f64;
    let mut e = make_estimator(sp, EstimatorKind::Subsampled, b, None, NoiseStream::in_domain(8, 3, 1)).map_err(err)?;
    let est = estimate_cg(&mut e, std::slice::from_ref(&small.mode), 20_000).map_err(err)?.c_g;
    let rel = (est / oracle - 1.0).abs();
    ensure(count == 184_756 && rel < 0.05, || format!("C_G {est:e} vs oracle {oracle:e} ({count} batches)"))?;
    Ok(format!(
        "max |z| sg {z_sg:.2} vr {z_vr:.2} at 1e5 draws; anchor deviation 0; C_G {est:.4e} vs enumeration {oracle:.4e} ({:.1}%)",
        100.0 * rel
    ))
}

fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    NoiseStream::new(seed, 0).standard_normals(&mut e);
    let mut x = Vec::with_capacity(n);
    let mut prev = e[0] / (1.0 - phi * phi).sqrt();
    x.push(prev);
    for z in &e[1..] {
        prev = phi * prev + z;
        x.push(prev);
    }
    x
}

fn ess_oracles() -> Check {
    let n = 100_000;
    let iid = ess(&ar1(n, 0.0, 10)).map_err(err)? / n as f64;
    let corr = ess(&ar1(n, 0.5, 11)).map_err(err)? / n as f64;
    ensure((0.8..=1.2).contains(&iid), || format!("iid ESS/n = {iid}"))?;
    ensure((corr * 3.0 - 1.0).abs() < 0.2, || format!("AR(1) ESS/n = {corr}, want 1/3 within 20%"))?;
    Ok(format!("iid ESS/n {iid:.3}, AR(1) phi=0.5 ESS/n {corr:.4} (1/3 = 0.3333)"))
}

const BIAS_SCHEMES: [SchemeId; 4] = [SchemeId::Baoab, SchemeId::Obabo, SchemeId::Roabao, SchemeId::Ses];

fn criterion_9() -> Check {
    let t = blr_target(500, 20);
    let p = &t.potential;
    let (m, big_m) = (p.strong_convexity(), p.gradient_lipschitz());
    let mut cells = Vec::new();
    for &scheme in &BIAS_SCHEMES {
        let gamma = 1.5 * constants_for(scheme, m, big_m, 10.0, 1e-4).map_err(err)?.gamma0;
        let h0 = max_stepsize(scheme, big_m, gamma).map_err(err)?.ok_or("no ceiling")?;
        cells.push((scheme, 0.25 * h0, gamma));
    }
    let table = bias_table(
        &cells,
        p,
        &t.mode,
        |_| FullGradient::new(p),
        EstimatorKind::Full,
        None,
        Reference::Internal,
        20_000,
        2_000,
        16,
        9,
        None,
    )
    .map_err(err)?;
    let mut rows = Vec::new();
    for c in &table.cells {
        let s = &c.summary;
        ensure(c.status == CellStatus::Ok, || format!("{} did not converge", s.scheme))?;
        ensure(c.bias.abs() <= 4.0 * c.se, || {
            format!("{}: bias {:.4} exceeds 4 SE ({:.4})", s.scheme, c.bias, c.se)
        })?;
        rows.push(format!("{} {:+.4}±{:.4}", s.scheme, c.bias, c.se));
    }
    let ess_line = ess_oracles()?;
    idx_table_echo()?;
    let smoke = bias_smoke()?;
    Ok(format!(
        "ref E[U]={:.3}; {}; ESS oracles ok ({ess_line}); IDX mode emits a table; CLI 4x2 table in {smoke:.1?}",
        table.reference,
        rows.join(", ")
    ))
}

/// The CLI bias table on the synthetic BLR target, 4 schemes by 2
/// stepsizes with 16 replicas and default run lengths, must finish in
/// under two minutes.
fn bias_smoke() -> Result<Duration, String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_langevin-kit"))
        .args(["bias", "--target", "blr-synth", "--prior-variance", "0.01", "--scheme", "baoab,obabo,roabao,ses",
            "--gamma", "25", "--h", "0.0015,0.003", "--replicas", "16"])
        .env_remove("LANGEVIN_KIT_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.status.code() == Some(0), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(text.lines().count() == 9 && text.lines().skip(1).all(|l| l.ends_with(",ok")), || {
        format!("unexpected bias table:\n{text}")
    })?;
    ensure(elapsed < Duration::from_secs(120), || format!("bias table took {elapsed:.1?}"))?;
    Ok(elapsed)
}

/// Writes a tiny IDX pair and checks that the bias command reads it and
/// prints one row per (scheme, h) cell.
fn idx_table_echo() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (count, side) = (60u32, 3u32);
    let mut noise = NoiseStream::new(12, 0);
    let mut images = vec![0, 0, 8, 3];
    for v in [count, side, side] {
        images.extend(v.to_be_bytes());
    }
    let mut labels = vec![0, 0, 8, 1];
    labels.extend(count.to_be_bytes());
    for i in 0..count {
        let digit = if i % 2 == 0 { 3u8 } else { 5u8 };
        labels.push(digit);
        for _ in 0..side * side {
            let base = if digit == 3 { 60.0 } else { 180.0 };
            images.push((base + 60.0 * (noise.uniform() - 0.5)) as u8);
        }
    }
    let ip = dir.path().join("img.idx");
    let lp = dir.path().join("lab.idx");
    std::fs::write(&ip, images).map_err(|e| e.to_string())?;
    std::fs::write(&lp, labels).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_langevin-kit"))
        .args(["bias", "--target", "blr-idx", "--digits", "3,5", "--scheme", "baoab,obabo", "--gamma", "30",
            "--h", "0.02,0.01", "--iterations", "2000", "--replicas", "2", "--reference", "4.5"])
        .arg("--mnist-images")
        .arg(&ip)
        .arg("--mnist-labels")
        .arg(&lp)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(0), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure(text.lines().count() == 5, || format!("IDX table has unexpected shape:\n{text}"))
}

fn criterion_10() -> Check {
    ess_oracles()
}

fn run_cli(args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_langevin-kit"))
        .args(args)
        .env("LANGEVIN_KIT_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(matches!(out.status.code(), Some(0 | 3 | 4)), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn criterion_11() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let gauss = ["--target", "gaussian", "--m", "1", "--M", "10"];
    let blr = ["--target", "blr-synth", "--n-data", "200", "--dim", "5", "--prior-variance", "0.01"];
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("couple.csv", [&["couple", "--scheme", "baoab", "--gamma", "6.33", "--h", "0.05", "--steps", "300",
            "--pairs", "8", "--seed", "1"][..], &gauss].concat()),
        ("couple-sg.csv", [&["couple", "--scheme", "em", "--gamma", "40", "--h", "0.002", "--steps", "200",
            "--pairs", "8", "--seed", "2", "--grad", "sg", "--batch", "20"][..], &blr].concat()),
        ("couple-all.csv", [&["couple", "--scheme", "all", "--gamma", "20", "--h", "0.01", "--steps", "100",
            "--pairs", "4", "--seed", "3"][..], &gauss].concat()),
        ("couple-od.csv", [&["couple", "--scheme", "od-lm", "--h", "0.005", "--steps", "200", "--pairs", "8",
            "--seed", "4", "--grad", "vrsg", "--batch", "20"][..], &blr].concat()),
        ("spectral.csv", vec!["spectral", "--scheme", "em", "--m", "1", "--M", "10", "--h-min", "1e-3", "--h-max",
            "2", "--gamma-min", "0.1", "--gamma-max", "100", "--h-points", "12", "--gamma-points", "12"]),
        ("spectral-ro.csv", vec!["spectral", "--scheme", "roabao", "--m", "1", "--M", "10", "--h-min", "1e-2",
            "--h-max", "0.5", "--gamma-min", "1", "--gamma-max", "50", "--h-points", "4", "--gamma-points", "4",
            "--lyapunov-N", "2000", "--replicas", "4", "--seed", "5"]),
        ("certify.json", vec!["certify", "--scheme", "spv", "--m", "1", "--M", "10", "--gamma", "10.5", "--h",
            "0.02"]),
        ("certify-fail.json", vec!["certify", "--scheme", "roabao", "--m", "1", "--M", "10", "--gamma", "15.8",
            "--h", "1"]),
        ("sample.csv", [&["sample", "--scheme", "baoab,od-em", "--gamma", "3", "--h", "0.05", "--iterations",
            "3000", "--replicas", "4", "--seed", "6"][..], &gauss].concat()),
        ("sample.json", [&["sample", "--scheme", "obabo", "--gamma", "40", "--h", "0.005", "--iterations", "2000",
            "--replicas", "3", "--seed", "7", "--grad", "sg", "--batch", "20", "--format", "json"][..], &blr]
            .concat()),
        ("bias.csv", [&["bias", "--scheme", "baoab,em", "--gamma", "40", "--h", "0.004,0.008", "--iterations",
            "2000", "--replicas", "3", "--seed", "8", "--grad", "sg", "--batch", "20"][..], &blr].concat()),
        ("bias.json", [&["bias", "--scheme", "baoab", "--gamma", "3", "--h", "0.05", "--iterations", "2000",
            "--replicas", "2", "--seed", "9", "--format", "json", "--reference", "1"][..], &gauss].concat()),
    ];
    let mut files = 0;
    for (name, args) in &commands {
        let mut outputs = Vec::new();
        for (run, threads) in ["1", "1", "3"].iter().enumerate() {
            let out = path(&format!("{run}-{name}"));
            let mut full = args.clone();
            full.extend(["--out", &out]);
            run_cli(&full, threads)?;
            let stem = Path::new(&out).file_stem().unwrap().to_string_lossy().into_owned();
            let mut produced: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
                .map_err(|e| e.to_string())?
                .map(|e| e.unwrap().path())
                .filter(|p| p.file_stem().is_some_and(|s| s.to_string_lossy().starts_with(&stem)))
                .map(|p| {
                    let tail = p.file_name().unwrap().to_string_lossy()[stem.len()..].to_string();
                    (tail, std::fs::read(&p).unwrap())
                })
                .collect();
            produced.sort();
            ensure(!produced.is_empty(), || format!("{name}: no output"))?;
            outputs.push(produced);
        }
        ensure(outputs[0] == outputs[1], || format!("{name}: reruns differ"))?;
        ensure(outputs[0] == outputs[2], || format!("{name}: output depends on thread count"))?;
        files += outputs[0].len();
    }
    Ok(format!(
        "{} commands, {files} output files byte-identical across reruns and thread counts",
        commands.len()
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "contraction bound, 8 kinetic schemes", budget: Some(Duration::from_secs(30)), run: criterion_1 },
        Criterion { id: 2, name: "exact spectral gap and mode-matrix powers", budget: Some(Duration::from_secs(5)), run: criterion_2 },
        Criterion { id: 3, name: "spectral gap >= c(h) on region grids", budget: Some(Duration::from_secs(60)), run: criterion_3 },
        Criterion { id: 4, name: "BBK/SPV/rOABAO certificates", budget: Some(Duration::from_secs(2)), run: criterion_4 },
        Criterion { id: 5, name: "stochastic-gradient expected contraction", budget: Some(Duration::from_secs(180)), run: criterion_5 },
        Criterion { id: 6, name: "overdamped contraction", budget: Some(Duration::from_secs(30)), run: criterion_6 },
        Criterion { id: 7, name: "high-friction limits", budget: Some(Duration::from_secs(1)), run: criterion_7 },
        Criterion { id: 8, name: "gradient estimators and C_G", budget: Some(Duration::from_secs(120)), run: criterion_8 },
        Criterion { id: 9, name: "desk-scale bias table", budget: None, run: criterion_9 },
        Criterion { id: 10, name: "ESS oracles", budget: Some(Duration::from_secs(10)), run: criterion_10 },
        Criterion { id: 11, name: "CLI determinism", budget: None, run: criterion_11 },
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(msg), Some(b)) if elapsed > b => Err(format!("{msg}; took {elapsed:.2?}, budget {b:.0?}")),
            (r, _) => r,
        };
        match result {
            Ok(msg) => println!("criterion {:>2} PASS [{}] {msg} ({elapsed:.2?})", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{}] {msg} ({elapsed:.2?})", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
