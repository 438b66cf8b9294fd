use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::CouplingPair;
use crate::error::{Error, Result};
use crate::integrators::{step_overdamped, IntegratorParams, OverdampedState, SchemeId};
use crate::noise::NoiseStream;
use crate::phase::{ModifiedNorm, PhaseState};
use crate::potentials::{FullGradient, GradientSource, Potential, StochasticGradient};

/// Squared distances above this count as blow-up.
const DIVERGENCE_SQ: f64 = 1e24;

/// Squared modified-norm distances `‖Δz_k‖²`, `k = 0..=K`, of one coupled
/// run. A divergent run stops early, so the trajectory may be shorter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledTrajectory {
    pub distances_sq: Vec<f64>,
    pub divergent: bool,
}

impl CoupledTrajectory {
    pub fn distances(&self) -> Vec<f64> {
        self.distances_sq.iter().map(|d| d.sqrt()).collect()
    }
}

fn is_blow_up(e: &Error) -> bool {
    matches!(e, Error::NonFinite { .. })
}

#[allow(clippy::too_many_arguments)]
fn run_pair<G: GradientSource + Clone>(
    scheme: SchemeId,
    grad: G,
    norm: &ModifiedNorm,
    z0: &PhaseState,
    z0t: &PhaseState,
    params: &IntegratorParams,
    k: usize,
    noise: NoiseStream,
) -> Result<CoupledTrajectory> {
    if !scheme.is_kinetic() {
        return Err(Error::OverdampedScheme(scheme));
    }
    if z0.dim() != grad.dim() {
        return Err(Error::DimensionMismatch {
            expected: grad.dim(),
            actual: z0.dim(),
        });
    }
    let mut pair = CouplingPair::new(z0.clone(), z0t.clone(), noise)?;
    let mut ga = grad.clone();
    let mut gb = grad;
    let mut out = Vec::with_capacity(k + 1);
    out.push(pair.distance_sq(norm));
    for _ in 0..k {
        match pair.step(scheme, &mut ga, &mut gb, params) {
            Ok(()) => {}
            Err(e) if is_blow_up(&e) => {
                return Ok(CoupledTrajectory {
                    distances_sq: out,
                    divergent: true,
                })
            }
            Err(e) => return Err(e),
        }
        let d = pair.distance_sq(norm);
        out.push(d);
        if !(d <= DIVERGENCE_SQ) {
            return Ok(CoupledTrajectory {
                distances_sq: out,
                divergent: true,
            });
        }
    }
    Ok(CoupledTrajectory {
        distances_sq: out,
        divergent: false,
    })
}

/// Runs two synchronously coupled chains from `z0` and `z0t` for `k` steps
/// with exact gradients.
#[allow(clippy::too_many_arguments)]
pub fn coupled_run<P: Potential>(
    scheme: SchemeId,
    potential: &P,
    norm: &ModifiedNorm,
    z0: &PhaseState,
    z0t: &PhaseState,
    params: &IntegratorParams,
    k: usize,
    noise: NoiseStream,
) -> Result<CoupledTrajectory> {
    run_pair(scheme, FullGradient::new(potential), norm, z0, z0t, params, k, noise)
}

/// Per-step factor `exp(slope)` of a least-squares fit of `ln d_k` against
/// `k` over `k ≥ burn_in`.
pub fn empirical_rate(distances: &[f64], burn_in: usize) -> Result<f64> {
    if distances.len() <= burn_in + 10 {
        return Err(Error::InvalidParameter(format!(
            "trajectory of length {} is too short for burn-in {burn_in}",
            distances.len()
        )));
    }
    let window = &distances[burn_in..];
    if let Some(i) = window.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::ChainsMerged(burn_in + i));
    }
    let n = window.len() as f64;
    let k_mean = (n - 1.0) / 2.0;
    let logs: Vec<f64> = window.iter().map(|d| d.ln()).collect();
    let l_mean = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, l) in logs.iter().enumerate() {
        let dk = i as f64 - k_mean;
        num += dk * (l - l_mean);
        den += dk * dk;
    }
    Ok((num / den).exp())
}

/// Monte Carlo mean of squared distances over independent replicas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSquareTrajectory {
    pub mean: Vec<f64>,
    /// Standard error of each mean; zero for a single replica.
    pub std_error: Vec<f64>,
    pub replicas: usize,
    pub divergent_replicas: usize,
}

impl MeanSquareTrajectory {
    /// Upper end of the two-sided 95% normal interval.
    pub fn upper_ci(&self, k: usize) -> f64 {
        self.mean[k] + 1.96 * self.std_error[k]
    }

    /// Diverged replicas contribute `+∞` from their blow-up onwards.
    fn aggregate(runs: Vec<CoupledTrajectory>, k: usize) -> Self {
        let r = runs.len();
        let rf = r as f64;
        let at = |run: &CoupledTrajectory, i: usize| run.distances_sq.get(i).copied().unwrap_or(f64::INFINITY);
        let divergent_replicas = runs.iter().filter(|run| run.divergent).count();
        let mut mean = vec![0.0; k + 1];
        let mut std_error = vec![0.0; k + 1];
        for i in 0..=k {
            mean[i] = runs.iter().map(|run| at(run, i)).sum::<f64>() / rf;
            if !mean[i].is_finite() {
                std_error[i] = f64::INFINITY;
            } else if r > 1 {
                let ss: f64 = runs.iter().map(|run| (at(run, i) - mean[i]).powi(2)).sum();
                std_error[i] = (ss / (rf - 1.0) / rf).sqrt();
            }
        }
        Self {
            mean,
            std_error,
            replicas: r,
            divergent_replicas,
        }
    }
}

fn check_replicas(replicas: usize) -> Result<()> {
    if replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }
    Ok(())
}

/// Coupled runs with a stochastic gradient source built per replica by
/// `make_grad(r)`. Both chains of a replica use clones of that source, and
/// replica `r` draws its Brownian increments from stream `r` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn coupled_run_sg_with<G, F>(
    scheme: SchemeId,
    make_grad: F,
    norm: &ModifiedNorm,
    z0: &PhaseState,
    z0t: &PhaseState,
    params: &IntegratorParams,
    k: usize,
    replicas: usize,
    seed: u64,
) -> Result<MeanSquareTrajectory>
where
    G: GradientSource + Clone,
    F: Fn(u64) -> G + Sync,
{
    check_replicas(replicas)?;
    let runs = (0..replicas as u64)
        .into_par_iter()
        .map(|r| run_pair(scheme, make_grad(r), norm, z0, z0t, params, k, NoiseStream::new(seed, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeanSquareTrajectory::aggregate(runs, k))
}

/// [`coupled_run_sg_with`] for a logistic-regression estimator: replica `r`
/// draws its batches from stream `r` of `seed` in a separate domain.
#[allow(clippy::too_many_arguments)]
pub fn coupled_run_sg(
    scheme: SchemeId,
    estimator: &StochasticGradient<'_>,
    norm: &ModifiedNorm,
    z0: &PhaseState,
    z0t: &PhaseState,
    params: &IntegratorParams,
    k: usize,
    replicas: usize,
    seed: u64,
) -> Result<MeanSquareTrajectory> {
    coupled_run_sg_with(
        scheme,
        |r| estimator.with_noise(NoiseStream::in_domain(seed, r, 1)),
        norm,
        z0,
        z0t,
        params,
        k,
        replicas,
        seed,
    )
}

/// Coupled OD-EM or OD-LM chains; Euclidean squared distances averaged over
/// replicas. Gradient sources and noise are assigned as in
/// [`coupled_run_sg_with`].
#[allow(clippy::too_many_arguments)]
pub fn coupled_run_overdamped<G, F>(
    scheme: SchemeId,
    make_grad: F,
    x0: &[f64],
    y0: &[f64],
    h: f64,
    k: usize,
    replicas: usize,
    seed: u64,
) -> Result<MeanSquareTrajectory>
where
    G: GradientSource + Clone,
    F: Fn(u64) -> G + Sync,
{
    if scheme.is_kinetic() {
        return Err(Error::KineticScheme(scheme));
    }
    if x0.len() != y0.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            actual: y0.len(),
        });
    }
    check_replicas(replicas)?;
    let dist = |a: &OverdampedState, b: &OverdampedState| -> f64 {
        a.x.iter().zip(&b.x).map(|(p, q)| (p - q) * (p - q)).sum()
    };
    let runs = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<CoupledTrajectory> {
            let mut ga = make_grad(r);
            let mut gb = ga.clone();
            let mut a = OverdampedState::new(x0.to_vec());
            let mut b = OverdampedState::new(y0.to_vec());
            let mut noise = NoiseStream::new(seed, r);
            let mut out = Vec::with_capacity(k + 1);
            out.push(dist(&a, &b));
            for _ in 0..k {
                let mut nb = noise.clone();
                let ra = step_overdamped(scheme, &mut a, &mut ga, h, &mut noise);
                let rb = step_overdamped(scheme, &mut b, &mut gb, h, &mut nb);
                match ra.and(rb) {
                    Ok(()) => {}
                    Err(e) if is_blow_up(&e) => {
                        return Ok(CoupledTrajectory {
                            distances_sq: out,
                            divergent: true,
                        })
                    }
                    Err(e) => return Err(e),
                }
                let d = dist(&a, &b);
                out.push(d);
                if !(d <= DIVERGENCE_SQ) {
                    return Ok(CoupledTrajectory {
                        distances_sq: out,
                        divergent: true,
                    });
                }
            }
            Ok(CoupledTrajectory {
                distances_sq: out,
                divergent: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeanSquareTrajectory::aggregate(runs, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::constants_for;
    use crate::potentials::{blr_potential, gaussian_potential, make_estimator, synth_dataset, EstimatorKind};

    fn pair() -> (PhaseState, PhaseState) {
        (
            PhaseState::new(vec![1.0, -0.5], vec![0.3, 0.2]).unwrap(),
            PhaseState::new(vec![-0.4, 0.7], vec![-1.0, 0.1]).unwrap(),
        )
    }

    #[test]
    fn equal_starts_give_zero() {
        let p = gaussian_potential(&[1.0, 10.0]).unwrap();
        let (z, _) = pair();
        let params = IntegratorParams::new(0.05, 7.0).unwrap();
        for scheme in SchemeId::KINETIC {
            let t = coupled_run(scheme, &p, &ModifiedNorm::euclidean(), &z, &z, &params, 200, NoiseStream::new(1, 0))
                .unwrap();
            assert!(t.distances_sq.iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn quadratic_difference_is_noise_free() {
        let p = gaussian_potential(&[1.0, 10.0]).unwrap();
        let (z, w) = pair();
        let params = IntegratorParams::new(0.05, 7.0).unwrap();
        for scheme in SchemeId::KINETIC {
            let run = |s| {
                coupled_run(scheme, &p, &ModifiedNorm::euclidean(), &z, &w, &params, 300, NoiseStream::new(s, 0))
                    .unwrap()
            };
            let (a, b) = (run(1), run(2));
            if scheme == SchemeId::Roabao {
                // The midpoint u_k is random, so only the Gaussian part cancels.
                assert_ne!(a, b);
            } else {
                // Identical up to rounding: each chain adds its own noise.
                for (x, y) in a.distances_sq.iter().zip(&b.distances_sq) {
                    assert!((x - y).abs() <= 1e-9 * x.max(1e-300), "{scheme}");
                }
            }
        }
    }

    #[test]
    fn em_meets_its_bound() {
        let p = gaussian_potential(&[1.0, 10.0]).unwrap();
        let g = 2.0 * 10f64.sqrt();
        let k = constants_for(SchemeId::Em, 1.0, 10.0, g, 0.05).unwrap();
        let (z, w) = pair();
        let params = IntegratorParams::new(0.05, g).unwrap();
        let t = coupled_run(SchemeId::Em, &p, &k.norm().unwrap(), &z, &w, &params, 1000, NoiseStream::new(4, 0))
            .unwrap();
        let d0 = t.distances_sq[0];
        for (i, d) in t.distances_sq.iter().enumerate() {
            assert!(*d <= k.squared_bound(i) * d0 * (1.0 + 1e-12));
        }
        let rho = empirical_rate(&t.distances(), 100).unwrap();
        assert!(rho <= 1.0 - k.c / 2.0 + 1e-9);
    }

    #[test]
    fn divergence_is_flagged() {
        let p = gaussian_potential(&[1.0, 10.0]).unwrap();
        let (z, w) = pair();
        let params = IntegratorParams::new(1.0, 1.0).unwrap();
        let t = coupled_run(SchemeId::Em, &p, &ModifiedNorm::euclidean(), &z, &w, &params, 5000, NoiseStream::new(0, 0))
            .unwrap();
        assert!(t.divergent && t.distances_sq.len() < 5001);
    }

    #[test]
    fn rate_of_synthetic_sequences() {
        let geo: Vec<f64> = (0..200).map(|k| 3.0 * 0.9f64.powi(k)).collect();
        assert!((empirical_rate(&geo, 20).unwrap() - 0.9).abs() < 1e-12);
        assert!((empirical_rate(&[2.5; 50], 0).unwrap() - 1.0).abs() < 1e-15);
        let mut merged = geo.clone();
        merged[120] = 0.0;
        assert!(matches!(empirical_rate(&merged, 20), Err(Error::ChainsMerged(120))));
        assert!(empirical_rate(&geo[..25], 20).is_err());
    }

    #[test]
    fn full_estimator_reduces_to_deterministic_run() {
        let target = synth_dataset(3, 60, 4, 2.0).unwrap();
        let p = blr_potential(target).unwrap();
        let (m, big_m) = (p.strong_convexity(), p.gradient_lipschitz());
        let g = 2.0 * big_m.sqrt();
        let params = IntegratorParams::new(0.2 / g, g).unwrap();
        let norm = constants_for(SchemeId::Baoab, m, big_m, g, params.h).unwrap().norm().unwrap();
        let z = PhaseState::new(vec![0.2; 4], vec![0.0; 4]).unwrap();
        let w = PhaseState::new(vec![-0.1; 4], vec![0.5; 4]).unwrap();
        let det = coupled_run(SchemeId::Baoab, &p, &norm, &z, &w, &params, 100, NoiseStream::new(9, 0)).unwrap();
        for kind in [EstimatorKind::Full, EstimatorKind::Subsampled] {
            let est = make_estimator(&p, kind, 60, None, NoiseStream::new(0, 0)).unwrap();
            let sg = coupled_run_sg(SchemeId::Baoab, &est, &norm, &z, &w, &params, 100, 1, 9).unwrap();
            assert_eq!(sg.mean, det.distances_sq, "{kind:?}");
            assert!(sg.std_error.iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn overdamped_linear_oracle() {
        let p = gaussian_potential(&[1.0]).unwrap();
        for scheme in SchemeId::OVERDAMPED {
            let t = coupled_run_overdamped(scheme, |_| FullGradient::new(&p), &[2.0], &[-1.0], 0.1, 50, 3, 5).unwrap();
            for i in 1..=50 {
                let ratio = t.mean[i] / t.mean[i - 1];
                assert!((ratio - 0.81).abs() < 1e-12, "{scheme}");
            }
            let z = coupled_run_overdamped(scheme, |_| FullGradient::new(&p), &[2.0], &[2.0], 0.1, 10, 2, 5).unwrap();
            assert!(z.mean.iter().all(|&d| d == 0.0));
        }
    }
}
