use super::Potential;
use crate::error::{Error, Result};
use crate::linalg::dot;

/// Gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking, started from the origin. Stops when `‖∇U‖ <= tol`.
pub fn minimize<P: Potential + ?Sized>(potential: &P, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = potential.dim();
    let mut x = vec![0.0; n];
    let mut g = vec![0.0; n];
    potential.gradient(&x, &mut g);
    let mut fx = potential.value(&x);
    let mut step = 1.0 / potential.gradient_lipschitz();
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    for _ in 0..max_iter {
        let gg = dot(&g, &g);
        if gg.sqrt() <= tol {
            return Ok(x);
        }
        let mut t = step;
        loop {
            for i in 0..n {
                x_new[i] = x[i] - t * g[i];
            }
            let f_new = potential.value(&x_new);
            // Slack of a few ulps of f so the test stays decidable once the
            // decrease is below rounding level.
            let slack = 4.0 * f64::EPSILON * fx.abs();
            if f_new <= fx - 1e-4 * t * gg + slack || t < 1e-300 {
                fx = f_new;
                break;
            }
            t *= 0.5;
        }
        potential.gradient(&x_new, &mut g_new);
        let mut sy = 0.0;
        let mut ss = 0.0;
        for i in 0..n {
            let s = x_new[i] - x[i];
            sy += s * (g_new[i] - g[i]);
            ss += s * s;
        }
        step = if sy > 0.0 { ss / sy } else { t };
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        if step <= 0.0 || !step.is_finite() {
            step = 1.0 / potential.gradient_lipschitz();
        }
    }
    let gn = dot(&g, &g).sqrt();
    if gn <= tol {
        Ok(x)
    } else {
        Err(Error::Degenerate(format!(
            "minimizer stopped at gradient norm {gn:e} after {max_iter} iterations"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{blr_potential, gaussian_potential, synth_dataset};

    #[test]
    fn quadratic_minimum_at_origin_shifted() {
        let p = gaussian_potential(&[1.0, 10.0]).unwrap();
        let x = minimize(&p, 1e-12, 100).unwrap();
        assert!(x.iter().all(|c| c.abs() < 1e-11));
    }

    #[test]
    fn logistic_anchor_reaches_tolerance() {
        let p = blr_potential(synth_dataset(0, 500, 20, 2.0).unwrap()).unwrap();
        let x = minimize(&p, 1e-8, 10_000).unwrap();
        let mut g = vec![0.0; 20];
        p.gradient(&x, &mut g);
        assert!(dot(&g, &g).sqrt() <= 1e-8);
    }
}
