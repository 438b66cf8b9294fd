//! Small dense helpers: vector kernels, a 2×2 matrix type, and symmetric
//! power iteration.

use serde::{Deserialize, Serialize};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Row-major 2×2 matrix `[[m00, m01], [m10, m11]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Mat2([[m00, m01], [m10, m11]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn apply(&self, z: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * z[0] + self.0[0][1] * z[1],
            self.0[1][0] * z[0] + self.0[1][1] * z[1],
        ]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn sub(&self, rhs: &Mat2) -> Mat2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for c in row.iter_mut() {
                *c *= s;
            }
        }
        out
    }

    pub fn pow(&self, mut k: u32) -> Mat2 {
        let mut base = *self;
        let mut acc = Mat2::IDENTITY;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Eigenvalue moduli from the characteristic polynomial, larger first.
    pub fn eigen_moduli(&self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let det = self.det();
        let disc = half_tr * half_tr - det;
        if disc >= 0.0 {
            let root = disc.sqrt();
            // Stable pair: the larger-magnitude root first, the other via det.
            let big = if half_tr >= 0.0 {
                half_tr + root
            } else {
                half_tr - root
            };
            let small = if big != 0.0 { det / big } else { 0.0 };
            let (p, q) = (big.abs(), small.abs());
            if p >= q {
                (p, q)
            } else {
                (q, p)
            }
        } else {
            // Complex conjugate pair, both of modulus sqrt(det).
            let r = det.sqrt();
            (r, r)
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigen_moduli().0
    }

    /// Unit eigenvector of the larger-modulus real eigenvalue, or `None`
    /// for a complex pair.
    pub fn dominant_eigenvector(&self) -> Option<[f64; 2]> {
        let half_tr = 0.5 * self.trace();
        let disc = half_tr * half_tr - self.det();
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        let mu = if half_tr >= 0.0 { half_tr + root } else { half_tr - root };
        let [[a, b], [c, d]] = self.0;
        let p = [b, mu - a];
        let q = [mu - d, c];
        let (np, nq) = (p[0].hypot(p[1]), q[0].hypot(q[1]));
        let (v, n) = if np >= nq { (p, np) } else { (q, nq) };
        if n == 0.0 {
            // Scalar multiple of the identity: every direction is dominant.
            return Some([1.0, 0.0]);
        }
        Some([v[0] / n, v[1] / n])
    }

    /// Gram-Schmidt QR: returns `(q, r)` with `r` upper triangular and
    /// `r[0][0] >= 0`.
    pub fn qr(&self) -> (Mat2, Mat2) {
        let c0 = [self.0[0][0], self.0[1][0]];
        let c1 = [self.0[0][1], self.0[1][1]];
        let r00 = c0[0].hypot(c0[1]);
        let q0 = if r00 > 0.0 {
            [c0[0] / r00, c0[1] / r00]
        } else {
            [1.0, 0.0]
        };
        let r01 = q0[0] * c1[0] + q0[1] * c1[1];
        let w = [c1[0] - r01 * q0[0], c1[1] - r01 * q0[1]];
        // Orthonormal complement fixed by orientation, so q is always a rotation.
        let q1 = [-q0[1], q0[0]];
        let r11 = q1[0] * w[0] + q1[1] * w[1];
        (
            Mat2([[q0[0], q1[0]], [q0[1], q1[1]]]),
            Mat2([[r00, r01], [0.0, r11]]),
        )
    }
}

/// Largest eigenvalue of a symmetric positive semi-definite operator by power
/// iteration, returning the final Rayleigh quotient.
///
/// Stops after `max_iter` sweeps or once successive estimates agree to `tol`
/// (relative).
pub fn power_iteration_sym<F>(dim: usize, start: &[f64], max_iter: usize, tol: f64, mut apply: F) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut v = start.to_vec();
    let n0 = norm2(&v);
    if n0 == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|c| *c /= n0);
    let mut w = vec![0.0; dim];
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        apply(&v, &mut w);
        let rq = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        let converged = (rq - estimate).abs() <= tol * rq.abs().max(f64::MIN_POSITIVE);
        estimate = rq;
        if converged {
            break;
        }
    }
    estimate
}
