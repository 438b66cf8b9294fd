use serde::{Deserialize, Serialize};

use super::params::{phi2, ses_covariance, IntegratorParams};
use super::scheme::SchemeId;
use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::phase::PhaseState;
use crate::potentials::GradientSource;

/// Chain state plus the bookkeeping carried between steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorState {
    pub phase: PhaseState,
    cached_gradient: Option<Vec<f64>>,
    cached_site: Option<Vec<f64>>,
    /// BBK's `ξ_{k+1}`, shared by the closing half-kick of one step and the
    /// opening half-kick of the next.
    carried_noise: Option<Vec<f64>>,
    steps: usize,
    #[serde(skip)]
    scratch: Scratch,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Scratch {
    g: Vec<f64>,
    xi: Vec<f64>,
    xi2: Vec<f64>,
    y: Vec<f64>,
}

impl IntegratorState {
    pub fn new(phase: PhaseState) -> Self {
        let n = phase.dim();
        Self {
            phase,
            cached_gradient: None,
            cached_site: None,
            carried_noise: None,
            steps: 0,
            scratch: Scratch {
                g: vec![0.0; n],
                xi: vec![0.0; n],
                xi2: vec![0.0; n],
                y: vec![0.0; n],
            },
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn cached_gradient(&self) -> Option<(&[f64], &[f64])> {
        match (&self.cached_gradient, &self.cached_site) {
            (Some(g), Some(s)) => Some((g, s)),
            _ => None,
        }
    }

    /// Drops cached force and carried noise, e.g. after editing `phase`.
    pub fn reset_cache(&mut self) {
        self.cached_gradient = None;
        self.cached_site = None;
        self.carried_noise = None;
    }

    fn ensure_scratch(&mut self) {
        let n = self.phase.dim();
        if self.scratch.g.len() != n {
            self.scratch = Scratch {
                g: vec![0.0; n],
                xi: vec![0.0; n],
                xi2: vec![0.0; n],
                y: vec![0.0; n],
            };
        }
    }

    /// Gradient at the current position, reusing the cache when the site
    /// matches bit for bit.
    fn force_at_x<G: GradientSource + ?Sized>(&mut self, grad: &mut G) -> Vec<f64> {
        let hit = matches!(&self.cached_site, Some(s) if *s == self.phase.x);
        if hit {
            return self.cached_gradient.take().expect("site implies gradient");
        }
        let mut g = vec![0.0; self.phase.dim()];
        grad.gradient(&self.phase.x, &mut g);
        g
    }

    fn store_force(&mut self, g: Vec<f64>) {
        match &mut self.cached_site {
            Some(site) => site.copy_from_slice(&self.phase.x),
            None => self.cached_site = Some(self.phase.x.clone()),
        }
        self.cached_gradient = Some(g);
    }

    /// Advances one step of `scheme` in place.
    pub fn step<G, N>(
        &mut self,
        scheme: SchemeId,
        grad: &mut G,
        params: &IntegratorParams,
        noise: &mut N,
    ) -> Result<()>
    where
        G: GradientSource + ?Sized,
        N: NoiseSource + ?Sized,
    {
        if !scheme.is_kinetic() {
            return Err(Error::OverdampedScheme(scheme));
        }
        if grad.dim() != self.phase.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.phase.dim(),
                actual: grad.dim(),
            });
        }
        if params.is_high_friction_limit() && !scheme.is_glc() {
            return Err(match scheme {
                SchemeId::Bbk | SchemeId::Spv | SchemeId::Svv => Error::NotGlc(scheme),
                _ => Error::UnsupportedScheme(scheme, "the infinite-friction limit"),
            });
        }
        self.ensure_scratch();
        if !scheme.reuses_gradient() {
            self.cached_gradient = None;
            self.cached_site = None;
        }
        match scheme {
            SchemeId::Em => self.em(grad, params, noise),
            SchemeId::Baoab => self.baoab(grad, params, noise),
            SchemeId::Obabo => self.obabo(grad, params, noise),
            SchemeId::Bbk => self.bbk(grad, params, noise),
            SchemeId::Spv => self.spv(grad, params, noise),
            SchemeId::Svv => self.svv(grad, params, noise),
            SchemeId::Roabao => self.roabao(grad, params, noise),
            SchemeId::Ses => self.ses(grad, params, noise)?,
            SchemeId::OdEm | SchemeId::OdLm => unreachable!(),
        }
        self.steps += 1;
        if !self.phase.is_finite() {
            return Err(Error::NonFinite {
                scheme,
                step: self.steps,
            });
        }
        Ok(())
    }

    fn em<G: GradientSource + ?Sized, N: NoiseSource + ?Sized>(
        &mut self,
        grad: &mut G,
        p: &IntegratorParams,
        noise: &mut N,
    ) {
        let h = p.h;
        let s = &mut self.scratch;
        grad.gradient(&self.phase.x, &mut s.g);
        noise.standard_normals(&mut s.xi);
        let damp = 1.0 - p.gamma * h;
        let sd = (2.0 * p.gamma * h).sqrt();
        let PhaseState { x, v } = &mut self.phase;
        for i in 0..x.len() {
            x[i] += h * v[i];
            v[i] = damp * v[i] - h * s.g[i] + sd * s.xi[i];
        }
    }

    fn baoab<G: GradientSource + ?Sized, N: NoiseSource + ?Sized>(
        &mut self,
        grad: &mut G,
        p: &IntegratorParams,
        noise: &mut N,
    ) {
        let half = 0.5 * p.h;
        let g0 = self.force_at_x(grad);
        let sd = p.o_full_scale();
        {
            let s = &mut self.scratch;
            noise.standard_normals(&mut s.xi);
            let PhaseState { x, v } = &mut self.phase;
            for i in 0..x.len() {
                v[i] -= half * g0[i];
                x[i] += half * v[i];
                v[i] = p.eta * v[i] + sd * s.xi[i];
                x[i] += half * v[i];
            }
        }
        let mut g1 = g0;
        grad.gradient(&self.phase.x, &mut g1);
        for (vi, gi) in self.phase.v.iter_mut().zip(&g1) {
            *vi -= half * gi;
        }
        self.store_force(g1);
    }

    fn obabo<G: GradientSource + ?Sized, N: NoiseSource + ?Sized>(
        &mut self,
        grad: &mut G,
        p: &IntegratorParams,
        noise: &mut N,
    ) {
        let h = p.h;
        let half = 0.5 * h;
        let sd = p.o_half_scale();
        let g0 = self.force_at_x(grad);
        {
            let s = &mut self.scratch;
            noise.standard_normals(&mut s.xi);
            let PhaseState { x, v } = &mut self.phase;
            for i in 0..x.len() {
                v[i] = p.eta_half * v[i] + sd * s.xi[i];
                v[i] -= half * g0[i];
                x[i] += h * v[i];
            }
        }
        let mut g1 = g0;
        grad.gradient(&self.phase.x, &mut g1);
        let s = &mut self.scratch;
        noise.standard_normals(&mut s.xi2);
        for (i, vi) in self.phase.v.iter_mut().enumerate() {
            *vi -= half * g1[i];
            *vi = p.eta_half * *vi + sd * s.xi2[i];
        }
        self.store_force(g1);
    }

    fn bbk<G: GradientSource + ?Sized, N: NoiseSource + ?Sized>(
        &mut self,
        grad: &mut G,
        p: &IntegratorParams,
        noise: &mut N,
    ) {
        let h = p.h;
        let half = 0.5 * h;
        let gh2 = 0.5 * p.gamma * h;
        let sd = gh2.sqrt();
        let g0 = self.force_at_x(grad);
        let mut xi_k = match self.carried_noise.take() {
            Some(xi) => xi,
            None => {
                let mut xi = vec![0.0; self.phase.dim()];
                noise.standard_normals(&mut xi);
                xi
            }
        };
        {
            let PhaseState { x, v } = &mut self.phase;
            for i in 0..x.len() {
                v[i] = (1.0 - gh2) * v[i] - half * g0[i] + sd * xi_k[i];
                x[i] += h * v[i];
            }
        }
        let mut g1 = g0;
        grad.gradient(&self.phase.x, &mut g1);
        noise.standard_normals(&mut xi_k);
        let inv = 1.0 / (1.0 + gh2);
        for (i, vi) in self.phase.v.iter_mut().enumerate() {
            *vi = (*vi - half * g1[i] + sd * xi_k[i]) * inv;
        }
        self.carried_noise = Some(xi_k);
        self.store_force(g1);
    }

    fn spv<G: GradientSource + ?Sized, N: NoiseSource + ?Sized>(
        &mut self,
        grad: &mut G,
        p: &IntegratorParams,
        noise: &mut N,
    ) {
        let half = 0.5 * p.h;
        let kick = p.one_minus_eta / p.gamma;
        let sd = p.o_full_scale();
        let s = &mut self.scratch;
        let PhaseState { x, v } = &mut self.phase;
        for i in 0..x.len() {
            x[i] += half * v[i];
        }
        grad.gradient(x, &mut s.g);
        noise.standard_normals(&mut s.xi);
        for i in 0..x.len() {
            v[i] = p.eta * v[i] - kick * s.g[i] + sd * s.xi[i];
            x[i] += half * v[i];
        }
    }

    fn svv<G: GradientSource + ?Sized, N: NoiseSource + ?Sized>(
        &mut self,
        grad: &mut G,
        p: &IntegratorParams,
        noise: &mut N,
    ) {
        let h = p.h;
        let kick = p.one_minus_eta_half / p.gamma;
        let sd = p.o_half_scale();
        let g0 = self.force_at_x(grad);
        {
            let s = &mut self.scratch;
            noise.standard_normals(&mut s.xi);
            let PhaseState { x, v } = &mut self.phase;
            for i in 0..x.len() {
                v[i] = p.eta_half * v[i] - kick * g0[i] + sd * s.xi[i];
                x[i] += h * v[i];
            }
        }
        let mut g1 = g0;
        grad.gradient(&self.phase.x, &mut g1);
        let s = &mut self.scratch;
        noise.standard_normals(&mut s.xi2);
        for (i, vi) in self.phase.v.iter_mut().enumerate() {
            *vi = p.eta_half * *vi - kick * g1[i] + sd * s.xi2[i];
        }
        self.store_force(g1);
    }

    fn roabao<G: GradientSource + ?Sized, N: NoiseSource + ?Sized>(
        &mut self,
        grad: &mut G,
        p: &IntegratorParams,
        noise: &mut N,
    ) {
        let h = p.h;
        let sd = p.o_half_scale();
        let u = h * noise.uniform();
        let s = &mut self.scratch;
        noise.standard_normals(&mut s.xi);
        let PhaseState { x, v } = &mut self.phase;
        for i in 0..x.len() {
            v[i] = p.eta_half * v[i] + sd * s.xi[i];
            s.y[i] = x[i] + u * v[i];
        }
        grad.gradient(&s.y, &mut s.g);
        noise.standard_normals(&mut s.xi2);
        let hh = 0.5 * h * h;
        for i in 0..x.len() {
            x[i] += h * v[i] - hh * s.g[i];
            v[i] -= h * s.g[i];
            v[i] = p.eta_half * v[i] + sd * s.xi2[i];
        }
    }

    fn ses<G: GradientSource + ?Sized, N: NoiseSource + ?Sized>(
        &mut self,
        grad: &mut G,
        p: &IntegratorParams,
        noise: &mut N,
    ) -> Result<()> {
        let g = p.gamma;
        let cov = ses_covariance(g, p.h)?;
        let [[l11, _], [l21, l22]] = cov.cholesky;
        let a = p.one_minus_eta / g;
        let c = phi2(g * p.h) / (g * g);
        let n = self.phase.dim();
        let s = &mut self.scratch;
        grad.gradient(&self.phase.x, &mut s.g);
        let mut pair = vec![0.0; 2 * n];
        noise.standard_normals(&mut pair);
        let (z1, z2) = pair.split_at(n);
        let PhaseState { x, v } = &mut self.phase;
        for i in 0..n {
            let zeta = l11 * z1[i];
            let omega = l21 * z1[i] + l22 * z2[i];
            x[i] += a * v[i] - c * s.g[i] + zeta;
            v[i] = p.eta * v[i] - a * s.g[i] + omega;
        }
        Ok(())
    }
}

/// Free-function form of [`IntegratorState::step`].
pub fn step<G, N>(
    scheme: SchemeId,
    state: &mut IntegratorState,
    grad: &mut G,
    params: &IntegratorParams,
    noise: &mut N,
) -> Result<()>
where
    G: GradientSource + ?Sized,
    N: NoiseSource + ?Sized,
{
    state.step(scheme, grad, params, noise)
}
