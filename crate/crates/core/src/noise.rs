//! Seeded, counter-based randomness.
//!
//! Every random quantity in the crate (Gaussian increments, randomized
//! midpoints, minibatch indices) is drawn through [`NoiseSource`]. The
//! production implementation, [`NoiseStream`], wraps a ChaCha8 block cipher
//! keyed by the seed and addressed by a 64-bit stream id, so identical
//! `(seed, stream_id)` pairs reproduce bit-identical draws on every platform
//! and distinct stream ids give independent sequences.
//!
//! Gaussians are produced by the Box-Muller transform from pairs of uniforms,
//! so a request for `n` normals always consumes exactly `2 * ceil(n / 2)`
//! 64-bit words. Two chains fed from clones of one stream therefore stay in
//! lockstep, which is what synchronous coupling needs.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Source of the random draws consumed by integrators and estimators.
pub trait NoiseSource {
    /// Fill `out` with independent standard normal draws.
    fn standard_normals(&mut self, out: &mut [f64]);

    /// One uniform draw on the open interval (0, 1).
    fn uniform(&mut self) -> f64;

    /// Uniform integer in `0..bound`. `bound` must be nonzero.
    fn below(&mut self, bound: u64) -> u64;
}

/// Seed-and-stream addressed ChaCha8 generator.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl NoiseStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        // The 256-bit key is the SplitMix64 expansion of the seed.
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    /// A stream keyed by `seed` but living in a separate domain, e.g. the
    /// minibatch draws that accompany a chain's Gaussian increments.
    pub fn in_domain(seed: u64, stream_id: u64, domain: u64) -> Self {
        let mut state = seed ^ domain.wrapping_mul(0xD1B5_4A32_D192_ED03);
        let mixed = splitmix64(&mut state);
        Self::new(mixed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn open_unit(&mut self) -> f64 {
        // 53 random bits, shifted half an ulp off zero: lies in (0, 1).
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl NoiseSource for NoiseStream {
    fn standard_normals(&mut self, out: &mut [f64]) {
        let mut chunks = out.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (z0, z1) = box_muller(self.open_unit(), self.open_unit());
            pair[0] = z0;
            pair[1] = z1;
        }
        if let [last] = chunks.into_remainder() {
            let (z0, _) = box_muller(self.open_unit(), self.open_unit());
            *last = z0;
        }
    }

    fn uniform(&mut self) -> f64 {
        self.open_unit()
    }

    fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a nonzero bound");
        // Multiply-high; the bias is at most bound / 2^64.
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }
}

fn box_muller(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Noise source that injects nothing: all normals are zero and every
/// uniform draw is one half (so a randomized midpoint sits at `h / 2`).
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn standard_normals(&mut self, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn uniform(&mut self) -> f64 {
        0.5
    }

    fn below(&mut self, _bound: u64) -> u64 {
        0
    }
}

/// Wraps another source and keeps a copy of every normal vector and uniform
/// it hands out, in order. Used to replay identical noise into a second map.
#[derive(Debug, Clone)]
pub struct RecordingNoise<S> {
    inner: S,
    pub normals: Vec<Vec<f64>>,
    pub uniforms: Vec<f64>,
}

impl<S: NoiseSource> RecordingNoise<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            normals: Vec::new(),
            uniforms: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.normals.clear();
        self.uniforms.clear();
    }
}

impl<S: NoiseSource> NoiseSource for RecordingNoise<S> {
    fn standard_normals(&mut self, out: &mut [f64]) {
        self.inner.standard_normals(out);
        self.normals.push(out.to_vec());
    }

    fn uniform(&mut self) -> f64 {
        let u = self.inner.uniform();
        self.uniforms.push(u);
        u
    }

    fn below(&mut self, bound: u64) -> u64 {
        self.inner.below(bound)
    }
}

/// Replays a fixed tape of normal vectors and uniforms. Panics when the tape
/// runs out, since that means the consumer drew more than was recorded.
#[derive(Debug, Clone, Default)]
pub struct ScriptedNoise {
    normals: std::collections::VecDeque<Vec<f64>>,
    uniforms: std::collections::VecDeque<f64>,
}

impl ScriptedNoise {
    pub fn new(normals: Vec<Vec<f64>>, uniforms: Vec<f64>) -> Self {
        Self {
            normals: normals.into(),
            uniforms: uniforms.into(),
        }
    }

    pub fn remaining_normals(&self) -> usize {
        self.normals.len()
    }
}

impl NoiseSource for ScriptedNoise {
    fn standard_normals(&mut self, out: &mut [f64]) {
        let next = self.normals.pop_front().expect("scripted normals exhausted");
        out.copy_from_slice(&next);
    }

    fn uniform(&mut self) -> f64 {
        self.uniforms.pop_front().expect("scripted uniforms exhausted")
    }

    fn below(&mut self, _bound: u64) -> u64 {
        panic!("scripted noise does not provide integer draws")
    }
}
