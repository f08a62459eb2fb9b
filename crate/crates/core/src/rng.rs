//! Per-particle random streams.
//!
//! Every particle owns a ChaCha8 stream selected by its index under a key
//! derived from the master seed, so the numbers a particle sees are a pure
//! function of `(master_seed, particle)` and never depend on how particles
//! are distributed over worker threads. Brownian increments and initial
//! conditions come from differently keyed streams, which keeps increment
//! `k` of particle `i` identical across models and schemes.
//!
//! Gaussians are produced by the Box-Muller transform from two 53-bit
//! uniforms; a step of an `l`-dimensional Brownian motion always consumes
//! exactly `2 * ceil(l / 2)` words.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const BROWNIAN_DOMAIN: u64 = 0x6d76_7364_652d_6277; // "mvsde-bw"
const INITIAL_DOMAIN: u64 = 0x6d76_7364_652d_7830; // "mvsde-x0"

/// Particles processed per rayon task when filling increments.
pub(crate) const MIN_PARTICLES_PER_TASK: usize = 64;

fn stream(master_seed: u64, domain: u64, particle: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ domain);
    rng.set_stream(particle as u64);
    rng
}

/// Uniform on `(0, 1]`.
fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on `[0, 1)`.
fn half_open_unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals by Box-Muller.
pub fn standard_normal_pair(rng: &mut impl RngCore) -> (f64, f64) {
    let u1 = open_unit(rng);
    let u2 = half_open_unit(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Fill `out` with standard normals, always consuming whole pairs.
pub fn fill_standard_normals(rng: &mut impl RngCore, out: &mut [f64]) {
    for pair in out.chunks_mut(2) {
        let (z1, z2) = standard_normal_pair(rng);
        pair[0] = z1;
        if let Some(slot) = pair.get_mut(1) {
            *slot = z2;
        }
    }
}

/// Independent Brownian streams `W^1, ..., W^N`.
#[derive(Debug, Clone)]
pub struct ParticleStreams {
    streams: Vec<ChaCha8Rng>,
    bm_dim: usize,
}

impl ParticleStreams {
    pub fn new(master_seed: u64, n_particles: usize, bm_dim: usize) -> Self {
        let streams = (0..n_particles)
            .map(|i| stream(master_seed, BROWNIAN_DOMAIN, i))
            .collect();
        Self { streams, bm_dim }
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }

    pub fn bm_dim(&self) -> usize {
        self.bm_dim
    }

    /// Draw the next increment `Delta W ~ N(0, h I_l)` for every particle into
    /// the `N x l` buffer `out`.
    pub fn fill_increments(&mut self, h: f64, out: &mut [f64]) {
        assert_eq!(out.len(), self.streams.len() * self.bm_dim);
        let scale = h.sqrt();
        self.streams
            .par_iter_mut()
            .zip(out.par_chunks_mut(self.bm_dim))
            .with_min_len(MIN_PARTICLES_PER_TASK)
            .for_each(|(rng, dw)| {
                fill_standard_normals(rng, dw);
                dw.iter_mut().for_each(|z| *z *= scale);
            });
    }
}

/// The initial-condition stream of particle `i`.
pub fn initial_stream(master_seed: u64, particle: usize) -> ChaCha8Rng {
    stream(master_seed, INITIAL_DOMAIN, particle)
}
