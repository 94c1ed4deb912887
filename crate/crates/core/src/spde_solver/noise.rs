use super::SpaceTimeGrid;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// Gaussian white-noise masses W(cell) on the lattice cells, variance dt dx.
///
/// Cell (n, j) reads ChaCha8 keyed by the seed, stream n, starting at word
/// 4j: two 64-bit uniforms, one Box-Muller normal. Any cell can therefore be
/// regenerated on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLattice {
    pub grid: SpaceTimeGrid,
    pub seed: u64,
    /// Row-major, n_t rows of n_x + 1 cells.
    pub increments: Vec<f64>,
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn unit(w: u64) -> f64 {
    // (0, 1]
    ((w >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit(rng.next_u64());
    let u2 = unit(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

impl NoiseLattice {
    pub fn row(&self, n: usize) -> &[f64] {
        let m = self.grid.n_nodes();
        &self.increments[n * m..(n + 1) * m]
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.increments[n * self.grid.n_nodes() + j]
    }
}

/// Standard normal for cell (n, j) without building the lattice.
pub fn cell_normal(seed: u64, n: usize, j: usize) -> f64 {
    let mut rng = rng_for(seed);
    rng.set_stream(n as u64);
    rng.set_word_pos(4 * j as u128);
    box_muller(&mut rng)
}

pub fn make_noise(grid: &SpaceTimeGrid, seed: u64) -> NoiseLattice {
    let m = grid.n_nodes();
    let sd = (grid.dt() * grid.dx()).sqrt();
    let mut increments = Vec::with_capacity(grid.n_t * m);
    let mut rng = rng_for(seed);
    for n in 0..grid.n_t {
        // sequential reads from word 0 of stream n hit the same words as cell_normal
        rng.set_stream(n as u64);
        rng.set_word_pos(0);
        for _ in 0..m {
            increments.push(sd * box_muller(&mut rng));
        }
    }
    NoiseLattice {
        grid: *grid,
        seed,
        increments,
    }
}

/// Per-replicate seed: splitmix64 of base + (r + 1) * golden gamma.
pub fn replicate_seed(base: u64, r: u64) -> u64 {
    let mut z = base.wrapping_add((r.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
