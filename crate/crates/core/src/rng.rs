//! Counter-based Gaussian streams.
//!
//! Every standard normal pair is addressed by `(seed, component, ℓ, m)`: the ChaCha8 stream
//! id is the component and the word position is a fixed function of `(ℓ, m)`. Draws are
//! therefore independent of evaluation order and thread count.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed number `index` of `master`, e.g. one per Monte Carlo replicate.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5EED)))
}

fn key(seed: u64) -> [u8; 32] {
    let mut k = [0u8; 32];
    let mut s = seed;
    for chunk in k.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    k
}

/// Gaussian pairs for one field component.
#[derive(Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, component: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key(seed));
        rng.set_stream(component);
        GaussianStream { rng }
    }

    /// Independent standard normals attached to harmonic index `(ℓ, m)`, `m ≥ 0`.
    pub fn pair(&mut self, ell: usize, m: usize) -> (f64, f64) {
        let slot = (ell as u128) * (ell as u128 + 1) / 2 + m as u128;
        self.rng.set_word_pos(4 * slot);
        let x = self.rng.next_u64();
        let y = self.rng.next_u64();
        box_muller(x, y)
    }
}

fn box_muller(x: u64, y: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((x >> 11) + 1) as f64 * SCALE;
    let u2 = (y >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}
