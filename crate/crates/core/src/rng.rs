//! Seed derivation and Gaussian sampling.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded from a 64-bit
//! value. Child seeds (per trial, client, round, epoch) are derived from a
//! master seed by folding the index tuple through the SplitMix64 finalizer,
//! so any component can be replayed in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and an index path.
///
/// Distinct paths give decorrelated seeds; the empty path still remixes the
/// master so that `derive_seed(s, &[])` never aliases `s` itself.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &part| splitmix64(acc ^ splitmix64(part)))
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal sampler using the Marsaglia polar method.
///
/// The method produces normals in pairs; the spare is cached and returned on
/// the next call.
#[derive(Debug, Default, Clone)]
pub struct PolarGaussian {
    spare: Option<f64>,
}

impl PolarGaussian {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * rng.random::<f64>() - 1.0;
            let v = 2.0 * rng.random::<f64>() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Fills `out` with i.i.d. N(0, std^2) draws.
    pub fn fill<R: Rng + ?Sized>(&mut self, rng: &mut R, std: f64, out: &mut [f64]) {
        for slot in out {
            *slot = std * self.sample(rng);
        }
    }
}
