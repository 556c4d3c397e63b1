//! Reproducible random streams.
//!
//! Every sampler takes a [`Seed`] made of a 64-bit value and a 64-bit stream
//! index. The generator is ChaCha8 keyed by the value with the stream index
//! as its nonce, so distinct streams are independent keystreams. Normal
//! variates use the ziggurat method of `rand_distr::StandardNormal`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub value: u64,
    pub stream: u64,
}

impl Seed {
    pub const fn new(value: u64) -> Self {
        Self { value, stream: 0 }
    }

    pub const fn with_stream(value: u64, stream: u64) -> Self {
        Self { value, stream }
    }

    pub fn rng(&self) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.value);
        rng.set_stream(self.stream);
        rng
    }

    /// Seed for the `index`-th replicate derived from this one.
    ///
    /// Replicates keep the key and move to a mixed stream index, so loops
    /// over replicates are reproducible regardless of scheduling.
    pub fn child(&self, index: u64) -> Self {
        Self {
            value: self.value,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }
}

impl Default for Seed {
    fn default() -> Self {
        Self::new(0)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[inline]
pub fn std_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `rows x cols` matrix of independent standard normals, drawn in row-major order.
pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols).map(|_| std_normal(rng)).collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// Runs `f` once per replicate with its own child stream, in parallel.
///
/// Results come back in replicate order, so the output is independent of
/// thread scheduling.
pub fn replicates<R, F>(seed: Seed, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut Rng) -> R + Sync,
{
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).rng();
            f(i, &mut rng)
        })
        .collect()
}
