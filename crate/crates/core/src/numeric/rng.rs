use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Tensor;

/// Derives independent stream seeds from one global seed.
///
/// The scheme is counter-based: every consumer names a stream and a pair of
/// counters, and the mix is a fixed integer permutation, so results do not
/// depend on call order, thread scheduling, or platform.
#[derive(Clone, Copy, Debug)]
pub struct SeedSplitter {
    base: u64,
}

impl SeedSplitter {
    pub fn new(base: u64) -> Self {
        Self { base }
    }

    pub fn derive(&self, stream: &str, a: u64, b: u64) -> u64 {
        let mut h = self.base ^ 0x9e37_79b9_7f4a_7c15;
        for &byte in stream.as_bytes() {
            h = splitmix64(h ^ byte as u64);
        }
        h = splitmix64(h ^ a);
        splitmix64(h ^ b)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit_open(bits: u64) -> f64 {
    // 53-bit mantissa draw in (0, 1]
    (((bits >> 11) as f64) + 1.0) / 9_007_199_254_740_992.0
}

/// Seeded standard-normal draws via Box–Muller on a ChaCha stream.
///
/// The transform is implemented here rather than taken from a distribution
/// crate so the exact bit stream is pinned by this crate alone.
pub fn gaussian(shape: &[usize], seed: u64) -> Tensor {
    let len: usize = shape.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(len);
    while data.len() < len {
        let u1 = unit_open(rng.next_u64());
        let u2 = unit_open(rng.next_u64());
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        data.push(r * theta.cos());
        if data.len() < len {
            data.push(r * theta.sin());
        }
    }
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Seeded uniform draws in `[lo, hi)`.
pub fn uniform(shape: &[usize], lo: f64, hi: f64, seed: u64) -> Tensor {
    let len: usize = shape.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..len)
        .map(|_| lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0))
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Keep-mask for dropout: `true` with probability `keep`.
pub(crate) fn bernoulli_mask(len: usize, keep: f64, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| ((rng.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0) < keep)
        .collect()
}
