use super::tape::{Tape, Tv};
use super::Result;

/// Scaled dot-product attention: `softmax(q·kᵀ/√d_k)·v`.
///
/// `q` is `(n, d_k)`, `k` is `(m, d_k)`, `v` is `(m, d_v)`.
pub fn softmax_attention(tape: &Tape, q: Tv, k: Tv, v: Tv) -> Result<Tv> {
    let dk = tape.shape(q).last().copied().unwrap_or(1) as f64;
    let kt = tape.transpose(k);
    let scores = tape.matmul(q, kt)?;
    let scaled = tape.scale(scores, 1.0 / dk.sqrt());
    let weights = tape.softmax_rows(scaled);
    tape.matmul(weights, v)
}

/// Two-layer position-wise feed-forward block with GELU.
pub fn feed_forward(tape: &Tape, x: Tv, w1: Tv, b1: Tv, w2: Tv, b2: Tv) -> Result<Tv> {
    let h = tape.add_bias(tape.matmul(x, w1)?, b1)?;
    let h = tape.gelu(h);
    tape.add_bias(tape.matmul(h, w2)?, b2)
}
