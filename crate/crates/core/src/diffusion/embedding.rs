use crate::numeric::Tensor;

use super::vocab::TokenSequence;

/// Look up the embedding row for each token id. Positional and timestep
/// terms are added inside the denoiser, not here.
pub fn embed(table: &Tensor, seq: &TokenSequence) -> Tensor {
    let d = table.cols();
    let mut data = Vec::with_capacity(seq.len() * d);
    for &id in seq.ids() {
        let row = id as usize;
        data.extend_from_slice(&table.data()[row * d..(row + 1) * d]);
    }
    Tensor::new(vec![seq.len(), d], data).expect("length matches shape")
}

/// Map each row of a denoised state to the id of the nearest embedding row
/// by squared L2 distance; ties break toward the lowest id.
pub fn round_to_tokens(table: &Tensor, x0: &Tensor) -> TokenSequence {
    let d = table.cols();
    let v = table.rows();
    let n = x0.rows();
    debug_assert_eq!(x0.cols(), d);
    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        let row = &x0.data()[i * d..(i + 1) * d];
        let mut best = 0u32;
        let mut best_dist = f64::INFINITY;
        for w in 0..v {
            let emb = &table.data()[w * d..(w + 1) * d];
            let mut dist = 0.0;
            for k in 0..d {
                let diff = row[k] - emb[k];
                dist += diff * diff;
            }
            if dist < best_dist {
                best_dist = dist;
                best = w as u32;
            }
        }
        ids.push(best);
    }
    TokenSequence(ids)
}

/// Smallest pairwise L2 distance between embedding rows. Perturbations below
/// half this value can never flip a rounding decision.
pub fn min_embedding_gap(table: &Tensor) -> f64 {
    let (v, d) = (table.rows(), table.cols());
    let mut min = f64::INFINITY;
    for a in 0..v {
        for b in a + 1..v {
            let mut dist = 0.0;
            for k in 0..d {
                let diff = table.data()[a * d + k] - table.data()[b * d + k];
                dist += diff * diff;
            }
            min = min.min(dist.sqrt());
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use crate::numeric::{gaussian, uniform, Tensor};

    use super::super::vocab::TokenSequence;
    use super::*;

    #[test]
    fn round_inverts_embed_without_noise() {
        let table = uniform(&[12, 8], -1.0, 1.0, 5);
        let seq = TokenSequence(vec![1, 4, 9, 2, 0, 0]);
        let x = embed(&table, &seq);
        assert_eq!(round_to_tokens(&table, &x), seq);
    }

    #[test]
    fn sub_gap_perturbations_never_flip() {
        let table = uniform(&[10, 6], -1.0, 1.0, 8);
        let gap = min_embedding_gap(&table);
        assert!(gap > 0.0);
        let seq = TokenSequence((0..10).collect());
        let x = embed(&table, &seq);
        for seed in 0..200 {
            let noise = gaussian(x.shape(), seed);
            let scaled = noise.scale(0.49 * gap / noise.norm());
            let perturbed = x.add(&scaled).unwrap();
            assert_eq!(round_to_tokens(&table, &perturbed), seq, "seed {seed}");
        }
    }

    #[test]
    fn all_zero_state_rounds_to_smallest_norm_row() {
        let table = uniform(&[7, 4], -1.0, 1.0, 3);
        let norms: Vec<f64> = (0..7)
            .map(|w| {
                table.data()[w * 4..(w + 1) * 4]
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
            })
            .collect();
        let smallest = norms
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0 as u32;
        let zeros = Tensor::zeros(&[3, 4]);
        let out = round_to_tokens(&table, &zeros);
        assert_eq!(out.ids(), &[smallest; 3]);
    }
}
