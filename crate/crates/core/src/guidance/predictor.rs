use crate::analysis::DescriptorId;
use crate::numeric::{ModelConfig, PredictorParams, Tape, Tensor, Tv};
use crate::diffusion::{multi_head_attention, TvBlock};

use super::Result;

/// A trained per-descriptor regression model over noisy embeddings.
#[derive(Clone, Debug)]
pub struct PropertyPredictor {
    pub descriptor: DescriptorId,
    pub params: PredictorParams,
}

impl PropertyPredictor {
    pub fn t_max(&self) -> usize {
        self.params.t_max
    }

    pub fn scaffold_conditioned(&self) -> bool {
        self.params
            .blocks
            .first()
            .is_some_and(|b| b.cross.is_some())
    }
}

/// Row of the conditioning-token tables assigned to a descriptor.
pub fn prop_row(id: DescriptorId) -> usize {
    DescriptorId::ALL
        .iter()
        .position(|d| *d == id)
        .expect("all descriptors are registered")
}

pub struct TvPredictor {
    pub positional: Tv,
    pub timestep: Tv,
    pub blocks: Vec<TvBlock>,
    pub head_w: Tv,
    pub head_b: Tv,
    pub prop_embed: Tv,
    pub prop_bias: Tv,
}

impl TvPredictor {
    pub fn lift(tape: &Tape, p: &PredictorParams) -> Self {
        Self {
            positional: tape.leaf(p.positional.clone()),
            timestep: tape.leaf(p.timestep.clone()),
            blocks: p.blocks.iter().map(|b| TvBlock::lift(tape, b)).collect(),
            head_w: tape.leaf(p.head_w.clone()),
            head_b: tape.leaf(p.head_b.clone()),
            prop_embed: tape.leaf(p.prop_embed.clone()),
            prop_bias: tape.leaf(p.prop_bias.clone()),
        }
    }

    pub fn named(&self) -> Vec<(String, Tv)> {
        let mut out = vec![
            ("positional".to_string(), self.positional),
            ("timestep".to_string(), self.timestep),
        ];
        for (l, block) in self.blocks.iter().enumerate() {
            block.named(&format!("block{l}"), &mut out);
        }
        out.push(("head_w".to_string(), self.head_w));
        out.push(("head_b".to_string(), self.head_b));
        out.push(("prop_embed".to_string(), self.prop_embed));
        out.push(("prop_bias".to_string(), self.prop_bias));
        out
    }
}

/// Regression forward pass: noisy state plus positional/timestep terms,
/// conditioning tokens for the other active targets, a transformer stack
/// (cross-attending to the scaffold when conditioned), then mean pooling
/// into a scalar head.
///
/// `other_targets` carries `(conditioning row, normalized value)` pairs.
pub fn predictor_forward_traced(
    tape: &Tape,
    cfg: &ModelConfig,
    p: &TvPredictor,
    x_t: Tv,
    t: usize,
    c_s: Option<Tv>,
    other_targets: &[(usize, f64)],
) -> Result<Tv> {
    let n = tape.shape(x_t)[0];
    let pos = tape.slice_rows(p.positional, 0, n)?;
    let with_pos = tape.add(x_t, pos)?;
    let time_row = tape.slice_rows(p.timestep, t, t + 1)?;
    let mut z = tape.add_bias(with_pos, time_row)?;
    if !other_targets.is_empty() {
        let mut rows = vec![z];
        for &(row, value) in other_targets {
            let emb = tape.slice_rows(p.prop_embed, row, row + 1)?;
            let bias = tape.slice_rows(p.prop_bias, row, row + 1)?;
            let token = tape.add(tape.scale(emb, value), bias)?;
            rows.push(token);
        }
        z = tape.concat_rows(&rows)?;
    }
    for block in &p.blocks {
        let sa = multi_head_attention(tape, cfg.heads, z, z, &block.attn)?;
        let mut pre = tape.add(z, sa)?;
        if let (Some(ctx), Some(cross)) = (c_s, &block.cross) {
            let ca = multi_head_attention(tape, cfg.heads, sa, ctx, cross)?;
            pre = tape.add(pre, ca)?;
        }
        let z1 = tape.layer_norm(pre, block.ln1_scale, block.ln1_shift, 1e-5)?;
        let ff = crate::numeric::feed_forward(
            tape,
            z1,
            block.ffn_w1,
            block.ffn_b1,
            block.ffn_w2,
            block.ffn_b2,
        )?;
        let sum = tape.add(z1, ff)?;
        z = tape.layer_norm(sum, block.ln2_scale, block.ln2_shift, 1e-5)?;
    }
    let rows = tape.shape(z)[0];
    let pool = tape.constant(Tensor::full(&[1, rows], 1.0 / rows as f64));
    let pooled = tape.matmul(pool, z)?;
    let out = tape.add_bias(tape.matmul(pooled, p.head_w)?, p.head_b)?;
    Ok(out)
}

/// Untraced scalar prediction.
pub fn predict_value(
    cfg: &ModelConfig,
    predictor: &PropertyPredictor,
    x_t: &Tensor,
    t: usize,
    c_s: Option<&Tensor>,
    other_targets: &[(usize, f64)],
) -> Result<f64> {
    let tape = Tape::new();
    let p = TvPredictor::lift(&tape, &predictor.params);
    let x = tape.constant(x_t.clone());
    let ctx = c_s.map(|c| tape.constant(c.clone()));
    let out = predictor_forward_traced(&tape, cfg, &p, x, t, ctx, other_targets)?;
    Ok(tape.value(out).item().expect("head output is scalar"))
}

#[cfg(test)]
mod tests {
    use crate::numeric::gaussian;

    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            vocab_size: 10,
            dim: 16,
            heads: 4,
            layers: 2,
            seq_len: 8,
            timesteps: 20,
            ffn_mult: 2,
            dropout: 0.0,
        }
    }

    #[test]
    fn forward_is_scalar_and_deterministic() {
        let cfg = cfg();
        let predictor = PropertyPredictor {
            descriptor: DescriptorId::Hbd,
            params: PredictorParams::init(&cfg, 3, DescriptorId::ALL.len(), false, 15),
        };
        let x = gaussian(&[cfg.seq_len, cfg.dim], 1);
        let a = predict_value(&cfg, &predictor, &x, 5, None, &[]).unwrap();
        let b = predict_value(&cfg, &predictor, &x, 5, None, &[]).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
    }

    #[test]
    fn conditioning_tokens_change_the_prediction() {
        let cfg = cfg();
        let predictor = PropertyPredictor {
            descriptor: DescriptorId::Hbd,
            params: PredictorParams::init(&cfg, 3, DescriptorId::ALL.len(), false, 15),
        };
        let x = gaussian(&[cfg.seq_len, cfg.dim], 1);
        let without = predict_value(&cfg, &predictor, &x, 5, None, &[]).unwrap();
        let with = predict_value(
            &cfg,
            &predictor,
            &x,
            5,
            None,
            &[(prop_row(DescriptorId::CrippenLogP), 1.5)],
        )
        .unwrap();
        assert_ne!(without, with);
    }
}
