use crate::numeric::{
    softmax_attention, AttentionParams, BlockParams, ModelConfig, NumericError,
    ScaffoldEncoderParams, SeedSplitter, Tape, TransformerParams, Tv,
};

use super::vocab::{TokenSequence, Vocabulary};
use super::{DiffusionError, Result};

const LN_EPS: f64 = 1e-5;

/// The denoiser stack: a frozen unconditional tower, an optional trainable
/// conditional copy with cross-attention, and the scaffold encoder feeding
/// that cross-attention.
#[derive(Clone, Debug)]
pub struct DenoiserParams {
    pub theta0: TransformerParams,
    pub theta_c: Option<TransformerParams>,
    pub scaffold_encoder: Option<ScaffoldEncoderParams>,
}

impl DenoiserParams {
    pub fn unconditional(theta0: TransformerParams) -> Self {
        Self {
            theta0,
            theta_c: None,
            scaffold_encoder: None,
        }
    }
}

/// Dropout configuration for training graphs; inference passes `None`.
#[derive(Clone, Copy, Debug)]
pub struct DropoutCfg {
    pub keep: f64,
    pub seed: u64,
}

// ---- traced parameter handles ----------------------------------------------

pub struct TvAttention {
    pub wq: Tv,
    pub bq: Tv,
    pub wk: Tv,
    pub bk: Tv,
    pub wv: Tv,
    pub bv: Tv,
    pub wo: Tv,
    pub bo: Tv,
}

impl TvAttention {
    fn lift(tape: &Tape, p: &AttentionParams) -> Self {
        Self {
            wq: tape.leaf(p.wq.clone()),
            bq: tape.leaf(p.bq.clone()),
            wk: tape.leaf(p.wk.clone()),
            bk: tape.leaf(p.bk.clone()),
            wv: tape.leaf(p.wv.clone()),
            bv: tape.leaf(p.bv.clone()),
            wo: tape.leaf(p.wo.clone()),
            bo: tape.leaf(p.bo.clone()),
        }
    }

    fn named(&self, prefix: &str, out: &mut Vec<(String, Tv)>) {
        out.push((format!("{prefix}.wq"), self.wq));
        out.push((format!("{prefix}.bq"), self.bq));
        out.push((format!("{prefix}.wk"), self.wk));
        out.push((format!("{prefix}.bk"), self.bk));
        out.push((format!("{prefix}.wv"), self.wv));
        out.push((format!("{prefix}.bv"), self.bv));
        out.push((format!("{prefix}.wo"), self.wo));
        out.push((format!("{prefix}.bo"), self.bo));
    }
}

pub struct TvBlock {
    pub attn: TvAttention,
    pub cross: Option<TvAttention>,
    pub ln1_scale: Tv,
    pub ln1_shift: Tv,
    pub ln2_scale: Tv,
    pub ln2_shift: Tv,
    pub ffn_w1: Tv,
    pub ffn_b1: Tv,
    pub ffn_w2: Tv,
    pub ffn_b2: Tv,
}

impl TvBlock {
    pub fn lift(tape: &Tape, p: &BlockParams) -> Self {
        Self {
            attn: TvAttention::lift(tape, &p.attn),
            cross: p.cross.as_ref().map(|c| TvAttention::lift(tape, c)),
            ln1_scale: tape.leaf(p.ln1_scale.clone()),
            ln1_shift: tape.leaf(p.ln1_shift.clone()),
            ln2_scale: tape.leaf(p.ln2_scale.clone()),
            ln2_shift: tape.leaf(p.ln2_shift.clone()),
            ffn_w1: tape.leaf(p.ffn_w1.clone()),
            ffn_b1: tape.leaf(p.ffn_b1.clone()),
            ffn_w2: tape.leaf(p.ffn_w2.clone()),
            ffn_b2: tape.leaf(p.ffn_b2.clone()),
        }
    }

    pub fn named(&self, prefix: &str, out: &mut Vec<(String, Tv)>) {
        self.attn.named(&format!("{prefix}.attn"), out);
        if let Some(cross) = &self.cross {
            cross.named(&format!("{prefix}.cross"), out);
        }
        out.push((format!("{prefix}.ln1_scale"), self.ln1_scale));
        out.push((format!("{prefix}.ln1_shift"), self.ln1_shift));
        out.push((format!("{prefix}.ln2_scale"), self.ln2_scale));
        out.push((format!("{prefix}.ln2_shift"), self.ln2_shift));
        out.push((format!("{prefix}.ffn_w1"), self.ffn_w1));
        out.push((format!("{prefix}.ffn_b1"), self.ffn_b1));
        out.push((format!("{prefix}.ffn_w2"), self.ffn_w2));
        out.push((format!("{prefix}.ffn_b2"), self.ffn_b2));
    }
}

pub struct TvTower {
    pub embedding: Tv,
    pub positional: Tv,
    pub timestep: Tv,
    pub blocks: Vec<TvBlock>,
}

impl TvTower {
    pub fn lift(tape: &Tape, p: &TransformerParams) -> Self {
        Self {
            embedding: tape.leaf(p.embedding.clone()),
            positional: tape.leaf(p.positional.clone()),
            timestep: tape.leaf(p.timestep.clone()),
            blocks: p.blocks.iter().map(|b| TvBlock::lift(tape, b)).collect(),
        }
    }

    /// Handles paired with the same names `ParamVisitor` produces.
    pub fn named(&self) -> Vec<(String, Tv)> {
        let mut out = vec![
            ("embedding".to_string(), self.embedding),
            ("positional".to_string(), self.positional),
            ("timestep".to_string(), self.timestep),
        ];
        for (l, block) in self.blocks.iter().enumerate() {
            block.named(&format!("block{l}"), &mut out);
        }
        out
    }
}

// ---- forward passes ---------------------------------------------------------

/// Multi-head attention with query/key/value/output projections. Heads are
/// contiguous column blocks of width `dim / heads`.
pub fn multi_head_attention(
    tape: &Tape,
    heads: usize,
    q_in: Tv,
    kv_in: Tv,
    p: &TvAttention,
) -> crate::numeric::Result<Tv> {
    let q = tape.add_bias(tape.matmul(q_in, p.wq)?, p.bq)?;
    let k = tape.add_bias(tape.matmul(kv_in, p.wk)?, p.bk)?;
    let v = tape.add_bias(tape.matmul(kv_in, p.wv)?, p.bv)?;
    let d = tape.shape(q)[1];
    if d % heads != 0 {
        return Err(NumericError::ShapeMismatch {
            context: "attention head split".into(),
            lhs: vec![d],
            rhs: vec![heads],
        });
    }
    let dh = d / heads;
    let mut outputs = Vec::with_capacity(heads);
    for h in 0..heads {
        let (from, to) = (h * dh, (h + 1) * dh);
        let qi = tape.slice_cols(q, from, to)?;
        let ki = tape.slice_cols(k, from, to)?;
        let vi = tape.slice_cols(v, from, to)?;
        outputs.push(softmax_attention(tape, qi, ki, vi)?);
    }
    let concat = tape.concat_cols(&outputs)?;
    tape.add_bias(tape.matmul(concat, p.wo)?, p.bo)
}

/// One encoder block: post-norm residual self-attention (with optional
/// cross-attention applied to the self-attention output and added into the
/// same residual), then a feed-forward sublayer with optional dropout.
#[allow(clippy::too_many_arguments)]
fn block_forward(
    tape: &Tape,
    heads: usize,
    block: &TvBlock,
    z: Tv,
    context: Option<Tv>,
    dropout: Option<DropoutCfg>,
    layer: usize,
) -> crate::numeric::Result<Tv> {
    let sa = multi_head_attention(tape, heads, z, z, &block.attn)?;
    let mut pre_norm = tape.add(z, sa)?;
    if let (Some(ctx), Some(cross)) = (context, &block.cross) {
        let ca = multi_head_attention(tape, heads, sa, ctx, cross)?;
        pre_norm = tape.add(pre_norm, ca)?;
    }
    let z1 = tape.layer_norm(pre_norm, block.ln1_scale, block.ln1_shift, LN_EPS)?;
    let mut ff = crate::numeric::feed_forward(
        tape,
        z1,
        block.ffn_w1,
        block.ffn_b1,
        block.ffn_w2,
        block.ffn_b2,
    )?;
    if let Some(cfg) = dropout {
        let seed = SeedSplitter::new(cfg.seed).derive("dropout", layer as u64, 0);
        ff = tape.dropout(ff, cfg.keep, seed);
    }
    let sum = tape.add(z1, ff)?;
    tape.layer_norm(sum, block.ln2_scale, block.ln2_shift, LN_EPS)
}

/// Shared tower forward: token-state plus positional and timestep terms,
/// then the block stack. `context` routes scaffold conditioning through the
/// cross-attention modules when the tower has them.
pub fn tower_forward(
    tape: &Tape,
    cfg: &ModelConfig,
    tower: &TvTower,
    x_t: Tv,
    t: usize,
    context: Option<Tv>,
    dropout: Option<DropoutCfg>,
) -> crate::numeric::Result<Tv> {
    let n = tape.shape(x_t)[0];
    let pos = tape.slice_rows(tower.positional, 0, n)?;
    let with_pos = tape.add(x_t, pos)?;
    let time_row = tape.slice_rows(tower.timestep, t, t + 1)?;
    let mut z = tape.add_bias(with_pos, time_row)?;
    for (layer, block) in tower.blocks.iter().enumerate() {
        z = block_forward(tape, cfg.heads, block, z, context, dropout, layer)?;
    }
    Ok(z)
}

/// Scaffold encoder: frozen token embedding and positional rows from the
/// unconditional tower, then a small self-attention stack of its own.
pub fn encode_scaffold_traced(
    tape: &Tape,
    cfg: &ModelConfig,
    theta0: &TvTower,
    encoder_blocks: &[TvBlock],
    tokens: &TokenSequence,
) -> crate::numeric::Result<Tv> {
    let m = tokens.len();
    let x = tape.embed_rows(theta0.embedding, tokens.ids())?;
    let pos = tape.slice_rows(theta0.positional, 0, m)?;
    let mut z = tape.add(x, pos)?;
    for block in encoder_blocks {
        z = block_forward(tape, cfg.heads, block, z, None, None, 0)?;
    }
    Ok(z)
}

// ---- untraced conveniences ---------------------------------------------------

/// Unconditional prediction of the clean state from a noisy one.
pub fn denoise_uncond(
    cfg: &ModelConfig,
    theta0: &TransformerParams,
    x_t: &crate::numeric::Tensor,
    t: usize,
) -> Result<crate::numeric::Tensor> {
    let tape = Tape::new();
    let tower = TvTower::lift(&tape, theta0);
    let x = tape.constant(x_t.clone());
    let out = tower_forward(&tape, cfg, &tower, x, t, None, None)?;
    Ok(tape.value(out))
}

/// Scaffold-conditioned prediction through the trainable tower copy.
pub fn denoise_cond(
    cfg: &ModelConfig,
    theta_c: &TransformerParams,
    x_t: &crate::numeric::Tensor,
    t: usize,
    c_s: &crate::numeric::Tensor,
) -> Result<crate::numeric::Tensor> {
    let tape = Tape::new();
    let tower = TvTower::lift(&tape, theta_c);
    let x = tape.constant(x_t.clone());
    let ctx = tape.constant(c_s.clone());
    let out = tower_forward(&tape, cfg, &tower, x, t, Some(ctx), None)?;
    Ok(tape.value(out))
}

/// Encode a scaffold SMILES into its conditioning sequence (m, d).
pub fn encode_scaffold(
    cfg: &ModelConfig,
    params: &DenoiserParams,
    vocab: &Vocabulary,
    scaffold_smiles: &str,
) -> Result<crate::numeric::Tensor> {
    let encoder = params
        .scaffold_encoder
        .as_ref()
        .ok_or(DiffusionError::MissingScaffoldEncoder)?;
    let tokens = vocab.tokenize_unpadded(scaffold_smiles, cfg.seq_len)?;
    let tape = Tape::new();
    let tower = TvTower::lift(&tape, &params.theta0);
    let blocks: Vec<TvBlock> = encoder
        .blocks
        .iter()
        .map(|b| TvBlock::lift(&tape, b))
        .collect();
    let out = encode_scaffold_traced(&tape, cfg, &tower, &blocks, &tokens)?;
    Ok(tape.value(out))
}

#[cfg(test)]
mod tests {
    use crate::numeric::{gaussian, ModelConfig, TransformerParams};

    use super::*;

    fn small_cfg() -> ModelConfig {
        ModelConfig {
            vocab_size: 12,
            dim: 16,
            heads: 4,
            layers: 2,
            seq_len: 10,
            timesteps: 20,
            ffn_mult: 2,
            dropout: 0.0,
        }
    }

    #[test]
    fn output_shape_matches_input() {
        let cfg = small_cfg();
        let theta0 = TransformerParams::init(&cfg, 1, false);
        let x = gaussian(&[cfg.seq_len, cfg.dim], 2);
        let out = denoise_uncond(&cfg, &theta0, &x, 5).unwrap();
        assert_eq!(out.shape(), &[cfg.seq_len, cfg.dim]);
    }

    #[test]
    fn conditional_copy_matches_unconditional_at_init() {
        let cfg = small_cfg();
        let theta0 = TransformerParams::init(&cfg, 1, false);
        let theta_c = theta0.conditional_copy(&cfg, 2);
        let x = gaussian(&[cfg.seq_len, cfg.dim], 3);
        let c_s = gaussian(&[4, cfg.dim], 4);
        let uncond = denoise_uncond(&cfg, &theta0, &x, 7).unwrap();
        let cond = denoise_cond(&cfg, &theta_c, &x, 7, &c_s).unwrap();
        assert!(
            uncond.max_abs_diff(&cond) < 1e-12,
            "zero-initialized cross output must be a no-op"
        );
    }

    #[test]
    fn forward_is_deterministic() {
        let cfg = small_cfg();
        let theta0 = TransformerParams::init(&cfg, 1, false);
        let x = gaussian(&[cfg.seq_len, cfg.dim], 3);
        let a = denoise_uncond(&cfg, &theta0, &x, 3).unwrap();
        let b = denoise_uncond(&cfg, &theta0, &x, 3).unwrap();
        assert!(a.bit_eq(&b));
    }

    #[test]
    fn timestep_changes_output() {
        let cfg = small_cfg();
        let theta0 = TransformerParams::init(&cfg, 1, false);
        let x = gaussian(&[cfg.seq_len, cfg.dim], 3);
        let a = denoise_uncond(&cfg, &theta0, &x, 3).unwrap();
        let b = denoise_uncond(&cfg, &theta0, &x, 9).unwrap();
        assert!(a.max_abs_diff(&b) > 0.0);
    }
}
