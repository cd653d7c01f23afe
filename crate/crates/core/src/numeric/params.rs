use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rng::uniform;
use super::{NumericError, Result, SeedSplitter, Tensor};

/// Dimensions shared by the denoiser towers, the scaffold encoder, and the
/// property predictors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Vocabulary size (including PAD/BOS/EOS).
    pub vocab_size: usize,
    /// Residual stream width.
    pub dim: usize,
    pub heads: usize,
    pub layers: usize,
    /// Fixed token-sequence length.
    pub seq_len: usize,
    /// Diffusion step count.
    pub timesteps: usize,
    /// Feed-forward expansion factor.
    pub ffn_mult: usize,
    /// Dropout probability used in training graphs; inference removes it.
    pub dropout: f64,
}

impl ModelConfig {
    pub fn desk_scale(vocab_size: usize, seq_len: usize) -> Self {
        Self {
            vocab_size,
            dim: 64,
            heads: 4,
            layers: 2,
            seq_len,
            timesteps: 200,
            ffn_mult: 4,
            dropout: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim % self.heads != 0 {
            return Err(NumericError::ShapeMismatch {
                context: "dim must be divisible by heads".into(),
                lhs: vec![self.dim],
                rhs: vec![self.heads],
            });
        }
        Ok(())
    }

    /// Flat `key = value` echo embedded in checkpoints and manifests.
    pub fn echo(&self) -> String {
        format!(
            "vocab_size = {}\ndim = {}\nheads = {}\nlayers = {}\nseq_len = {}\ntimesteps = {}\nffn_mult = {}\ndropout = {}\n",
            self.vocab_size,
            self.dim,
            self.heads,
            self.layers,
            self.seq_len,
            self.timesteps,
            self.ffn_mult,
            self.dropout
        )
    }

    pub fn from_echo(echo: &str) -> Option<Self> {
        let mut map = BTreeMap::new();
        for line in echo.lines() {
            if let Some((k, v)) = line.split_once('=') {
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Some(Self {
            vocab_size: map.get("vocab_size")?.parse().ok()?,
            dim: map.get("dim")?.parse().ok()?,
            heads: map.get("heads")?.parse().ok()?,
            layers: map.get("layers")?.parse().ok()?,
            seq_len: map.get("seq_len")?.parse().ok()?,
            timesteps: map.get("timesteps")?.parse().ok()?,
            ffn_mult: map.get("ffn_mult")?.parse().ok()?,
            dropout: map.get("dropout")?.parse().ok()?,
        })
    }
}

/// Query/key/value/output projections of one attention module.
#[derive(Clone, Debug)]
pub struct AttentionParams {
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    pub wo: Tensor,
    pub bo: Tensor,
}

impl AttentionParams {
    fn init(dim: usize, seeds: &SeedSplitter, tag: u64) -> Self {
        let lim = 1.0 / (dim as f64).sqrt();
        let w = |i| uniform(&[dim, dim], -lim, lim, seeds.derive("attn", tag, i));
        Self {
            wq: w(0),
            bq: Tensor::zeros(&[dim]),
            wk: w(1),
            bk: Tensor::zeros(&[dim]),
            wv: w(2),
            bv: Tensor::zeros(&[dim]),
            wo: w(3),
            bo: Tensor::zeros(&[dim]),
        }
    }

    /// Fresh projections with a zeroed output matrix, so the module is an
    /// exact no-op when first spliced into a pretrained tower.
    fn init_zero_out(dim: usize, seeds: &SeedSplitter, tag: u64) -> Self {
        let mut p = Self::init(dim, seeds, tag);
        p.wo = Tensor::zeros(&[dim, dim]);
        p
    }

    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        out.push((format!("{prefix}.wq"), &self.wq));
        out.push((format!("{prefix}.bq"), &self.bq));
        out.push((format!("{prefix}.wk"), &self.wk));
        out.push((format!("{prefix}.bk"), &self.bk));
        out.push((format!("{prefix}.wv"), &self.wv));
        out.push((format!("{prefix}.bv"), &self.bv));
        out.push((format!("{prefix}.wo"), &self.wo));
        out.push((format!("{prefix}.bo"), &self.bo));
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor)) {
        f(&format!("{prefix}.wq"), &mut self.wq);
        f(&format!("{prefix}.bq"), &mut self.bq);
        f(&format!("{prefix}.wk"), &mut self.wk);
        f(&format!("{prefix}.bk"), &mut self.bk);
        f(&format!("{prefix}.wv"), &mut self.wv);
        f(&format!("{prefix}.bv"), &mut self.bv);
        f(&format!("{prefix}.wo"), &mut self.wo);
        f(&format!("{prefix}.bo"), &mut self.bo);
    }
}

/// One transformer block: self-attention, optional cross-attention, two
/// layer norms, and the feed-forward pair.
#[derive(Clone, Debug)]
pub struct BlockParams {
    pub attn: AttentionParams,
    pub cross: Option<AttentionParams>,
    pub ln1_scale: Tensor,
    pub ln1_shift: Tensor,
    pub ln2_scale: Tensor,
    pub ln2_shift: Tensor,
    pub ffn_w1: Tensor,
    pub ffn_b1: Tensor,
    pub ffn_w2: Tensor,
    pub ffn_b2: Tensor,
}

impl BlockParams {
    fn init(cfg: &ModelConfig, seeds: &SeedSplitter, layer: u64, cross: bool) -> Self {
        let d = cfg.dim;
        let h = d * cfg.ffn_mult;
        let lim_in = 1.0 / (d as f64).sqrt();
        let lim_h = 1.0 / (h as f64).sqrt();
        Self {
            attn: AttentionParams::init(d, seeds, layer * 10),
            cross: cross.then(|| AttentionParams::init_zero_out(d, seeds, layer * 10 + 5)),
            ln1_scale: Tensor::full(&[d], 1.0),
            ln1_shift: Tensor::zeros(&[d]),
            ln2_scale: Tensor::full(&[d], 1.0),
            ln2_shift: Tensor::zeros(&[d]),
            ffn_w1: uniform(&[d, h], -lim_in, lim_in, seeds.derive("ffn1", layer, 0)),
            ffn_b1: Tensor::zeros(&[h]),
            ffn_w2: uniform(&[h, d], -lim_h, lim_h, seeds.derive("ffn2", layer, 0)),
            ffn_b2: Tensor::zeros(&[d]),
        }
    }

    fn visit<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Tensor)>) {
        self.attn.visit(&format!("{prefix}.attn"), out);
        if let Some(cross) = &self.cross {
            cross.visit(&format!("{prefix}.cross"), out);
        }
        out.push((format!("{prefix}.ln1_scale"), &self.ln1_scale));
        out.push((format!("{prefix}.ln1_shift"), &self.ln1_shift));
        out.push((format!("{prefix}.ln2_scale"), &self.ln2_scale));
        out.push((format!("{prefix}.ln2_shift"), &self.ln2_shift));
        out.push((format!("{prefix}.ffn_w1"), &self.ffn_w1));
        out.push((format!("{prefix}.ffn_b1"), &self.ffn_b1));
        out.push((format!("{prefix}.ffn_w2"), &self.ffn_w2));
        out.push((format!("{prefix}.ffn_b2"), &self.ffn_b2));
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Tensor)) {
        self.attn.visit_mut(&format!("{prefix}.attn"), f);
        if let Some(cross) = &mut self.cross {
            cross.visit_mut(&format!("{prefix}.cross"), f);
        }
        f(&format!("{prefix}.ln1_scale"), &mut self.ln1_scale);
        f(&format!("{prefix}.ln1_shift"), &mut self.ln1_shift);
        f(&format!("{prefix}.ln2_scale"), &mut self.ln2_scale);
        f(&format!("{prefix}.ln2_shift"), &mut self.ln2_shift);
        f(&format!("{prefix}.ffn_w1"), &mut self.ffn_w1);
        f(&format!("{prefix}.ffn_b1"), &mut self.ffn_b1);
        f(&format!("{prefix}.ffn_w2"), &mut self.ffn_w2);
        f(&format!("{prefix}.ffn_b2"), &mut self.ffn_b2);
    }
}

/// Visitor-style access to a parameter set, used by the optimizer and the
/// checkpoint writer. Traversal order is fixed by the struct layout.
pub trait ParamVisitor {
    fn named_tensors(&self) -> Vec<(String, &Tensor)>;
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor));

    fn to_map(&self) -> BTreeMap<String, Tensor> {
        self.named_tensors()
            .into_iter()
            .map(|(k, v)| (k, v.clone()))
            .collect()
    }

    /// Replace every tensor from `map`; missing or extra names are an error.
    fn load_map(&mut self, map: &BTreeMap<String, Tensor>) -> Result<()> {
        let mut missing = Vec::new();
        let mut seen = 0usize;
        self.visit_mut(&mut |name, tensor| match map.get(name) {
            Some(t) => {
                *tensor = t.clone();
                seen += 1;
            }
            None => missing.push(name.to_string()),
        });
        if !missing.is_empty() || seen != map.len() {
            return Err(NumericError::ShapeMismatch {
                context: format!(
                    "parameter set mismatch: {} missing, {} loaded, {} in map",
                    missing.len(),
                    seen,
                    map.len()
                ),
                lhs: vec![seen],
                rhs: vec![map.len()],
            });
        }
        Ok(())
    }
}

/// Full parameter set for one denoiser tower: embedding, positional and
/// timestep tables plus the transformer blocks.
#[derive(Clone, Debug)]
pub struct TransformerParams {
    pub embedding: Tensor,
    pub positional: Tensor,
    pub timestep: Tensor,
    pub blocks: Vec<BlockParams>,
}

impl TransformerParams {
    pub fn init(cfg: &ModelConfig, seed: u64, with_cross: bool) -> Self {
        let seeds = SeedSplitter::new(seed);
        let (v, d) = (cfg.vocab_size, cfg.dim);
        let lim = 1.0 / (d as f64).sqrt();
        // the embedding acts as a one-hot(v) -> d projection, so its fan-in
        // is the vocabulary size
        let lim_emb = 1.0 / (v as f64).sqrt();
        Self {
            embedding: uniform(&[v, d], -lim_emb, lim_emb, seeds.derive("embedding", 0, 0)),
            positional: uniform(&[cfg.seq_len, d], -lim, lim, seeds.derive("positional", 0, 0)),
            timestep: uniform(
                &[cfg.timesteps + 1, d],
                -lim,
                lim,
                seeds.derive("timestep", 0, 0),
            ),
            blocks: (0..cfg.layers)
                .map(|l| BlockParams::init(cfg, &seeds, l as u64, with_cross))
                .collect(),
        }
    }

    /// Conditional copy of a pretrained tower: same weights, plus fresh
    /// cross-attention whose output projection starts at zero.
    pub fn conditional_copy(&self, cfg: &ModelConfig, seed: u64) -> Self {
        let seeds = SeedSplitter::new(seed);
        let mut copy = self.clone();
        for (l, block) in copy.blocks.iter_mut().enumerate() {
            block.cross = Some(AttentionParams::init_zero_out(
                cfg.dim,
                &seeds,
                l as u64 * 10 + 5,
            ));
        }
        copy
    }
}

impl ParamVisitor for TransformerParams {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            ("embedding".to_string(), &self.embedding),
            ("positional".to_string(), &self.positional),
            ("timestep".to_string(), &self.timestep),
        ];
        for (l, block) in self.blocks.iter().enumerate() {
            block.visit(&format!("block{l}"), &mut out);
        }
        out
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
        f("embedding", &mut self.embedding);
        f("positional", &mut self.positional);
        f("timestep", &mut self.timestep);
        for (l, block) in self.blocks.iter_mut().enumerate() {
            block.visit_mut(&format!("block{l}"), f);
        }
    }
}

/// Self-attention encoder that turns scaffold token embeddings into the
/// conditioning sequence consumed by cross-attention.
#[derive(Clone, Debug)]
pub struct ScaffoldEncoderParams {
    pub blocks: Vec<BlockParams>,
}

impl ScaffoldEncoderParams {
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let seeds = SeedSplitter::new(seed);
        Self {
            blocks: (0..2)
                .map(|l| BlockParams::init(cfg, &seeds, 100 + l as u64, false))
                .collect(),
        }
    }
}

impl ParamVisitor for ScaffoldEncoderParams {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (l, block) in self.blocks.iter().enumerate() {
            block.visit(&format!("enc{l}"), &mut out);
        }
        out
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
        for (l, block) in self.blocks.iter_mut().enumerate() {
            block.visit_mut(&format!("enc{l}"), f);
        }
    }
}

/// Transformer encoder with a pooled regression head, one per descriptor.
#[derive(Clone, Debug)]
pub struct PredictorParams {
    pub positional: Tensor,
    pub timestep: Tensor,
    pub blocks: Vec<BlockParams>,
    pub head_w: Tensor,
    pub head_b: Tensor,
    /// Per-descriptor conditioning rows for targets other than the one this
    /// predictor regresses; row `j` is scaled by the target value.
    pub prop_embed: Tensor,
    pub prop_bias: Tensor,
    /// Highest diffusion step this predictor is trained for.
    pub t_max: usize,
}

impl PredictorParams {
    pub fn init(cfg: &ModelConfig, seed: u64, n_props: usize, with_cross: bool, t_max: usize) -> Self {
        let seeds = SeedSplitter::new(seed);
        let d = cfg.dim;
        let lim = 1.0 / (d as f64).sqrt();
        Self {
            positional: uniform(&[cfg.seq_len, d], -lim, lim, seeds.derive("p.pos", 0, 0)),
            timestep: uniform(&[cfg.timesteps + 1, d], -lim, lim, seeds.derive("p.time", 0, 0)),
            blocks: (0..cfg.layers)
                .map(|l| BlockParams::init(cfg, &seeds, 200 + l as u64, with_cross))
                .collect(),
            head_w: uniform(&[d, 1], -lim, lim, seeds.derive("p.head", 0, 0)),
            head_b: Tensor::zeros(&[1]),
            prop_embed: uniform(&[n_props.max(1), d], -lim, lim, seeds.derive("p.prop", 0, 0)),
            prop_bias: uniform(&[n_props.max(1), d], -lim, lim, seeds.derive("p.propb", 0, 0)),
            t_max,
        }
    }
}

impl ParamVisitor for PredictorParams {
    fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            ("positional".to_string(), &self.positional),
            ("timestep".to_string(), &self.timestep),
        ];
        for (l, block) in self.blocks.iter().enumerate() {
            block.visit(&format!("block{l}"), &mut out);
        }
        out.push(("head_w".to_string(), &self.head_w));
        out.push(("head_b".to_string(), &self.head_b));
        out.push(("prop_embed".to_string(), &self.prop_embed));
        out.push(("prop_bias".to_string(), &self.prop_bias));
        out
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
        f("positional", &mut self.positional);
        f("timestep", &mut self.timestep);
        for (l, block) in self.blocks.iter_mut().enumerate() {
            block.visit_mut(&format!("block{l}"), f);
        }
        f("head_w", &mut self.head_w);
        f("head_b", &mut self.head_b);
        f("prop_embed", &mut self.prop_embed);
        f("prop_bias", &mut self.prop_bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_echo_roundtrip() {
        let cfg = ModelConfig::desk_scale(40, 48);
        let echo = cfg.echo();
        assert_eq!(ModelConfig::from_echo(&echo).unwrap(), cfg);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let cfg = ModelConfig::desk_scale(10, 8);
        let a = TransformerParams::init(&cfg, 5, false);
        let b = TransformerParams::init(&cfg, 5, false);
        for ((na, ta), (nb, tb)) in a.named_tensors().iter().zip(b.named_tensors().iter()) {
            assert_eq!(na, nb);
            assert!(ta.bit_eq(tb));
        }
    }

    #[test]
    fn conditional_copy_shares_weights_and_zeroes_cross_out() {
        let cfg = ModelConfig::desk_scale(10, 8);
        let base = TransformerParams::init(&cfg, 5, false);
        let cond = base.conditional_copy(&cfg, 6);
        assert!(cond.embedding.bit_eq(&base.embedding));
        for block in &cond.blocks {
            let cross = block.cross.as_ref().unwrap();
            assert_eq!(cross.wo.norm(), 0.0);
            assert!(cross.wq.norm() > 0.0);
        }
    }
}
