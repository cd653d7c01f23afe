//! Pretraining of the unconditional denoiser, structure-control fine-tuning,
//! and per-descriptor property-predictor training.

mod adam;
mod pcm;
mod pretrain;
mod scm;

pub use adam::{clip_global_norm, Adam};
pub use pcm::{train_pcm, PcmOutput};
pub use pretrain::{train_pretrain, PretrainOutput};
pub use scm::{train_scm, ScmOutput};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::chem::{randomize_smiles, CorpusError, MoleculeGraph};
use crate::diffusion::{NoiseSchedule, TokenSequence, Vocabulary};
use crate::numeric::{Gradients, SeedSplitter, Tensor, Tv};

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Numeric(#[from] crate::numeric::NumericError),
    #[error(transparent)]
    Diffusion(#[from] crate::diffusion::DiffusionError),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error("training config: {0}")]
    BadConfig(String),
}

impl From<crate::diffusion::VocabError> for TrainingError {
    fn from(e: crate::diffusion::VocabError) -> Self {
        TrainingError::Diffusion(e.into())
    }
}

impl From<crate::diffusion::ScheduleError> for TrainingError {
    fn from(e: crate::diffusion::ScheduleError) -> Self {
        TrainingError::Diffusion(e.into())
    }
}

pub type Result<T> = std::result::Result<T, TrainingError>;

/// Stage-independent training knobs.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Probability of replacing an example with a random re-serialization.
    pub augment_prob: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    /// Optimizer-step cap; overrides `epochs` when set.
    pub max_steps: Option<usize>,
    pub seed: u64,
    /// Dropout probability inside training graphs.
    pub dropout: f64,
    /// Global gradient-norm clip.
    pub grad_clip: f64,
    /// Linear learning-rate ramp: warm up over the first 5% of steps, then
    /// decay toward a tenth of the peak rate. Off by default.
    pub lr_ramp: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            augment_prob: 0.8,
            batch_size: 16,
            lr: 1e-4,
            epochs: 10,
            max_steps: None,
            seed: 0,
            dropout: 0.1,
            grad_clip: 1.0,
            lr_ramp: false,
        }
    }
}

/// Learning rate at `step` of `total` under the optional linear ramp.
pub(crate) fn lr_at(cfg: &TrainConfig, step: usize, total: usize) -> f64 {
    if !cfg.lr_ramp || total == 0 {
        return cfg.lr;
    }
    let warmup = (total / 20).max(1);
    if step < warmup {
        return cfg.lr * (step + 1) as f64 / warmup as f64;
    }
    let progress = (step - warmup) as f64 / (total - warmup).max(1) as f64;
    cfg.lr * (1.0 - 0.9 * progress)
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.augment_prob) {
            return Err(TrainingError::BadConfig(format!(
                "augment_prob {} outside [0, 1]",
                self.augment_prob
            )));
        }
        if self.batch_size == 0 {
            return Err(TrainingError::BadConfig("batch_size must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(TrainingError::BadConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    pub(crate) fn total_steps(&self, corpus_len: usize) -> usize {
        match self.max_steps {
            Some(steps) => steps,
            None => self.epochs * corpus_len.div_ceil(self.batch_size),
        }
    }
}

/// One loss-log row; stages write `step,stage,term1,term2,total`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub stage: String,
    pub term1: f64,
    pub term2: f64,
    pub total: f64,
}

pub fn loss_csv(records: &[LossRecord]) -> String {
    let mut out = String::from("step,stage,term1,term2,total\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.step, r.stage, r.term1, r.term2, r.total
        ));
    }
    out
}

/// The noisy-embedding sampling path used by all stages: embed the tokens
/// with the frozen table and push them `t` steps along the forward process.
pub fn noise_emb(
    table: &Tensor,
    schedule: &NoiseSchedule,
    tokens: &TokenSequence,
    t: usize,
    seed: u64,
) -> Result<Tensor> {
    let x0 = crate::diffusion::embed(table, tokens);
    Ok(schedule.q_sample(&x0, t, seed)?)
}

// ---- shared batch machinery (crate-internal) -------------------------------

/// Seeded epoch-wise shuffling of example indices.
pub(crate) struct Shuffler {
    order: Vec<usize>,
    cursor: usize,
    epoch: u64,
    seeds: SeedSplitter,
}

impl Shuffler {
    pub(crate) fn new(len: usize, seeds: SeedSplitter) -> Self {
        let mut s = Self {
            order: (0..len).collect(),
            cursor: 0,
            epoch: 0,
            seeds,
        };
        s.reshuffle();
        s
    }

    fn reshuffle(&mut self) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
            self.seeds.derive("shuffle", self.epoch, 0),
        );
        self.order.shuffle(&mut rng);
    }

    pub(crate) fn next_index(&mut self) -> usize {
        if self.cursor == self.order.len() {
            self.epoch += 1;
            self.cursor = 0;
            self.reshuffle();
        }
        let idx = self.order[self.cursor];
        self.cursor += 1;
        idx
    }
}

/// Per-example token sequence after the augmentation draw. Falls back to the
/// original line when the randomized form does not fit the model length.
pub(crate) fn example_tokens(
    line: &str,
    mol: &MoleculeGraph,
    vocab: &Vocabulary,
    seq_len: usize,
    augment_prob: f64,
    seeds: &SeedSplitter,
    step: u64,
    slot: u64,
) -> Result<TokenSequence> {
    let draw = seeds.derive("augment", step, slot);
    let unit = (draw >> 11) as f64 / 9_007_199_254_740_992.0;
    if unit < augment_prob {
        let variant = randomize_smiles(mol, seeds.derive("augseq", step, slot));
        if let Ok(seq) = vocab.tokenize(&variant, seq_len) {
            return Ok(seq);
        }
    }
    Ok(vocab.tokenize(line, seq_len)?)
}

pub(crate) fn uniform_step(seeds: &SeedSplitter, stream: &str, step: u64, slot: u64, max: usize) -> usize {
    1 + (seeds.derive(stream, step, slot) % max as u64) as usize
}

/// Pull gradients for a set of named handles; absent gradients become zeros.
pub(crate) fn collect_named_grads(
    tape: &crate::numeric::Tape,
    grads: &Gradients,
    named: &[(String, Tv)],
    prefix: &str,
) -> Vec<(String, Tensor)> {
    named
        .iter()
        .map(|(name, tv)| {
            let g = grads
                .wrt(*tv)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(&tape.shape(*tv)));
            let key = if prefix.is_empty() {
                name.clone()
            } else {
                format!("{prefix}.{name}")
            };
            (key, g)
        })
        .collect()
}

/// Average per-example gradient lists into one map, in slot order.
pub(crate) fn average_grads(
    per_example: Vec<Vec<(String, Tensor)>>,
) -> BTreeMap<String, Tensor> {
    let batch = per_example.len().max(1) as f64;
    let mut total: BTreeMap<String, Tensor> = BTreeMap::new();
    for example in per_example {
        for (name, g) in example {
            match total.get_mut(&name) {
                Some(acc) => *acc = acc.add(&g).expect("same shape"),
                None => {
                    total.insert(name, g);
                }
            }
        }
    }
    for g in total.values_mut() {
        *g = g.scale(1.0 / batch);
    }
    total
}
