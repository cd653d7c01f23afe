//! Noise schedule, forward/reverse diffusion steps, the discrete/continuous
//! embedding bridge, and the denoiser towers.

mod denoiser;
mod embedding;
mod schedule;
mod vocab;

pub use denoiser::{
    denoise_cond, denoise_uncond, encode_scaffold, encode_scaffold_traced, multi_head_attention,
    tower_forward, DenoiserParams, DropoutCfg, TvBlock, TvTower,
};
pub use embedding::{embed, min_embedding_gap, round_to_tokens};
pub use schedule::{NoiseSchedule, ScheduleError};
pub use vocab::{TokenSequence, VocabError, Vocabulary, BOS, EOS, PAD};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Numeric(#[from] crate::numeric::NumericError),
    #[error("no scaffold encoder in this parameter set")]
    MissingScaffoldEncoder,
}

pub type Result<T> = std::result::Result<T, DiffusionError>;
