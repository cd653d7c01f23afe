//! Cross-modality guidance: classifier-free structure control, classifier-
//! based property control, additive score fusion, and the two-phase sampler.

mod config;
mod control;
mod predictor;
mod sampler;

pub use config::{parse_target_list, GuidanceConfig};
pub use control::{
    fuse_scores, pcm_gradient, pcm_guidance_sum, pcm_predict, scm_predict, ResolvedTarget,
};
pub use predictor::{
    predict_value, predictor_forward_traced, prop_row, PropertyPredictor, TvPredictor,
};
pub use sampler::{
    sample, sample_unconditional, Phase, SampleResult, SampleTrace, SamplerModels, StepRecord,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error(transparent)]
    Numeric(#[from] crate::numeric::NumericError),
    #[error(transparent)]
    Diffusion(#[from] crate::diffusion::DiffusionError),
    #[error(transparent)]
    Chem(#[from] crate::chem::ChemError),
    #[error("step {t} outside the predictor's trained range [0, {t_max}]")]
    StepOutOfRange { t: usize, t_max: usize },
    #[error("guidance config: {0}")]
    BadConfig(String),
    #[error("{0} requested but the required module is missing: {1}")]
    MissingModule(&'static str, &'static str),
}

impl From<crate::diffusion::ScheduleError> for GuidanceError {
    fn from(e: crate::diffusion::ScheduleError) -> Self {
        GuidanceError::Diffusion(e.into())
    }
}

impl From<crate::diffusion::VocabError> for GuidanceError {
    fn from(e: crate::diffusion::VocabError) -> Self {
        GuidanceError::Diffusion(e.into())
    }
}

pub type Result<T> = std::result::Result<T, GuidanceError>;
