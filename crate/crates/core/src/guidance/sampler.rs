use crate::analysis::CorpusStats;
use crate::diffusion::{
    denoise_uncond, encode_scaffold, round_to_tokens, DenoiserParams, NoiseSchedule, Vocabulary,
};
use crate::numeric::{gaussian, ModelConfig, SeedSplitter};

use super::control::{fuse_scores, pcm_predict, scm_predict, ResolvedTarget};
use super::predictor::PropertyPredictor;
use super::{GuidanceConfig, GuidanceError, Result};

/// Everything needed to run sampling chains. Immutable during sampling, so a
/// batch of chains with distinct seeds can run in parallel.
pub struct SamplerModels {
    pub cfg: ModelConfig,
    pub vocab: Vocabulary,
    pub schedule: NoiseSchedule,
    pub denoiser: DenoiserParams,
    pub predictors: Vec<PropertyPredictor>,
    pub stats: Option<CorpusStats>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    One,
    Two,
}

#[derive(Clone, Debug)]
pub struct StepRecord {
    pub t: usize,
    pub phase: Phase,
    /// Frobenius norm of the structure-guided score, when that module ran.
    pub structure_norm: Option<f64>,
    /// Frobenius norm of the property-guided score, when that module ran.
    pub property_norm: Option<f64>,
    pub decoded: Option<String>,
}

/// Per-step record of one sampling chain: exactly one entry per timestep and
/// at most one phase transition.
#[derive(Clone, Debug, Default)]
pub struct SampleTrace {
    pub steps: Vec<StepRecord>,
}

impl SampleTrace {
    pub fn phase_transitions(&self) -> usize {
        self.steps
            .windows(2)
            .filter(|w| w[0].phase != w[1].phase)
            .count()
    }
}

#[derive(Clone, Debug)]
pub struct SampleResult {
    /// Decoded SMILES text; when no EOS was produced this is the raw joined
    /// token string and `decode_ok` is false.
    pub smiles: String,
    pub decode_ok: bool,
    pub trace: SampleTrace,
}

/// Reverse the chain under the configured guidance.
///
/// Phase I (t from T down to the boundary, exclusive) applies structure
/// guidance only; Phase II applies the additive fusion of structure- and
/// property-guided scores. Either module degrades to the unconditional
/// denoiser when its constraint is absent, and the fully unconstrained
/// config reproduces plain unconditional sampling bit for bit.
pub fn sample(models: &SamplerModels, config: &GuidanceConfig, seed: u64) -> Result<SampleResult> {
    let timesteps = models.schedule.steps();
    config.validate(timesteps)?;
    let c_s = match &config.scaffold {
        Some(smiles) => {
            if models.denoiser.theta_c.is_none() {
                return Err(GuidanceError::MissingModule(
                    "structure guidance",
                    "conditional tower (train-scm checkpoint)",
                ));
            }
            Some(encode_scaffold(
                &models.cfg,
                &models.denoiser,
                &models.vocab,
                smiles,
            )?)
        }
        None => None,
    };
    let targets: Vec<ResolvedTarget> = config
        .targets
        .iter()
        .map(|t| ResolvedTarget::from_target(t, models.stats.as_ref()))
        .collect();
    let predictors: Vec<&PropertyPredictor> = targets
        .iter()
        .map(|t| {
            models
                .predictors
                .iter()
                .find(|p| p.descriptor == t.descriptor)
                .ok_or(GuidanceError::MissingModule(
                    "property guidance",
                    "predictor checkpoint for the targeted descriptor",
                ))
        })
        .collect::<Result<_>>()?;

    let seeds = SeedSplitter::new(seed);
    let mut x = gaussian(&[models.cfg.seq_len, models.cfg.dim], seeds.derive("init", 0, 0));
    let mut trace = SampleTrace::default();

    for t in (1..=timesteps).rev() {
        let phase = if t > config.t2_boundary {
            Phase::One
        } else {
            Phase::Two
        };
        let mut structure_norm = None;
        let mut property_norm = None;
        let eps = match (phase, &c_s, targets.is_empty()) {
            (Phase::One, Some(ctx), _) => {
                let eps_s = scm_predict(&models.cfg, &models.denoiser, &x, t, ctx, config.w_s)?;
                structure_norm = Some(eps_s.norm());
                eps_s
            }
            (Phase::Two, Some(ctx), false) => {
                let eps_s = scm_predict(&models.cfg, &models.denoiser, &x, t, ctx, config.w_s)?;
                let eps_p = pcm_predict(
                    &models.cfg,
                    &models.denoiser,
                    &predictors,
                    &targets,
                    &x,
                    t,
                    Some(ctx),
                    config.w_p,
                    models.stats.as_ref(),
                    config.sigma_g,
                    config.kappa,
                )?;
                structure_norm = Some(eps_s.norm());
                property_norm = Some(eps_p.norm());
                fuse_scores(&eps_s, &eps_p)?
            }
            (Phase::Two, Some(ctx), true) => {
                let eps_s = scm_predict(&models.cfg, &models.denoiser, &x, t, ctx, config.w_s)?;
                structure_norm = Some(eps_s.norm());
                eps_s
            }
            (Phase::Two, None, false) => {
                let eps_p = pcm_predict(
                    &models.cfg,
                    &models.denoiser,
                    &predictors,
                    &targets,
                    &x,
                    t,
                    None,
                    config.w_p,
                    models.stats.as_ref(),
                    config.sigma_g,
                    config.kappa,
                )?;
                property_norm = Some(eps_p.norm());
                eps_p
            }
            _ => denoise_uncond(&models.cfg, &models.denoiser.theta0, &x, t)?,
        };
        x = models
            .schedule
            .reverse_step(&x, t, &eps, seeds.derive("step", t as u64, 0))?;
        let decoded = match config.trace_decode_every {
            Some(every) if every > 0 && t % every == 0 => {
                let tokens = round_to_tokens(&models.denoiser.theta0.embedding, &x);
                Some(models.vocab.detokenize(&tokens))
            }
            _ => None,
        };
        trace.steps.push(StepRecord {
            t,
            phase,
            structure_norm,
            property_norm,
            decoded,
        });
    }

    let tokens = round_to_tokens(&models.denoiser.theta0.embedding, &x);
    let decode_ok = tokens.has_eos();
    let smiles = models.vocab.detokenize(&tokens);
    Ok(SampleResult {
        smiles,
        decode_ok,
        trace,
    })
}

/// The bare unconditional sampler: the degenerate config with no scaffold
/// and no targets must reproduce this trajectory exactly.
pub fn sample_unconditional(models: &SamplerModels, seed: u64) -> Result<SampleResult> {
    let timesteps = models.schedule.steps();
    let seeds = SeedSplitter::new(seed);
    let mut x = gaussian(&[models.cfg.seq_len, models.cfg.dim], seeds.derive("init", 0, 0));
    for t in (1..=timesteps).rev() {
        let eps = denoise_uncond(&models.cfg, &models.denoiser.theta0, &x, t)?;
        x = models
            .schedule
            .reverse_step(&x, t, &eps, seeds.derive("step", t as u64, 0))?;
    }
    let tokens = round_to_tokens(&models.denoiser.theta0.embedding, &x);
    Ok(SampleResult {
        smiles: models.vocab.detokenize(&tokens),
        decode_ok: tokens.has_eos(),
        trace: SampleTrace::default(),
    })
}

#[cfg(test)]
mod tests {
    use crate::numeric::TransformerParams;

    use super::*;

    fn tiny_models() -> SamplerModels {
        let lines: Vec<String> = ["CCO", "CCN", "CCC"].iter().map(|s| s.to_string()).collect();
        let vocab = Vocabulary::from_corpus(&lines, 2);
        let cfg = ModelConfig {
            vocab_size: vocab.size(),
            dim: 16,
            heads: 4,
            layers: 1,
            seq_len: 8,
            timesteps: 12,
            ffn_mult: 2,
            dropout: 0.0,
        };
        let theta0 = TransformerParams::init(&cfg, 1, false);
        SamplerModels {
            cfg,
            vocab,
            schedule: NoiseSchedule::linear(12).unwrap(),
            denoiser: DenoiserParams::unconditional(theta0),
            predictors: Vec::new(),
            stats: None,
        }
    }

    #[test]
    fn degenerate_config_matches_bare_unconditional_sampler() {
        let models = tiny_models();
        let config = GuidanceConfig::unconditional(models.cfg.timesteps * 3 / 4);
        for seed in [0u64, 7, 42] {
            let a = sample(&models, &config, seed).unwrap();
            let b = sample_unconditional(&models, seed).unwrap();
            assert_eq!(a.smiles, b.smiles, "seed {seed}");
        }
    }

    #[test]
    fn sampling_is_a_pure_function_of_seed() {
        let models = tiny_models();
        let config = GuidanceConfig::unconditional(9);
        let a = sample(&models, &config, 11).unwrap();
        let b = sample(&models, &config, 11).unwrap();
        assert_eq!(a.smiles, b.smiles);
        assert_eq!(a.decode_ok, b.decode_ok);
    }

    #[test]
    fn trace_has_one_record_per_step_and_one_transition() {
        let models = tiny_models();
        let config = GuidanceConfig::unconditional(9);
        let out = sample(&models, &config, 3).unwrap();
        assert_eq!(out.trace.steps.len(), models.cfg.timesteps);
        assert_eq!(out.trace.phase_transitions(), 1);
        let boundary_record = out
            .trace
            .steps
            .iter()
            .find(|r| r.t == config.t2_boundary)
            .unwrap();
        assert_eq!(boundary_record.phase, Phase::Two);
    }

    #[test]
    fn scaffold_without_conditional_tower_is_an_error() {
        let models = tiny_models();
        let mut config = GuidanceConfig::balanced(models.cfg.timesteps);
        config.scaffold = Some("CC".to_string());
        assert!(matches!(
            sample(&models, &config, 1),
            Err(GuidanceError::MissingModule(..))
        ));
    }
}
