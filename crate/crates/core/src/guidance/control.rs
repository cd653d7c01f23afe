use crate::analysis::{CorpusStats, DescriptorId, Goal, PropertyTarget};
use crate::diffusion::{denoise_cond, denoise_uncond, DenoiserParams};
use crate::numeric::{ModelConfig, Tape, Tensor};

use super::predictor::{predictor_forward_traced, prop_row, PropertyPredictor, TvPredictor};
use super::{GuidanceError, Result};

/// Classifier-free structure blend:
/// `w_s * uncond + (1 - w_s) * cond`. The endpoints return the respective
/// branch exactly (bit-for-bit) and skip the other network entirely.
pub fn scm_predict(
    cfg: &ModelConfig,
    params: &DenoiserParams,
    x_t: &Tensor,
    t: usize,
    c_s: &Tensor,
    w_s: f64,
) -> Result<Tensor> {
    let theta_c = params
        .theta_c
        .as_ref()
        .ok_or(GuidanceError::MissingModule(
            "structure guidance",
            "conditional tower",
        ))?;
    if w_s == 1.0 {
        return Ok(denoise_uncond(cfg, &params.theta0, x_t, t)?);
    }
    if w_s == 0.0 {
        return Ok(denoise_cond(cfg, theta_c, x_t, t, c_s)?);
    }
    let uncond = denoise_uncond(cfg, &params.theta0, x_t, t)?;
    let cond = denoise_cond(cfg, theta_c, x_t, t, c_s)?;
    Ok(uncond.scale(w_s).add(&cond.scale(1.0 - w_s))?)
}

/// A property target with its margin resolved against corpus statistics.
#[derive(Clone, Debug)]
pub struct ResolvedTarget {
    pub descriptor: DescriptorId,
    pub goal: Goal,
    pub weight: f64,
    /// Corpus standard deviation of the descriptor (1.0 when unknown);
    /// directional goals move the target by `kappa` of these units.
    pub corpus_std: f64,
}

impl ResolvedTarget {
    pub fn from_target(target: &PropertyTarget, stats: Option<&CorpusStats>) -> Self {
        let corpus_std = stats
            .and_then(|s| s.entry(target.descriptor))
            .map(|e| e.std)
            .unwrap_or(1.0);
        Self {
            descriptor: target.descriptor,
            goal: target.goal,
            weight: target.weight,
            corpus_std,
        }
    }

    /// Target value given the current prediction. Directional goals chase a
    /// moving set-point `kappa` deviations away, which realizes a steady
    /// ascent/descent; fixed goals use their value.
    fn value(&self, prediction: f64, kappa: f64) -> f64 {
        match self.goal {
            Goal::Maximize => prediction + kappa * self.corpus_std,
            Goal::Minimize => prediction - kappa * self.corpus_std,
            Goal::Approach(v) => v,
        }
    }
}

/// Gradient of the property log-likelihood with respect to the noisy state.
///
/// Under a Gaussian reading of the regression head the log-likelihood is
/// `-(pred - target)^2 / (2 sigma_g^2)`; the gradient is taken through the
/// predictor by the reverse-mode sweep. Also returns the predicted value.
pub fn pcm_gradient(
    cfg: &ModelConfig,
    predictor: &PropertyPredictor,
    x_t: &Tensor,
    t: usize,
    c_s: Option<&Tensor>,
    target: &ResolvedTarget,
    others: &[(usize, f64)],
    sigma_g: f64,
    kappa: f64,
) -> Result<(Tensor, f64)> {
    if t > predictor.t_max() {
        return Err(GuidanceError::StepOutOfRange {
            t,
            t_max: predictor.t_max(),
        });
    }
    let tape = Tape::new();
    let p = TvPredictor::lift(&tape, &predictor.params);
    let x = tape.leaf(x_t.clone());
    let ctx = c_s.map(|c| tape.constant(c.clone()));
    let pred = predictor_forward_traced(&tape, cfg, &p, x, t, ctx, others)?;
    let pred_value = tape.value(pred).item().expect("scalar head");
    let target_value = target.value(pred_value, kappa);
    // loss = -(pred - target)^2 / (2 sigma^2), target held constant
    let tgt = tape.constant(Tensor::new(vec![1, 1], vec![target_value]).expect("scalar"));
    let diff = tape.sub(pred, tgt)?;
    let sq = tape.mul(diff, diff)?;
    let loss = tape.scale(sq, -1.0 / (2.0 * sigma_g * sigma_g));
    let grads = tape.backward(loss)?;
    Ok((grads.require(x)?.clone(), pred_value))
}

/// Normalized per-target values used as conditioning tokens for the other
/// predictors: `(row, z-scored current value or raw goal value)`.
fn conditioning_rows(
    targets: &[ResolvedTarget],
    skip: usize,
    stats: Option<&CorpusStats>,
    kappa: f64,
) -> Vec<(usize, f64)> {
    targets
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(_, other)| {
            // directional goals condition on "the direction", encoded as the
            // signed margin; fixed goals condition on the z-scored value
            let raw = match other.goal {
                Goal::Maximize => kappa * other.corpus_std,
                Goal::Minimize => -kappa * other.corpus_std,
                Goal::Approach(v) => v,
            };
            let norm = stats
                .and_then(|s| s.entry(other.descriptor))
                .map(|e| (raw - if matches!(other.goal, Goal::Approach(_)) { e.mean } else { 0.0 }) / e.std)
                .unwrap_or(raw);
            (prop_row(other.descriptor), norm)
        })
        .collect()
}

/// Sum of the per-predictor guidance terms: each raw gradient is rescaled to
/// the norm of the unconditional score, then weighted. Predictors whose
/// trained range excludes `t` contribute zero.
#[allow(clippy::too_many_arguments)]
pub fn pcm_guidance_sum(
    cfg: &ModelConfig,
    predictors: &[&PropertyPredictor],
    targets: &[ResolvedTarget],
    x_t: &Tensor,
    t: usize,
    c_s: Option<&Tensor>,
    uncond_norm: f64,
    stats: Option<&CorpusStats>,
    sigma_g: f64,
    kappa: f64,
) -> Result<Tensor> {
    let mut total = Tensor::zeros(x_t.shape());
    for (i, (predictor, target)) in predictors.iter().zip(targets.iter()).enumerate() {
        if t > predictor.t_max() {
            continue;
        }
        let ctx = if predictor.scaffold_conditioned() {
            c_s
        } else {
            None
        };
        let others = conditioning_rows(targets, i, stats, kappa);
        let (grad, _) = pcm_gradient(cfg, predictor, x_t, t, ctx, target, &others, sigma_g, kappa)?;
        let norm = grad.norm();
        let rescaled = if norm > 0.0 {
            grad.scale(uncond_norm / norm)
        } else {
            grad
        };
        total = total.add(&rescaled.scale(target.weight))?;
    }
    Ok(total)
}

/// Classifier-based property blend:
/// `w_p * uncond + (1 - w_p) * sum_i lambda_i * grad_i`.
/// `w_p = 1` returns the unconditional branch exactly.
#[allow(clippy::too_many_arguments)]
pub fn pcm_predict(
    cfg: &ModelConfig,
    params: &DenoiserParams,
    predictors: &[&PropertyPredictor],
    targets: &[ResolvedTarget],
    x_t: &Tensor,
    t: usize,
    c_s: Option<&Tensor>,
    w_p: f64,
    stats: Option<&CorpusStats>,
    sigma_g: f64,
    kappa: f64,
) -> Result<Tensor> {
    let uncond = denoise_uncond(cfg, &params.theta0, x_t, t)?;
    if w_p == 1.0 {
        return Ok(uncond);
    }
    let guidance = pcm_guidance_sum(
        cfg,
        predictors,
        targets,
        x_t,
        t,
        c_s,
        uncond.norm(),
        stats,
        sigma_g,
        kappa,
    )?;
    Ok(uncond.scale(w_p).add(&guidance.scale(1.0 - w_p))?)
}

/// Additive cross-modality fusion of the two guided scores.
pub fn fuse_scores(eps_s: &Tensor, eps_p: &Tensor) -> Result<Tensor> {
    Ok(eps_s.add(eps_p)?)
}

#[cfg(test)]
mod tests {
    use crate::numeric::{gaussian, PredictorParams, TransformerParams};

    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            vocab_size: 10,
            dim: 16,
            heads: 4,
            layers: 1,
            seq_len: 6,
            timesteps: 20,
            ffn_mult: 2,
            dropout: 0.0,
        }
    }

    fn denoiser(cfg: &ModelConfig) -> DenoiserParams {
        let theta0 = TransformerParams::init(cfg, 1, false);
        let theta_c = theta0.conditional_copy(cfg, 2);
        DenoiserParams {
            theta0,
            theta_c: Some(theta_c),
            scaffold_encoder: None,
        }
    }

    #[test]
    fn scm_endpoints_are_exact() {
        let cfg = cfg();
        let params = denoiser(&cfg);
        let x = gaussian(&[cfg.seq_len, cfg.dim], 5);
        let c_s = gaussian(&[3, cfg.dim], 6);
        let uncond = denoise_uncond(&cfg, &params.theta0, &x, 4).unwrap();
        let cond = denoise_cond(&cfg, params.theta_c.as_ref().unwrap(), &x, 4, &c_s).unwrap();
        assert!(scm_predict(&cfg, &params, &x, 4, &c_s, 1.0)
            .unwrap()
            .bit_eq(&uncond));
        assert!(scm_predict(&cfg, &params, &x, 4, &c_s, 0.0)
            .unwrap()
            .bit_eq(&cond));
        // midpoint is the elementwise mean
        let mid = scm_predict(&cfg, &params, &x, 4, &c_s, 0.5).unwrap();
        let mean = uncond.scale(0.5).add(&cond.scale(0.5)).unwrap();
        assert!(mid.max_abs_diff(&mean) < 1e-12);
    }

    #[test]
    fn pcm_endpoint_is_exact_and_zero_gradient_at_target() {
        let cfg = cfg();
        let params = denoiser(&cfg);
        let predictor = PropertyPredictor {
            descriptor: DescriptorId::Hbd,
            params: PredictorParams::init(&cfg, 7, DescriptorId::ALL.len(), false, 15),
        };
        let x = gaussian(&[cfg.seq_len, cfg.dim], 5);
        let uncond = denoise_uncond(&cfg, &params.theta0, &x, 4).unwrap();
        let out = pcm_predict(
            &cfg,
            &params,
            &[&predictor],
            &[ResolvedTarget {
                descriptor: DescriptorId::Hbd,
                goal: Goal::Maximize,
                weight: 1.0,
                corpus_std: 1.0,
            }],
            &x,
            4,
            None,
            1.0,
            None,
            1.0,
            2.0,
        )
        .unwrap();
        assert!(out.bit_eq(&uncond));

        // an exactly-met fixed target has a vanishing gradient
        let pred = super::super::predictor::predict_value(&cfg, &predictor, &x, 4, None, &[])
            .unwrap();
        let (grad, _) = pcm_gradient(
            &cfg,
            &predictor,
            &x,
            4,
            None,
            &ResolvedTarget {
                descriptor: DescriptorId::Hbd,
                goal: Goal::Approach(pred),
                weight: 1.0,
                corpus_std: 1.0,
            },
            &[],
            1.0,
            2.0,
        )
        .unwrap();
        assert!(grad.norm() < 1e-12, "gradient norm {}", grad.norm());
    }

    #[test]
    fn direction_flip_negates_the_gradient() {
        let cfg = cfg();
        let predictor = PropertyPredictor {
            descriptor: DescriptorId::Hbd,
            params: PredictorParams::init(&cfg, 7, DescriptorId::ALL.len(), false, 15),
        };
        let x = gaussian(&[cfg.seq_len, cfg.dim], 5);
        let up = ResolvedTarget {
            descriptor: DescriptorId::Hbd,
            goal: Goal::Maximize,
            weight: 1.0,
            corpus_std: 1.0,
        };
        let down = ResolvedTarget {
            goal: Goal::Minimize,
            ..up.clone()
        };
        let (g_up, _) = pcm_gradient(&cfg, &predictor, &x, 4, None, &up, &[], 1.0, 2.0).unwrap();
        let (g_down, _) =
            pcm_gradient(&cfg, &predictor, &x, 4, None, &down, &[], 1.0, 2.0).unwrap();
        assert!(g_up.add(&g_down).unwrap().norm() < 1e-10);
    }

    #[test]
    fn out_of_range_step_is_an_error() {
        let cfg = cfg();
        let predictor = PropertyPredictor {
            descriptor: DescriptorId::Hbd,
            params: PredictorParams::init(&cfg, 7, DescriptorId::ALL.len(), false, 10),
        };
        let x = gaussian(&[cfg.seq_len, cfg.dim], 5);
        let target = ResolvedTarget {
            descriptor: DescriptorId::Hbd,
            goal: Goal::Maximize,
            weight: 1.0,
            corpus_std: 1.0,
        };
        assert!(matches!(
            pcm_gradient(&cfg, &predictor, &x, 15, None, &target, &[], 1.0, 2.0),
            Err(GuidanceError::StepOutOfRange { .. })
        ));
    }

    #[test]
    fn fuse_is_commutative_with_additive_identity() {
        let a = gaussian(&[3, 4], 1);
        let b = gaussian(&[3, 4], 2);
        let ab = fuse_scores(&a, &b).unwrap();
        let ba = fuse_scores(&b, &a).unwrap();
        assert!(ab.bit_eq(&ba));
        let zero = Tensor::zeros(&[3, 4]);
        assert!(fuse_scores(&a, &zero).unwrap().bit_eq(&a));
        assert!(fuse_scores(&a, &gaussian(&[2, 2], 3)).is_err());
    }

    #[test]
    fn two_predictors_compose_additively() {
        let cfg = cfg();
        let params = denoiser(&cfg);
        let p1 = PropertyPredictor {
            descriptor: DescriptorId::Hbd,
            params: PredictorParams::init(&cfg, 7, DescriptorId::ALL.len(), false, 15),
        };
        let p2 = PropertyPredictor {
            descriptor: DescriptorId::CrippenLogP,
            params: PredictorParams::init(&cfg, 8, DescriptorId::ALL.len(), false, 15),
        };
        let t1 = ResolvedTarget {
            descriptor: DescriptorId::Hbd,
            goal: Goal::Maximize,
            weight: 1.0,
            corpus_std: 1.0,
        };
        let t2 = ResolvedTarget {
            descriptor: DescriptorId::CrippenLogP,
            goal: Goal::Maximize,
            weight: 1.0,
            corpus_std: 1.0,
        };
        let x = gaussian(&[cfg.seq_len, cfg.dim], 5);
        let w_p = 0.5;
        let out = pcm_predict(
            &cfg,
            &params,
            &[&p1, &p2],
            std::slice::from_ref(&t1)
                .iter()
                .chain(std::slice::from_ref(&t2))
                .cloned()
                .collect::<Vec<_>>()
                .as_slice(),
            &x,
            4,
            None,
            w_p,
            None,
            1.0,
            2.0,
        )
        .unwrap();
        // independent recomposition: w_p*u + (1-w_p)*(g1 + g2)
        let uncond = denoise_uncond(&cfg, &params.theta0, &x, 4).unwrap();
        let sum = pcm_guidance_sum(
            &cfg,
            &[&p1, &p2],
            &[t1, t2],
            &x,
            4,
            None,
            uncond.norm(),
            None,
            1.0,
            2.0,
        )
        .unwrap();
        let expect = uncond.scale(w_p).add(&sum.scale(1.0 - w_p)).unwrap();
        assert!(out.max_abs_diff(&expect) < 1e-12);
    }
}
