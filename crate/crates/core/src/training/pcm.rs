use rayon::prelude::*;

use crate::analysis::{descriptor_with_stats, CorpusStats, DescriptorId};
use crate::chem::MoleculeGraph;
use crate::diffusion::{embed, NoiseSchedule, Vocabulary};
use crate::guidance::{predictor_forward_traced, prop_row, TvPredictor};
use crate::numeric::{
    ModelConfig, PredictorParams, SeedSplitter, Tape, Tensor, TransformerParams,
};

use super::{
    average_grads, clip_global_norm, collect_named_grads, example_tokens, uniform_step, Adam,
    LossRecord, Result, Shuffler, TrainConfig, TrainingError,
};

pub struct PcmOutput {
    pub predictors: Vec<(DescriptorId, PredictorParams)>,
    pub losses: Vec<LossRecord>,
}

/// Train one regression predictor per requested descriptor on noisy
/// embeddings, with timesteps drawn from `[1, t_max]` only. When several
/// descriptors are trained together, each predictor conditions on the true
/// values of the others.
#[allow(clippy::too_many_arguments)]
pub fn train_pcm(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    lines: &[String],
    mols: &[MoleculeGraph],
    vocab: &Vocabulary,
    schedule: &NoiseSchedule,
    theta0: &TransformerParams,
    descriptors: &[DescriptorId],
    t_max: usize,
    stats: Option<&CorpusStats>,
) -> Result<PcmOutput> {
    train_cfg.validate()?;
    if descriptors.is_empty() {
        return Err(TrainingError::BadConfig("no descriptors requested".into()));
    }
    let limit = schedule.steps() * 3 / 4;
    if t_max == 0 || t_max > limit {
        return Err(TrainingError::BadConfig(format!(
            "t_max {t_max} outside [1, {limit}] (three quarters of the chain)"
        )));
    }
    // ground-truth labels, computed once per (molecule, descriptor)
    let mut labels: Vec<Vec<f64>> = Vec::with_capacity(descriptors.len());
    for &id in descriptors {
        let column: Vec<f64> = mols
            .iter()
            .map(|m| match stats {
                Some(s) => descriptor_with_stats(m, id, s),
                None => crate::analysis::descriptor(m, id),
            })
            .collect::<std::result::Result<_, _>>()?;
        labels.push(column);
    }

    let seeds = SeedSplitter::new(train_cfg.seed);
    let mut predictors = Vec::with_capacity(descriptors.len());
    let mut losses = Vec::new();
    for (d_idx, &id) in descriptors.iter().enumerate() {
        let mut params = PredictorParams::init(
            model_cfg,
            seeds.derive("pcm-init", d_idx as u64, 0),
            DescriptorId::ALL.len(),
            false,
            t_max,
        );
        let mut adam = Adam::new(train_cfg.lr);
        let mut shuffler = Shuffler::new(
            mols.len(),
            SeedSplitter::new(seeds.derive("pcm-shuffle", d_idx as u64, 0)),
        );
        let total_steps = train_cfg.total_steps(mols.len());
        for step in 0..total_steps {
            let batch: Vec<usize> = (0..train_cfg.batch_size)
                .map(|_| shuffler.next_index())
                .collect();
            let results: Vec<(Vec<(String, Tensor)>, f64)> = batch
                .par_iter()
                .enumerate()
                .map(|(slot, &idx)| {
                    pcm_example(
                        model_cfg,
                        theta0,
                        &params,
                        schedule,
                        vocab,
                        train_cfg,
                        &lines[idx],
                        &mols[idx],
                        labels[d_idx][idx],
                        &conditioning(descriptors, d_idx, &labels, idx, stats),
                        t_max,
                        &seeds,
                        (d_idx * total_steps + step) as u64,
                        slot as u64,
                    )
                })
                .collect::<Result<_>>()?;
            let mut per_example = Vec::with_capacity(results.len());
            let mut mse = 0.0;
            for (grads, m) in results {
                per_example.push(grads);
                mse += m;
            }
            mse /= train_cfg.batch_size as f64;
            let mut grads = average_grads(per_example);
            clip_global_norm(&mut grads, train_cfg.grad_clip);
            adam.lr = super::lr_at(train_cfg, step, total_steps);
            adam.step(&mut params, &grads);
            losses.push(LossRecord {
                step,
                stage: format!("pcm:{id}"),
                term1: mse,
                term2: 0.0,
                total: mse,
            });
        }
        predictors.push((id, params));
    }
    Ok(PcmOutput { predictors, losses })
}

/// Conditioning rows for the other descriptors: true values, z-scored when
/// statistics are available.
fn conditioning(
    descriptors: &[DescriptorId],
    skip: usize,
    labels: &[Vec<f64>],
    mol_idx: usize,
    stats: Option<&CorpusStats>,
) -> Vec<(usize, f64)> {
    descriptors
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(j, &other)| {
            let raw = labels[j][mol_idx];
            let value = stats
                .and_then(|s| s.entry(other))
                .map(|e| (raw - e.mean) / e.std)
                .unwrap_or(raw);
            (prop_row(other), value)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn pcm_example(
    model_cfg: &ModelConfig,
    theta0: &TransformerParams,
    params: &PredictorParams,
    schedule: &NoiseSchedule,
    vocab: &Vocabulary,
    train_cfg: &TrainConfig,
    line: &str,
    mol: &MoleculeGraph,
    label: f64,
    others: &[(usize, f64)],
    t_max: usize,
    seeds: &SeedSplitter,
    step: u64,
    slot: u64,
) -> Result<(Vec<(String, Tensor)>, f64)> {
    let tokens = example_tokens(
        line,
        mol,
        vocab,
        model_cfg.seq_len,
        train_cfg.augment_prob,
        seeds,
        step,
        slot,
    )?;
    let t = uniform_step(seeds, "pcm-t", step, slot, t_max);
    let x0 = embed(&theta0.embedding, &tokens);
    let x_t = schedule.q_sample(&x0, t, seeds.derive("pcm-noise", step, slot))?;
    let tape = Tape::new();
    let p = TvPredictor::lift(&tape, params);
    let x = tape.constant(x_t);
    let pred = predictor_forward_traced(&tape, model_cfg, &p, x, t, None, others)
        .map_err(crate::guidance::GuidanceError::from)
        .map_err(|e| TrainingError::BadConfig(e.to_string()))?;
    let target = tape.constant(Tensor::new(vec![1, 1], vec![label]).expect("scalar"));
    let mse = tape.mse_mean(pred, target)?;
    let grads = tape.backward(mse)?;
    let named = collect_named_grads(&tape, &grads, &p.named(), "");
    Ok((named, tape.value(mse).item().expect("scalar")))
}

#[cfg(test)]
mod tests {
    use crate::chem::parse_smiles;

    use super::*;

    #[test]
    fn predictor_beats_constant_baseline_at_low_noise() {
        let lines: Vec<String> = ["CCO", "CCN", "CCC", "OCCO", "CC(C)O", "CCCC", "NCCN", "CCCO"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mols: Vec<MoleculeGraph> = lines.iter().map(|l| parse_smiles(l).unwrap()).collect();
        let vocab = Vocabulary::from_corpus(&lines, 4);
        let cfg = ModelConfig {
            vocab_size: vocab.size(),
            dim: 16,
            heads: 4,
            layers: 1,
            seq_len: 12,
            timesteps: 16,
            ffn_mult: 2,
            dropout: 0.0,
        };
        let schedule = NoiseSchedule::linear(16).unwrap();
        let theta0 = TransformerParams::init(&cfg, 1, false);
        let train = TrainConfig {
            batch_size: 8,
            lr: 3e-3,
            max_steps: Some(150),
            seed: 5,
            augment_prob: 0.0,
            dropout: 0.0,
            ..TrainConfig::default()
        };
        let out = train_pcm(
            &cfg,
            &train,
            &lines,
            &mols,
            &vocab,
            &schedule,
            &theta0,
            &[DescriptorId::Hbd],
            12,
            None,
        )
        .unwrap();
        let (id, params) = &out.predictors[0];
        assert_eq!(*id, DescriptorId::Hbd);
        let predictor = crate::guidance::PropertyPredictor {
            descriptor: *id,
            params: params.clone(),
        };
        // compare squared error against the constant-mean baseline at t = 1
        let hbd: Vec<f64> = mols
            .iter()
            .map(|m| crate::analysis::descriptor(m, DescriptorId::Hbd).unwrap())
            .collect();
        let mean = hbd.iter().sum::<f64>() / hbd.len() as f64;
        let mut model_se = 0.0;
        let mut baseline_se = 0.0;
        for (i, line) in lines.iter().enumerate() {
            let tokens = vocab.tokenize(line, cfg.seq_len).unwrap();
            let x_t = super::super::noise_emb(&theta0.embedding, &schedule, &tokens, 1, 77 + i as u64)
                .unwrap();
            let pred = crate::guidance::predict_value(
                &cfg, &predictor, &x_t, 1, None, &[],
            )
            .unwrap();
            model_se += (pred - hbd[i]).powi(2);
            baseline_se += (mean - hbd[i]).powi(2);
        }
        assert!(
            model_se < baseline_se,
            "predictor {model_se} not better than baseline {baseline_se}"
        );
    }
}
