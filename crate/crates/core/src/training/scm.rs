use rayon::prelude::*;

use crate::analysis::extract_scaffold;
use crate::chem::MoleculeGraph;
use crate::diffusion::{
    embed, encode_scaffold_traced, tower_forward, DropoutCfg, NoiseSchedule, TokenSequence,
    TvBlock, TvTower, Vocabulary,
};
use crate::numeric::{
    ModelConfig, ScaffoldEncoderParams, SeedSplitter, Tape, Tensor, TransformerParams,
};

use super::{
    average_grads, clip_global_norm, collect_named_grads, example_tokens, uniform_step, Adam,
    LossRecord, Result, Shuffler, TrainConfig, TrainingError,
};

pub struct ScmOutput {
    pub theta_c: TransformerParams,
    pub encoder: ScaffoldEncoderParams,
    pub losses: Vec<LossRecord>,
    /// Molecules skipped because they have no ring.
    pub skipped_acyclic: usize,
}

/// Fine-tune the conditional tower copy and the scaffold encoder on
/// (molecule, own-scaffold) pairs. The base tower stays frozen; gradients
/// flow only through the copy and the encoder.
pub fn train_scm(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    lines: &[String],
    mols: &[MoleculeGraph],
    vocab: &Vocabulary,
    schedule: &NoiseSchedule,
    theta0: &TransformerParams,
) -> Result<ScmOutput> {
    train_cfg.validate()?;
    let seeds = SeedSplitter::new(train_cfg.seed);

    // training pairs: every ringed molecule with its own framework
    let mut pairs: Vec<(usize, TokenSequence)> = Vec::new();
    let mut skipped_acyclic = 0usize;
    for (idx, mol) in mols.iter().enumerate() {
        match extract_scaffold(mol) {
            Ok(scaffold) => {
                let tokens = vocab.tokenize_unpadded(&scaffold.smiles, model_cfg.seq_len)?;
                pairs.push((idx, tokens));
            }
            Err(crate::analysis::AnalysisError::AcyclicMolecule) => skipped_acyclic += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if pairs.is_empty() {
        return Err(TrainingError::BadConfig(
            "no ringed molecules to build scaffold pairs from".into(),
        ));
    }

    let mut theta_c = theta0.conditional_copy(model_cfg, seeds.derive("cond-init", 0, 0));
    let mut encoder = ScaffoldEncoderParams::init(model_cfg, seeds.derive("enc-init", 0, 0));
    let mut adam = Adam::new(train_cfg.lr);
    let mut shuffler = Shuffler::new(pairs.len(), seeds);
    let mut losses = Vec::new();
    let total_steps = train_cfg.total_steps(pairs.len());

    for step in 0..total_steps {
        let batch: Vec<usize> = (0..train_cfg.batch_size)
            .map(|_| shuffler.next_index())
            .collect();
        let results: Vec<(Vec<(String, Tensor)>, f64, f64)> = batch
            .par_iter()
            .enumerate()
            .map(|(slot, &pair_idx)| {
                let (mol_idx, scaffold_tokens) = &pairs[pair_idx];
                scm_example(
                    model_cfg,
                    theta0,
                    &theta_c,
                    &encoder,
                    schedule,
                    vocab,
                    train_cfg,
                    &lines[*mol_idx],
                    &mols[*mol_idx],
                    scaffold_tokens,
                    &seeds,
                    step as u64,
                    slot as u64,
                )
            })
            .collect::<Result<_>>()?;
        let mut mse = 0.0;
        let mut ce = 0.0;
        let mut per_example = Vec::with_capacity(results.len());
        for (grads, m, c) in results {
            per_example.push(grads);
            mse += m;
            ce += c;
        }
        mse /= train_cfg.batch_size as f64;
        ce /= train_cfg.batch_size as f64;
        let mut grads = average_grads(per_example);
        clip_global_norm(&mut grads, train_cfg.grad_clip);
        adam.lr = super::lr_at(train_cfg, step, total_steps);
        // one optimizer over both parameter sets, namespaced
        struct Both<'a>(&'a mut TransformerParams, &'a mut ScaffoldEncoderParams);
        impl crate::numeric::ParamVisitor for Both<'_> {
            fn named_tensors(&self) -> Vec<(String, &Tensor)> {
                unreachable!("only visit_mut is used by the optimizer")
            }
            fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor)) {
                self.0.visit_mut(&mut |name, t| f(&format!("cond.{name}"), t));
                self.1.visit_mut(&mut |name, t| f(&format!("enc.{name}"), t));
            }
        }
        adam.step(&mut Both(&mut theta_c, &mut encoder), &grads);
        losses.push(LossRecord {
            step,
            stage: "scm".to_string(),
            term1: mse,
            term2: ce,
            total: mse + ce,
        });
    }
    Ok(ScmOutput {
        theta_c,
        encoder,
        losses,
        skipped_acyclic,
    })
}

/// One conditional reconstruction example: encode the scaffold, denoise the
/// noised embedding under that conditioning, and score against the frozen
/// clean state.
#[allow(clippy::too_many_arguments)]
pub(crate) fn scm_example(
    model_cfg: &ModelConfig,
    theta0: &TransformerParams,
    theta_c: &TransformerParams,
    encoder: &ScaffoldEncoderParams,
    schedule: &NoiseSchedule,
    vocab: &Vocabulary,
    train_cfg: &TrainConfig,
    line: &str,
    mol: &MoleculeGraph,
    scaffold_tokens: &TokenSequence,
    seeds: &SeedSplitter,
    step: u64,
    slot: u64,
) -> Result<(Vec<(String, Tensor)>, f64, f64)> {
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
    let t = uniform_step(seeds, "t", step, slot, schedule.steps());
    let x0_plain = embed(&theta0.embedding, &tokens);
    let x_t_plain = schedule.q_sample(&x0_plain, t, seeds.derive("noise", step, slot))?;

    let tape = Tape::new();
    let frozen = TvTower::lift(&tape, theta0);
    let cond_tower = TvTower::lift(&tape, theta_c);
    let enc_blocks: Vec<TvBlock> = encoder
        .blocks
        .iter()
        .map(|b| TvBlock::lift(&tape, b))
        .collect();
    let c_s = encode_scaffold_traced(&tape, model_cfg, &frozen, &enc_blocks, scaffold_tokens)?;
    let x0 = tape.constant(x0_plain);
    let x_t = tape.constant(x_t_plain);
    let dropout = (train_cfg.dropout > 0.0).then(|| DropoutCfg {
        keep: 1.0 - train_cfg.dropout,
        seed: seeds.derive("dropout", step, slot),
    });
    let x0_hat = tower_forward(&tape, model_cfg, &cond_tower, x_t, t, Some(c_s), dropout)?;
    let mse = tape.mse_mean(x0_hat, x0)?;
    let logits = tape.neg_sqdist_logits(x0_hat, frozen.embedding)?;
    let ce = tape.cross_entropy_mean(logits, tokens.ids())?;
    let loss = tape.add(mse, ce)?;
    let grads = tape.backward(loss)?;
    let mut named = collect_named_grads(&tape, &grads, &cond_tower.named(), "cond");
    let enc_named: Vec<(String, crate::numeric::Tv)> = {
        let mut out = Vec::new();
        for (l, block) in enc_blocks.iter().enumerate() {
            block.named(&format!("enc{l}"), &mut out);
        }
        out
    };
    named.extend(collect_named_grads(&tape, &grads, &enc_named, "enc"));
    Ok((
        named,
        tape.value(mse).item().expect("scalar"),
        tape.value(ce).item().expect("scalar"),
    ))
}

#[cfg(test)]
mod tests {
    use crate::chem::parse_smiles;
    use crate::training::pretrain::pretrain_example;

    use super::*;

    fn toy() -> (
        ModelConfig,
        Vec<String>,
        Vec<MoleculeGraph>,
        Vocabulary,
        NoiseSchedule,
    ) {
        let lines: Vec<String> = ["Cc1ccccc1", "Oc1ccccc1", "CCO", "Cc1ccncc1"]
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
            seq_len: 16,
            timesteps: 8,
            ffn_mult: 2,
            dropout: 0.0,
        };
        (cfg, lines, mols, vocab, NoiseSchedule::linear(8).unwrap())
    }

    #[test]
    fn theta0_is_bit_identical_after_training() {
        let (cfg, lines, mols, vocab, schedule) = toy();
        let theta0 = TransformerParams::init(&cfg, 1, false);
        let before: Vec<Tensor> = crate::numeric::ParamVisitor::named_tensors(&theta0)
            .into_iter()
            .map(|(_, t)| t.clone())
            .collect();
        let train = TrainConfig {
            batch_size: 2,
            max_steps: Some(4),
            seed: 2,
            augment_prob: 0.0,
            dropout: 0.0,
            ..TrainConfig::default()
        };
        let out = train_scm(&cfg, &train, &lines, &mols, &vocab, &schedule, &theta0).unwrap();
        assert_eq!(out.skipped_acyclic, 1);
        let after = crate::numeric::ParamVisitor::named_tensors(&theta0);
        for ((_, t), b) in after.into_iter().zip(before.iter()) {
            assert!(t.bit_eq(b));
        }
    }

    #[test]
    fn conditional_loss_at_init_matches_pretraining_loss() {
        let (cfg, lines, mols, vocab, schedule) = toy();
        let theta0 = TransformerParams::init(&cfg, 1, false);
        let theta_c = theta0.conditional_copy(&cfg, 5);
        let encoder = ScaffoldEncoderParams::init(&cfg, 6);
        let train = TrainConfig {
            augment_prob: 0.0,
            dropout: 0.0,
            ..TrainConfig::default()
        };
        let seeds = SeedSplitter::new(11);
        let scaffold = extract_scaffold(&mols[0]).unwrap();
        let scaffold_tokens = vocab
            .tokenize_unpadded(&scaffold.smiles, cfg.seq_len)
            .unwrap();
        let (_, mse_cond, ce_cond) = scm_example(
            &cfg, &theta0, &theta_c, &encoder, &schedule, &vocab, &train, &lines[0], &mols[0],
            &scaffold_tokens, &seeds, 0, 0,
        )
        .unwrap();
        let (_, mse_pre, ce_pre) = pretrain_example(
            &cfg, &theta0, &schedule, &vocab, &train, &lines[0], &mols[0], &seeds, 0, 0,
        )
        .unwrap();
        assert!(
            (mse_cond - mse_pre).abs() < 1e-9,
            "mse {mse_cond} vs {mse_pre}"
        );
        assert!((ce_cond - ce_pre).abs() < 1e-9, "ce {ce_cond} vs {ce_pre}");
    }

    #[test]
    fn conditional_tower_drifts_after_one_step() {
        let (cfg, lines, mols, vocab, schedule) = toy();
        let theta0 = TransformerParams::init(&cfg, 1, false);
        let train = TrainConfig {
            batch_size: 2,
            max_steps: Some(1),
            seed: 2,
            lr: 1e-3,
            augment_prob: 0.0,
            dropout: 0.0,
            ..TrainConfig::default()
        };
        let out = train_scm(&cfg, &train, &lines, &mols, &vocab, &schedule, &theta0).unwrap();
        let drift: f64 = out
            .theta_c
            .blocks
            .iter()
            .zip(theta0.blocks.iter())
            .map(|(a, b)| a.ffn_w1.sub(&b.ffn_w1).unwrap().norm())
            .sum();
        assert!(drift > 0.0, "conditional copy did not move");
    }
}
