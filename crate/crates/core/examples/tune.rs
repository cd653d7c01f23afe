//! Scratch harness for desk-scale fixture tuning (not part of the pipeline).

use molforge_core::analysis::{
    descriptor, extract_scaffold, has_substructure, DescriptorId, PropertyTarget,
};
use molforge_core::chem::corpus::{corpus_lines, parse_corpus};
use molforge_core::chem::{check_valence, parse_smiles};
use molforge_core::diffusion::{DenoiserParams, NoiseSchedule, Vocabulary};
use molforge_core::guidance::{sample, GuidanceConfig, PropertyPredictor, SamplerModels};
use molforge_core::numeric::{ModelConfig, SeedSplitter};
use molforge_core::training::{train_pcm, train_pretrain, train_scm, TrainConfig};
use rayon::prelude::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("a");
    match which {
        "a" => fixture_a(),
        "b" => fixture_b(),
        _ => eprintln!("usage: tune a|b"),
    }
}

fn load(path: &str) -> (Vec<String>, Vec<molforge_core::MoleculeGraph>) {
    let text = std::fs::read_to_string(path).unwrap();
    let lines = corpus_lines(&text);
    let mols = parse_corpus(&lines).unwrap();
    (lines.into_iter().map(|(_, s)| s).collect(), mols)
}

fn sample_batch(
    models: &SamplerModels,
    cfg: &GuidanceConfig,
    n: usize,
    seed: u64,
) -> Vec<(String, bool)> {
    let split = SeedSplitter::new(seed);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let r = sample(models, cfg, split.derive("chain", i as u64, 0)).unwrap();
            (r.smiles, r.decode_ok)
        })
        .collect()
}

fn stats_line(tag: &str, samples: &[(String, bool)]) -> Vec<String> {
    let decoded: Vec<&String> = samples.iter().filter(|(_, ok)| *ok).map(|(s, _)| s).collect();
    let valid: Vec<String> = decoded
        .iter()
        .filter(|s| parse_smiles(s).map(|m| check_valence(&m).valid).unwrap_or(false))
        .map(|s| s.to_string())
        .collect();
    println!(
        "{tag}: {} samples, {} decoded, {} valid ({:.1}%)",
        samples.len(),
        decoded.len(),
        valid.len(),
        100.0 * valid.len() as f64 / samples.len() as f64
    );
    valid
}

fn hbd_mean(set: &[String]) -> f64 {
    let vals: Vec<f64> = set
        .iter()
        .map(|s| descriptor(&parse_smiles(s).unwrap(), DescriptorId::Hbd).unwrap())
        .collect();
    vals.iter().sum::<f64>() / vals.len().max(1) as f64
}

fn fixture_a() {
    let t0 = std::time::Instant::now();
    let (lines, mols) = load("data/corpus_10.smi");
    let vocab = Vocabulary::from_corpus(&lines, 8);
    let cfg = ModelConfig {
        vocab_size: vocab.size(),
        dim: 64,
        heads: 4,
        layers: 2,
        seq_len: 24,
        timesteps: 200,
        ffn_mult: 4,
        dropout: 0.0,
    };
    let schedule = NoiseSchedule::linear(200).unwrap();
    let train = TrainConfig {
        augment_prob: 0.8,
        batch_size: 8,
        lr: 1e-3,
        max_steps: Some(2000),
        seed: 41,
        dropout: 0.0,
        ..TrainConfig::default()
    };
    let pre = train_pretrain(&cfg, &train, &lines, &mols, &vocab, &schedule).unwrap();
    println!(
        "A pretrain: {:.1}s, loss {:.4} -> {:.4}",
        t0.elapsed().as_secs_f64(),
        pre.losses.first().unwrap().total,
        pre.losses.last().unwrap().total
    );
    let models = SamplerModels {
        cfg,
        vocab,
        schedule,
        denoiser: DenoiserParams::unconditional(pre.theta0),
        predictors: Vec::new(),
        stats: None,
    };
    let t1 = std::time::Instant::now();
    let base = sample_batch(&models, &GuidanceConfig::unconditional(150), 100, 1000);
    let valid = stats_line("A unconditional", &base);
    println!(
        "A sampling: {:.2}s/chain; unguided HBD mean {:.3}; total {:.1}s",
        t1.elapsed().as_secs_f64() / 100.0,
        hbd_mean(&valid),
        t0.elapsed().as_secs_f64()
    );
    for s in valid.iter().take(8) {
        println!("  sample: {s}");
    }
}

fn fixture_b() {
    let t0 = std::time::Instant::now();
    let (lines, mols) = load("data/corpus_500.smi");
    let vocab = Vocabulary::from_corpus(&lines, 8);
    let cfg = ModelConfig {
        vocab_size: vocab.size(),
        dim: 32,
        heads: 4,
        layers: 1,
        seq_len: 40,
        timesteps: 100,
        ffn_mult: 4,
        dropout: 0.0,
    };
    let schedule = NoiseSchedule::linear(100).unwrap();
    let train = TrainConfig {
        augment_prob: 0.8,
        batch_size: 8,
        lr: 2e-3,
        max_steps: Some(3500),
        seed: 51,
        dropout: 0.0,
        ..TrainConfig::default()
    };
    let pre = train_pretrain(&cfg, &train, &lines, &mols, &vocab, &schedule).unwrap();
    println!(
        "B pretrain: {:.1}s, loss {:.4} -> {:.4}",
        t0.elapsed().as_secs_f64(),
        pre.losses.first().unwrap().total,
        pre.losses.last().unwrap().total
    );
    let t_scm = std::time::Instant::now();
    let scm = train_scm(
        &cfg,
        &TrainConfig {
            augment_prob: 0.8,
            batch_size: 4,
            lr: 1e-3,
            epochs: 5,
            max_steps: None,
            seed: 52,
            dropout: 0.0,
            ..TrainConfig::default()
        },
        &lines,
        &mols,
        &vocab,
        &schedule,
        &pre.theta0,
    )
    .unwrap();
    println!(
        "B scm: {:.1}s ({} steps)",
        t_scm.elapsed().as_secs_f64(),
        scm.losses.len()
    );
    let t_pcm = std::time::Instant::now();
    let pcm = train_pcm(
        &cfg,
        &TrainConfig {
            batch_size: 8,
            lr: 2e-3,
            max_steps: Some(800),
            seed: 53,
            augment_prob: 0.8,
            dropout: 0.0,
            ..TrainConfig::default()
        },
        &lines,
        &mols,
        &vocab,
        &schedule,
        &pre.theta0,
        &[DescriptorId::Hbd],
        75,
        None,
    )
    .unwrap();
    println!("B pcm: {:.1}s", t_pcm.elapsed().as_secs_f64());
    let models = SamplerModels {
        cfg,
        vocab,
        schedule,
        denoiser: DenoiserParams {
            theta0: pre.theta0,
            theta_c: Some(scm.theta_c),
            scaffold_encoder: Some(scm.encoder),
        },
        predictors: pcm
            .predictors
            .into_iter()
            .map(|(descriptor, params)| PropertyPredictor { descriptor, params })
            .collect(),
        stats: None,
    };
    let t1 = std::time::Instant::now();
    let base = sample_batch(&models, &GuidanceConfig::unconditional(75), 200, 1000);
    let valid = stats_line("B unconditional", &base);
    println!(
        "B unguided: {:.2}s/chain, HBD mean {:.3}",
        t1.elapsed().as_secs_f64() / 200.0,
        hbd_mean(&valid)
    );
    for s in valid.iter().take(6) {
        println!("  sample: {s}");
    }
    let scaffold = extract_scaffold(&parse_smiles("c1ccncc1").unwrap()).unwrap();
    let existence = |set: &[String]| -> f64 {
        set.iter()
            .filter(|s| has_substructure(&parse_smiles(s).unwrap(), &scaffold))
            .count() as f64
            / set.len().max(1) as f64
    };
    println!("B unguided pyridine existence: {:.3}", existence(&valid));

    for ws in [0.5, 0.2, 0.0] {
        let mut g = GuidanceConfig::balanced(100);
        g.w_s = ws;
        g.w_p = 1.0 - ws;
        g.t2_boundary = 75;
        g.scaffold = Some("c1ccncc1".to_string());
        let guided = sample_batch(&models, &g, 200, 4000 + (ws * 10.0) as u64);
        let gv = stats_line(&format!("B scm ws={ws}"), &guided);
        println!("  existence: {:.3}", existence(&gv));
    }
    for wp in [0.8, 0.5] {
        let mut g = GuidanceConfig::balanced(100);
        g.w_s = 1.0 - wp;
        g.w_p = wp;
        g.t2_boundary = 75;
        g.targets = vec![PropertyTarget::maximize(DescriptorId::Hbd)];
        let up = sample_batch(&models, &g, 200, 6000 + (wp * 10.0) as u64);
        let upv = stats_line(&format!("B hbd+ wp={wp}"), &up);
        println!("  HBD mean: {:.3}", hbd_mean(&upv));
        g.targets = vec![PropertyTarget::minimize(DescriptorId::Hbd)];
        let down = sample_batch(&models, &g, 200, 7000 + (wp * 10.0) as u64);
        let downv = stats_line(&format!("B hbd- wp={wp}"), &down);
        println!("  HBD mean: {:.3}", hbd_mean(&downv));
    }
    // joint control
    let mut g = GuidanceConfig::balanced(100);
    g.t2_boundary = 75;
    g.scaffold = Some("c1ccncc1".to_string());
    g.targets = vec![PropertyTarget::maximize(DescriptorId::Hbd)];
    let joint = sample_batch(&models, &g, 200, 8000);
    let jv = stats_line("B joint ws=wp=0.5", &joint);
    println!(
        "  existence: {:.3}, HBD mean: {:.3}",
        existence(&jv),
        hbd_mean(&jv)
    );
    println!("B total {:.1}s", t0.elapsed().as_secs_f64());
}
