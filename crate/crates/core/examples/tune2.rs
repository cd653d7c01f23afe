//! Quick sweep for the memorization fixture.

use molforge_core::chem::corpus::{corpus_lines, parse_corpus};
use molforge_core::chem::{check_valence, parse_smiles};
use molforge_core::diffusion::{DenoiserParams, NoiseSchedule, Vocabulary};
use molforge_core::guidance::{sample_unconditional, SamplerModels};
use molforge_core::numeric::{ModelConfig, SeedSplitter};
use molforge_core::training::{train_pretrain, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lr: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let batch: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(16);
    let augment: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let steps: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(2000);

    let text = std::fs::read_to_string("data/corpus_10.smi").unwrap();
    let lines_n = corpus_lines(&text);
    let mols = parse_corpus(&lines_n).unwrap();
    let lines: Vec<String> = lines_n.into_iter().map(|(_, s)| s).collect();
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
    let t0 = std::time::Instant::now();
    let train = TrainConfig {
        augment_prob: augment,
        batch_size: batch,
        lr,
        max_steps: Some(steps),
        seed: 41,
        dropout: 0.0,
        lr_ramp: true,
        ..TrainConfig::default()
    };
    let pre = train_pretrain(&cfg, &train, &lines, &mols, &vocab, &schedule).unwrap();
    let losses = &pre.losses;
    println!(
        "lr={lr} batch={batch} augment={augment} steps={steps}: {:.0}s, loss {:.3} -> {:.3} (mse {:.4} ce {:.4})",
        t0.elapsed().as_secs_f64(),
        losses.first().unwrap().total,
        losses.last().unwrap().total,
        losses.last().unwrap().term1,
        losses.last().unwrap().term2,
    );
    let models = SamplerModels {
        cfg,
        vocab,
        schedule,
        denoiser: DenoiserParams::unconditional(pre.theta0),
        predictors: Vec::new(),
        stats: None,
    };
    let split = SeedSplitter::new(999);
    let (mut valid, mut no_eos, mut bad_parse, mut bad_valence) = (0, 0, 0, 0);
    let mut examples: Vec<String> = Vec::new();
    let n = 80;
    for i in 0..n {
        let r = sample_unconditional(&models, split.derive("c", i, 0)).unwrap();
        if !r.decode_ok {
            no_eos += 1;
            if examples.len() < 8 { examples.push(format!("no-eos: {}", r.smiles)); }
            continue;
        }
        match parse_smiles(&r.smiles) {
            Err(_) => {
                bad_parse += 1;
                if examples.len() < 8 { examples.push(format!("parse : {}", r.smiles)); }
            }
            Ok(m) if !check_valence(&m).valid => {
                bad_valence += 1;
                if examples.len() < 8 { examples.push(format!("valenc: {}", r.smiles)); }
            }
            Ok(_) => valid += 1,
        }
    }
    println!("valid {valid} / no_eos {no_eos} / bad_parse {bad_parse} / bad_valence {bad_valence} of {n}");
    for e in examples { println!("  {e}"); }
}
