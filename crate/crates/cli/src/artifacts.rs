use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use molforge_core::analysis::DescriptorId;
use molforge_core::diffusion::{DenoiserParams, NoiseSchedule, Vocabulary};
use molforge_core::guidance::PropertyPredictor;
use molforge_core::numeric::{
    read_checkpoint, write_checkpoint, ModelConfig, ParamVisitor, PredictorParams,
    ScaffoldEncoderParams, TransformerParams,
};

use crate::errors::{CliError, Result};

pub const MODEL_FILE: &str = "model.ckpt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const SCM_FILE: &str = "scm.ckpt";

pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Write the reproducibility manifest: tool version, effective settings, and
/// input hashes. Deliberately timestamp-free so reruns are byte-identical.
pub fn write_manifest(
    dir_or_file: &Path,
    command: &str,
    effective: &[(String, String)],
    inputs: &[(&str, &Path)],
) -> Result<PathBuf> {
    let mut text = format!(
        "tool = molforge {}\ncommand = {command}\n",
        env!("CARGO_PKG_VERSION")
    );
    for (k, v) in effective {
        text.push_str(&format!("{k} = {v}\n"));
    }
    for (name, path) in inputs {
        text.push_str(&format!(
            "input.{name} = {} sha256:{}\n",
            path.display(),
            sha256_hex(path)?
        ));
    }
    let path = if dir_or_file.is_dir() {
        dir_or_file.join("manifest.txt")
    } else {
        PathBuf::from(format!("{}.manifest.txt", dir_or_file.display()))
    };
    std::fs::write(&path, text)?;
    Ok(path)
}

fn tensors_of(params: &dyn ParamVisitor, prefix: &str) -> BTreeMap<String, molforge_core::Tensor> {
    params
        .named_tensors()
        .into_iter()
        .map(|(name, t)| {
            let key = if prefix.is_empty() {
                name
            } else {
                format!("{prefix}.{name}")
            };
            (key, t.clone())
        })
        .collect()
}

pub fn save_pretrain(
    dir: &Path,
    cfg: &ModelConfig,
    theta0: &TransformerParams,
    vocab: &Vocabulary,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let echo = format!("{}stage = pretrain\n", cfg.echo());
    write_checkpoint(&dir.join(MODEL_FILE), &echo, &tensors_of(theta0, ""))?;
    vocab
        .save(&dir.join(VOCAB_FILE))
        .map_err(|e| CliError::Other(e.to_string()))?;
    Ok(())
}

/// Load the base model directory written by `pretrain`.
pub fn load_pretrain(base: &Path) -> Result<(ModelConfig, TransformerParams, Vocabulary, NoiseSchedule)> {
    let model_path = base.join(MODEL_FILE);
    let vocab_path = base.join(VOCAB_FILE);
    for (p, what) in [(&model_path, "model checkpoint"), (&vocab_path, "vocabulary")] {
        if !p.exists() {
            return Err(CliError::DependencyMissing(format!(
                "{what} not found at {} (is --base a pretrain output directory?)",
                p.display()
            )));
        }
    }
    let (echo, tensors) = read_checkpoint(&model_path)?;
    let cfg = ModelConfig::from_echo(&echo)
        .ok_or_else(|| CliError::Other("model checkpoint has no config echo".into()))?;
    let mut theta0 = TransformerParams::init(&cfg, 0, false);
    theta0
        .load_map(&tensors)
        .map_err(|e| CliError::Other(format!("loading base model: {e}")))?;
    let vocab = Vocabulary::load(&vocab_path).map_err(|e| CliError::Other(e.to_string()))?;
    if vocab.size() != cfg.vocab_size {
        return Err(CliError::Other(format!(
            "vocabulary size {} does not match checkpoint ({})",
            vocab.size(),
            cfg.vocab_size
        )));
    }
    let schedule =
        NoiseSchedule::linear(cfg.timesteps).map_err(|e| CliError::Other(e.to_string()))?;
    Ok((cfg, theta0, vocab, schedule))
}

pub fn save_scm(
    dir: &Path,
    cfg: &ModelConfig,
    theta_c: &TransformerParams,
    encoder: &ScaffoldEncoderParams,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut tensors = tensors_of(theta_c, "cond");
    tensors.extend(tensors_of(encoder, "enc"));
    let echo = format!("{}stage = scm\n", cfg.echo());
    write_checkpoint(&dir.join(SCM_FILE), &echo, &tensors)?;
    Ok(())
}

/// Load the conditional tower and scaffold encoder from an `scm.ckpt`
/// (or a directory containing one).
pub fn load_scm(
    path: &Path,
    cfg: &ModelConfig,
) -> Result<(TransformerParams, ScaffoldEncoderParams)> {
    let path = if path.is_dir() { path.join(SCM_FILE) } else { path.to_path_buf() };
    if !path.exists() {
        return Err(CliError::DependencyMissing(format!(
            "structure checkpoint not found at {} (pass --scm)",
            path.display()
        )));
    }
    let (echo, tensors) = read_checkpoint(&path)?;
    let stored = ModelConfig::from_echo(&echo)
        .ok_or_else(|| CliError::Other("structure checkpoint has no config echo".into()))?;
    if stored != *cfg {
        return Err(CliError::Config(
            "structure checkpoint was trained with a different model config".into(),
        ));
    }
    let mut cond_map = BTreeMap::new();
    let mut enc_map = BTreeMap::new();
    for (key, tensor) in tensors {
        if let Some(rest) = key.strip_prefix("cond.") {
            cond_map.insert(rest.to_string(), tensor);
        } else if let Some(rest) = key.strip_prefix("enc.") {
            enc_map.insert(rest.to_string(), tensor);
        }
    }
    let mut theta_c = TransformerParams::init(cfg, 0, true);
    theta_c
        .load_map(&cond_map)
        .map_err(|e| CliError::Other(format!("loading conditional tower: {e}")))?;
    let mut encoder = ScaffoldEncoderParams::init(cfg, 0);
    encoder
        .load_map(&enc_map)
        .map_err(|e| CliError::Other(format!("loading scaffold encoder: {e}")))?;
    Ok((theta_c, encoder))
}

pub fn pcm_file_name(id: DescriptorId) -> String {
    format!("pcm_{id}.ckpt")
}

pub fn save_pcm(
    dir: &Path,
    cfg: &ModelConfig,
    id: DescriptorId,
    params: &PredictorParams,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let echo = format!(
        "{}stage = pcm\ndescriptor = {id}\nt_max = {}\n",
        cfg.echo(),
        params.t_max
    );
    let path = dir.join(pcm_file_name(id));
    write_checkpoint(&path, &echo, &tensors_of(params, ""))?;
    Ok(path)
}

pub fn load_pcm(path: &Path, cfg: &ModelConfig) -> Result<PropertyPredictor> {
    if !path.exists() {
        return Err(CliError::DependencyMissing(format!(
            "predictor checkpoint not found at {} (pass --pcm)",
            path.display()
        )));
    }
    let (echo, tensors) = read_checkpoint(path)?;
    let mut descriptor = None;
    let mut t_max = None;
    for line in echo.lines() {
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "descriptor" => descriptor = v.trim().parse::<DescriptorId>().ok(),
                "t_max" => t_max = v.trim().parse::<usize>().ok(),
                _ => {}
            }
        }
    }
    let descriptor = descriptor
        .ok_or_else(|| CliError::Other("predictor checkpoint lacks a descriptor".into()))?;
    let t_max =
        t_max.ok_or_else(|| CliError::Other("predictor checkpoint lacks t_max".into()))?;
    let with_cross = tensors.keys().any(|k| k.contains(".cross."));
    let mut params = PredictorParams::init(cfg, 0, DescriptorId::ALL.len(), with_cross, t_max);
    params
        .load_map(&tensors)
        .map_err(|e| CliError::Other(format!("loading predictor: {e}")))?;
    Ok(PropertyPredictor { descriptor, params })
}

/// Assemble the full sampling bundle from checkpoint paths.
pub fn load_sampler_models(
    base: &Path,
    scm: Option<&Path>,
    pcm: &[PathBuf],
    stats: Option<&Path>,
) -> Result<molforge_core::guidance::SamplerModels> {
    let (cfg, theta0, vocab, schedule) = load_pretrain(base)?;
    let mut denoiser = DenoiserParams::unconditional(theta0);
    if let Some(scm_path) = scm {
        let (theta_c, encoder) = load_scm(scm_path, &cfg)?;
        denoiser.theta_c = Some(theta_c);
        denoiser.scaffold_encoder = Some(encoder);
    }
    let mut predictors = Vec::new();
    for path in pcm {
        predictors.push(load_pcm(path, &cfg)?);
    }
    let stats = match stats {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(
                molforge_core::analysis::CorpusStats::from_text(&text)
                    .map_err(|e| CliError::Other(e.to_string()))?,
            )
        }
        None => None,
    };
    Ok(molforge_core::guidance::SamplerModels {
        cfg,
        vocab,
        schedule,
        denoiser,
        predictors,
        stats,
    })
}
