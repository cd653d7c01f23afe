//! End-to-end command tests: the full pipeline on a small corpus, exit
//! codes, config precedence, and byte-level reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;

fn molforge() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_molforge"));
    // keep runs deterministic and cheap regardless of the host
    cmd.env("MOLFORGE_THREADS", "2");
    cmd
}

fn workspace_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().expect("spawn molforge");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(cmd: &mut Command) -> i32 {
    cmd.output().expect("spawn molforge").status.code().unwrap_or(-1)
}

#[test]
fn pipeline_smoke_on_toy_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = workspace_data("corpus_500.smi");
    let pre = dir.path().join("pre");
    run_ok(molforge().args([
        "pretrain",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        pre.to_str().unwrap(),
        "--steps",
        "12",
        "--batch",
        "4",
        "--dim",
        "32",
        "--layers",
        "1",
        "--timesteps",
        "16",
        "--seed",
        "1",
    ]));
    assert!(pre.join("model.ckpt").exists());
    assert!(pre.join("vocab.txt").exists());
    assert!(pre.join("loss.csv").exists());
    assert!(pre.join("manifest.txt").exists());

    let scm = dir.path().join("scm");
    run_ok(molforge().args([
        "train-scm",
        "--corpus",
        corpus.to_str().unwrap(),
        "--base",
        pre.to_str().unwrap(),
        "--out",
        scm.to_str().unwrap(),
        "--steps",
        "6",
        "--batch",
        "4",
        "--seed",
        "2",
    ]));
    assert!(scm.join("scm.ckpt").exists());

    let stats = dir.path().join("stats.txt");
    run_ok(molforge().args([
        "stats",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        stats.to_str().unwrap(),
    ]));

    let pcm = dir.path().join("pcm");
    run_ok(molforge().args([
        "train-pcm",
        "--corpus",
        corpus.to_str().unwrap(),
        "--base",
        pre.to_str().unwrap(),
        "--out",
        pcm.to_str().unwrap(),
        "--descriptors",
        "HBD,PLogP",
        "--steps",
        "6",
        "--batch",
        "4",
        "--stats",
        stats.to_str().unwrap(),
        "--seed",
        "3",
    ]));
    assert!(pcm.join("pcm_HBD.ckpt").exists());
    assert!(pcm.join("pcm_PLogP.ckpt").exists());

    let samples = dir.path().join("samples.smi");
    run_ok(molforge().args([
        "sample",
        "--base",
        pre.to_str().unwrap(),
        "--scm",
        scm.to_str().unwrap(),
        "--pcm",
        pcm.join("pcm_HBD.ckpt").to_str().unwrap(),
        "--stats",
        stats.to_str().unwrap(),
        "--out",
        samples.to_str().unwrap(),
        "--count",
        "4",
        "--seed",
        "7",
        "--scaffold",
        "c1ccncc1",
        "--targets",
        "HBD:max",
    ]));
    assert!(samples.exists());
    assert!(PathBuf::from(format!("{}.invalid", samples.display())).exists());

    // an untrained model mostly fails to decode; evaluate the corpus itself
    let eval = dir.path().join("eval");
    run_ok(molforge().args([
        "evaluate",
        "--samples",
        corpus.to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        eval.to_str().unwrap(),
        "--stats",
        stats.to_str().unwrap(),
        "--targets",
        "PLogP:max",
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["novelty"], 0.0);
    assert_eq!(report["validity"], 1.0);
    let table = std::fs::read_to_string(eval.join("report.txt")).unwrap();
    assert!(table.contains("Basic"));
    assert!(table.contains("Property"));
}

#[test]
fn identical_seeds_reproduce_artifacts_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = workspace_data("corpus_10.smi");
    let mut model_bytes = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let mut cmd = molforge();
        cmd.env("MOLFORGE_THREADS", "1");
        run_ok(cmd.args([
            "pretrain",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--steps",
            "10",
            "--batch",
            "4",
            "--dim",
            "32",
            "--layers",
            "1",
            "--timesteps",
            "12",
            "--seed",
            "5",
        ]));
        model_bytes.push(std::fs::read(out.join("model.ckpt")).unwrap());
        // sample twice from this model with one seed
        for s in ["s1.smi", "s2.smi"] {
            let path = out.join(s);
            let mut cmd = molforge();
            cmd.env("MOLFORGE_THREADS", "1");
            run_ok(cmd.args([
                "sample",
                "--base",
                out.to_str().unwrap(),
                "--out",
                path.to_str().unwrap(),
                "--count",
                "3",
                "--seed",
                "11",
            ]));
        }
        assert_eq!(
            std::fs::read(out.join("s1.smi")).unwrap(),
            std::fs::read(out.join("s2.smi")).unwrap(),
            "sampling twice with one seed must be byte-identical"
        );
        assert_eq!(
            std::fs::read(format!("{}.invalid", out.join("s1.smi").display())).unwrap(),
            std::fs::read(format!("{}.invalid", out.join("s2.smi").display())).unwrap()
        );
    }
    assert_eq!(
        model_bytes[0], model_bytes[1],
        "pretraining twice with one seed must produce identical checkpoints"
    );
}

#[test]
fn missing_base_checkpoint_exits_4_and_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = workspace_data("corpus_10.smi");
    let out = molforge()
        .args([
            "train-scm",
            "--corpus",
            corpus.to_str().unwrap(),
            "--base",
            dir.path().join("nope").to_str().unwrap(),
            "--out",
            dir.path().join("x").to_str().unwrap(),
            "--seed",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--base"), "stderr was: {stderr}");
}

#[test]
fn config_and_corpus_errors_have_stable_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = workspace_data("corpus_10.smi");
    // missing mandatory seed -> config error
    assert_eq!(
        exit_code(molforge().args([
            "pretrain",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            dir.path().join("x").to_str().unwrap(),
        ])),
        2
    );
    // unreadable corpus -> corpus error
    assert_eq!(
        exit_code(molforge().args([
            "pretrain",
            "--corpus",
            dir.path().join("missing.smi").to_str().unwrap(),
            "--out",
            dir.path().join("x").to_str().unwrap(),
            "--seed",
            "1",
        ])),
        3
    );
    // corpus with an invalid line -> corpus error
    let bad = dir.path().join("bad.smi");
    std::fs::write(&bad, "CCO\nC1CC\n").unwrap();
    assert_eq!(
        exit_code(molforge().args([
            "pretrain",
            "--corpus",
            bad.to_str().unwrap(),
            "--out",
            dir.path().join("x").to_str().unwrap(),
            "--seed",
            "1",
        ])),
        3
    );
    // empty sample file -> corpus error
    let empty = dir.path().join("empty.smi");
    std::fs::write(&empty, "\n").unwrap();
    assert_eq!(
        exit_code(molforge().args([
            "evaluate",
            "--samples",
            empty.to_str().unwrap(),
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            dir.path().join("e").to_str().unwrap(),
        ])),
        3
    );
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = workspace_data("corpus_10.smi");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "corpus = {}\nout = {}\nseed = 1\nsteps = 2\nbatch = 2\ndim = 16\nlayers = 1\ntimesteps = 8\n",
            corpus.display(),
            dir.path().join("from-file").display()
        ),
    )
    .unwrap();
    // flag overrides the out dir from the file
    let out_flag = dir.path().join("from-flag");
    run_ok(molforge().args([
        "pretrain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_flag.to_str().unwrap(),
    ]));
    assert!(out_flag.join("model.ckpt").exists());
    assert!(!dir.path().join("from-file").exists());
    // manifest echoes the effective values
    let manifest = std::fs::read_to_string(out_flag.join("manifest.txt")).unwrap();
    assert!(manifest.contains("from-flag"));
    assert!(manifest.contains("sha256:"));
}
