#![allow(dead_code)]

pub mod oracles;
pub mod synth;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use carpipe::config::PipelineConfig;

/// Config whose path keys point at `names` inside `dir`.
pub fn config_in(dir: &Path, names: &[(&str, &str)]) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    for (k, v) in names {
        cfg.set(k, dir.join(v).to_str().unwrap()).unwrap();
    }
    cfg
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_carpipe"))
}

/// Writes the synthetic dataset for `seed` into `dir` plus `carpipe.conf`
/// naming every artifact relative to `dir`, with short training runs.
pub fn pipeline_dir(dir: &Path, seed: u64) {
    let cfg = synth::dataset(seed).write(dir);
    let mut text = format!("# generated\nseed = {seed}\nepochs = 4\nhole_iterations = 40\n");
    for (k, p) in &cfg.paths {
        text += &format!("{k} = {}\n", p.file_name().unwrap().to_str().unwrap());
    }
    for (k, v) in synth::SMALL_MODEL
        .iter()
        .filter(|(k, _)| !["epochs", "hole_iterations"].contains(k))
    {
        text += &format!("{k} = {v}\n");
    }
    std::fs::write(dir.join("carpipe.conf"), text).unwrap();
}

/// Run the binary inside `dir` with its config file.
pub fn carpipe(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(["--config", "carpipe.conf"])
        .args(args)
        .output()
        .unwrap()
}

/// The full pipeline, one subcommand per entry.
pub const PIPELINE: [&[&str]; 8] = [
    &["index"],
    &["stats"],
    &["build-kg"],
    &["train-kg"],
    &["retrieve", "--set", "outlines=all.jsonl"],
    &["train", "--variant", "hi-hf-kg"],
    &["rerank", "--set", "outlines=all.jsonl"],
    &["evaluate", "--stratify", "--report", "report"],
];

pub fn run_pipeline(dir: &Path, seed: u64) -> Result<(), String> {
    pipeline_dir(dir, seed);
    for args in PIPELINE {
        let out = carpipe(dir, args);
        if !out.status.success() {
            return Err(format!(
                "`{}` failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    Ok(())
}
