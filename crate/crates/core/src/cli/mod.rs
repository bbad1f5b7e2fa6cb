//! Command-line front end and experiment orchestration.
//!
//! Every subcommand echoes its fully resolved configuration into the report
//! it writes, and derives all randomness from explicit seeds, so any report
//! can be regenerated byte-identically from its own config block. Execution
//! knobs (worker count, output locations) are deliberately left out of the
//! echo: they do not change results.

mod attack_cmd;
mod defend_cmd;
mod eval_cmd;
mod noise_cmd;
mod train_cmd;
mod transfer_cmd;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classifier::LabeledImage;
use crate::error::{Error, Result};
use crate::io::atomic_write;

#[derive(Debug, Parser)]
#[command(
    name = "fogfool",
    version,
    about = "Fog perturbation toolkit: synthesize noise, attack a classifier, defend, evaluate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a fused multi-octave noise field to an 8-bit graymap
    Noise(noise_cmd::NoiseArgs),
    /// Train the built-in classifier on the synthetic texture set
    Train(train_cmd::TrainArgs),
    /// Attack a trained checkpoint (fog optimization or pixel baselines)
    Attack(attack_cmd::AttackArgs),
    /// Re-evaluate attack outputs behind a preprocessing defense
    Defend(defend_cmd::DefendArgs),
    /// Craft on surrogate models, score on held-out target models
    Transfer(transfer_cmd::TransferArgs),
    /// Recompute metrics from prediction files
    Eval(eval_cmd::EvalArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Noise(args) => noise_cmd::run(args),
        Command::Train(args) => train_cmd::run(args),
        Command::Attack(args) => attack_cmd::run(args),
        Command::Defend(args) => defend_cmd::run(args),
        Command::Transfer(args) => transfer_cmd::run(args),
        Command::Eval(args) => eval_cmd::run(args),
    }
}

/// Dataset flags shared by train / attack / transfer.
#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct DatasetArgs {
    /// Number of texture classes (2-4)
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Samples generated per class (80/20 split)
    #[arg(long = "per-class", default_value_t = 100)]
    pub per_class: usize,
    /// Square image side in pixels (divisible by 4)
    #[arg(long = "image-size", default_value_t = 32)]
    pub image_size: usize,
    /// Seed for dataset generation
    #[arg(long = "data-seed", default_value_t = 7)]
    pub data_seed: u64,
}

impl DatasetArgs {
    pub fn to_spec(&self) -> Result<crate::classifier::SyntheticDatasetSpec> {
        let mut spec =
            crate::classifier::SyntheticDatasetSpec::new(self.classes, self.per_class, self.data_seed)?;
        spec.height = self.image_size;
        spec.width = self.image_size;
        spec.validate()?;
        Ok(spec)
    }
}

/// One row of a predictions file; `target` appears only for targeted runs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PredictionRow {
    pub index: usize,
    pub label: usize,
    pub pred: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<usize>,
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(rows)
        .map_err(|e| Error::Format(format!("prediction serialization failed: {e}")))?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{} is not a predictions file: {e}", path.display())))
}

/// Picks up to `limit` test-set indices, round-robin across classes so the
/// attacked subset stays balanced whatever the cutoff.
pub fn select_balanced(samples: &[LabeledImage], limit: Option<usize>) -> Vec<usize> {
    let limit = limit.unwrap_or(samples.len()).min(samples.len());
    let classes: Vec<usize> = {
        let mut seen = Vec::new();
        for s in samples {
            if !seen.contains(&s.label) {
                seen.push(s.label);
            }
        }
        seen
    };
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, s) in samples.iter().enumerate() {
        let slot = classes.iter().position(|&c| c == s.label).unwrap();
        by_class[slot].push(i);
    }
    let mut picked = Vec::with_capacity(limit);
    let mut round = 0;
    while picked.len() < limit {
        let mut advanced = false;
        for class in &by_class {
            if picked.len() == limit {
                break;
            }
            if let Some(&idx) = class.get(round) {
                picked.push(idx);
                advanced = true;
            }
        }
        if !advanced {
            break;
        }
        round += 1;
    }
    picked
}

/// Runs `f(0..n)` across `workers` threads. Each task writes its own slot,
/// so the assembled output is independent of scheduling.
pub fn parallel_map<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = workers.max(1).min(n.max(1));
    if workers == 1 {
        return (0..n).map(&f).collect();
    }
    let slots: Vec<Mutex<Option<Result<T>>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                *slots[i].lock().unwrap() = Some(f(i));
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

pub(crate) fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

/// CSV cell for an optional label.
pub(crate) fn opt_cell(v: Option<usize>) -> String {
    v.map(|t| t.to_string()).unwrap_or_default()
}
