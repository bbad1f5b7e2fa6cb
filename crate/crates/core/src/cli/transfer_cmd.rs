//! `fogfool transfer` - craft adversarial examples on an ensemble of
//! surrogate checkpoints, then score them against held-out target models.
//! Eligibility is judged per target: a sample counts when that target was
//! right on the clean image.

use std::path::PathBuf;

use serde::Serialize;

use crate::classifier::{synth_dataset, Model};
use crate::cli::attack_cmd::{attack_samples, AttackArgs, Method};
use crate::cli::{ensure_dir, parallel_map, select_balanced, DatasetArgs};
use crate::error::Result;
use crate::eval::{asr, feature_deviation_cka, SampleRecord};
use crate::fog::Image;
use crate::io::{load_model, write_csv, write_json};

#[derive(Debug, clap::Args, Serialize)]
pub struct TransferArgs {
    /// Surrogate checkpoint; repeat for the crafting ensemble
    #[arg(long = "surrogate", required = true)]
    pub surrogates: Vec<PathBuf>,
    /// Held-out target checkpoint; repeat to score several
    #[arg(long = "target", required = true)]
    pub targets: Vec<PathBuf>,
    #[arg(long = "out-dir", short = 'o')]
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, value_enum, default_value_t = Method::Fog)]
    pub method: Method,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0 / 255.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.7)]
    pub sigma: f64,
    #[arg(long = "lambda-w", default_value_t = 0.2)]
    pub lambda_w: f64,
    #[arg(long = "lambda-b", default_value_t = 0.6)]
    pub lambda_b: f64,
    #[arg(long, default_value_t = 6)]
    pub octaves: usize,
    #[arg(long = "base-cells", default_value_t = 4)]
    pub base_cells: usize,
    #[arg(long, default_value_t = 8.0 / 255.0)]
    pub epsilon: f64,
    #[arg(long = "baseline-steps", default_value_t = 10)]
    pub baseline_steps: usize,
    #[arg(long = "baseline-step-size", default_value_t = 2.0 / 255.0)]
    pub baseline_step_size: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also compute feature-deviation CKA between surrogates and targets
    #[arg(long)]
    pub cka: bool,
    #[arg(long, default_value_t = 1)]
    #[serde(skip_serializing)]
    pub workers: usize,
}

#[derive(Serialize)]
struct TransferRow {
    target_index: usize,
    sample_index: usize,
    label: usize,
    clean_pred: usize,
    adv_pred: usize,
    flipped: bool,
}

#[derive(Serialize)]
struct PerTarget {
    target: String,
    tasr: f64,
    n_eligible: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    cka: Option<f64>,
}

#[derive(Serialize)]
struct TransferMetrics {
    surrogate_asr: f64,
    per_target: Vec<PerTarget>,
    average_tasr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    average_cka: Option<f64>,
}

impl TransferArgs {
    /// The attack runs on the surrogate ensemble with the same knob set the
    /// attack subcommand exposes.
    fn as_attack_args(&self) -> AttackArgs {
        AttackArgs {
            models: self.surrogates.clone(),
            out_dir: self.out_dir.clone(),
            dataset: DatasetArgs {
                classes: self.dataset.classes,
                per_class: self.dataset.per_class,
                image_size: self.dataset.image_size,
                data_seed: self.dataset.data_seed,
            },
            method: self.method,
            samples: self.samples,
            targeted: false,
            target_offset: 1,
            steps: self.steps,
            alpha: self.alpha,
            mu: self.mu,
            sigma: self.sigma,
            lambda_w: self.lambda_w,
            lambda_b: self.lambda_b,
            octaves: self.octaves,
            base_cells: self.base_cells,
            epsilon: self.epsilon,
            baseline_steps: self.baseline_steps,
            baseline_step_size: self.baseline_step_size,
            seed: self.seed,
            workers: self.workers,
            save_images: false,
        }
    }
}

pub fn run(args: TransferArgs) -> Result<()> {
    ensure_dir(&args.out_dir)?;
    let surrogates: Vec<Model> = args
        .surrogates
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<_>>()?;
    let targets: Vec<Model> = args
        .targets
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<_>>()?;

    let data = synth_dataset(&args.dataset.to_spec()?)?;
    let picked = select_balanced(&data.test, args.samples);
    let outcomes = attack_samples(&args.as_attack_args(), &surrogates, &data.test, &picked)?;

    let surrogate_records: Vec<SampleRecord> = outcomes
        .iter()
        .map(|o| SampleRecord {
            clean_correct: o.row.clean_pred == o.row.label,
            attack_flipped: o.row.adv_pred != o.row.label,
        })
        .collect();
    let surrogate_asr = asr(&surrogate_records)?;

    let clean_images: Vec<Image> = outcomes.iter().map(|o| o.clean.clone()).collect();
    let adv_images: Vec<Image> = outcomes.iter().map(|o| o.adversarial.clone()).collect();

    let mut rows = Vec::new();
    let mut per_target = Vec::new();
    for (t_idx, target) in targets.iter().enumerate() {
        let preds: Vec<(usize, usize)> = parallel_map(outcomes.len(), args.workers, |i| {
            Ok((
                target.predict(&clean_images[i])?,
                target.predict(&adv_images[i])?,
            ))
        })?;
        let mut records = Vec::with_capacity(outcomes.len());
        for (o, &(clean_pred, adv_pred)) in outcomes.iter().zip(&preds) {
            records.push(SampleRecord {
                clean_correct: clean_pred == o.row.label,
                attack_flipped: adv_pred != o.row.label,
            });
            rows.push(TransferRow {
                target_index: t_idx,
                sample_index: o.row.index,
                label: o.row.label,
                clean_pred,
                adv_pred,
                flipped: clean_pred == o.row.label && adv_pred != o.row.label,
            });
        }
        let tasr = asr(&records)?;
        let cka = if args.cka {
            // Average the deviation alignment over crafting surrogates.
            let mut total = 0.0;
            for surrogate in &surrogates {
                total += feature_deviation_cka(surrogate, target, &clean_images, &adv_images)?;
            }
            Some(total / surrogates.len() as f64)
        } else {
            None
        };
        per_target.push(PerTarget {
            target: args.targets[t_idx].display().to_string(),
            tasr,
            n_eligible: records.iter().filter(|r| r.clean_correct).count(),
            cka,
        });
    }

    let average_tasr =
        per_target.iter().map(|t| t.tasr).sum::<f64>() / per_target.len().max(1) as f64;
    let average_cka = if args.cka {
        Some(
            per_target.iter().filter_map(|t| t.cka).sum::<f64>()
                / per_target.len().max(1) as f64,
        )
    } else {
        None
    };
    let metrics = TransferMetrics {
        surrogate_asr,
        per_target,
        average_tasr,
        average_cka,
    };

    write_json(&args.out_dir.join("report.json"), &args, &metrics, &rows)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.target_index.to_string(),
                r.sample_index.to_string(),
                r.label.to_string(),
                r.clean_pred.to_string(),
                r.adv_pred.to_string(),
                r.flipped.to_string(),
            ]
        })
        .collect();
    write_csv(
        &args.out_dir.join("report.csv"),
        &[
            "target_index",
            "sample_index",
            "label",
            "clean_pred",
            "adv_pred",
            "flipped",
        ],
        &csv_rows,
    )?;

    println!(
        "transfer: surrogate ASR {:.4}, average TASR {:.4} over {} targets; reports in {}",
        metrics.surrogate_asr,
        metrics.average_tasr,
        targets.len(),
        args.out_dir.display()
    );
    Ok(())
}
