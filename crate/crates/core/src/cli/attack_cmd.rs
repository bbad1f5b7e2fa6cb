//! `fogfool attack` - run the fog attack (or a pixel baseline) over the
//! synthetic test split and report per-sample outcomes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{
    baseline_attack, run_attack, AttackConfig, AttackMode, BaselineKind,
};
use crate::classifier::{cross_entropy, synth_dataset, Model};
use crate::cli::{
    ensure_dir, opt_cell, parallel_map, select_balanced, write_predictions, DatasetArgs,
    PredictionRow,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, PredictionRecord};
use crate::fog::{FogParams, Image};
use crate::io::{load_model, write_csv, write_json, write_p6};
use crate::noise::FbmSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fog,
    Fgsm,
    Pgd,
    Mifgsm,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct AttackArgs {
    /// Model checkpoint; repeat the flag for an ensemble (fog method only)
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Output directory for reports (and images with --save-images)
    #[arg(long = "out-dir", short = 'o')]
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, value_enum, default_value_t = Method::Fog)]
    pub method: Method,
    /// How many test samples to attack (default: the whole test split)
    #[arg(long)]
    pub samples: Option<usize>,
    /// Aim each sample at (label + target-offset) mod classes
    #[arg(long)]
    pub targeted: bool,
    #[arg(long = "target-offset", default_value_t = 1)]
    pub target_offset: usize,
    /// Optimization iterations T
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Sign-step size
    #[arg(long, default_value_t = 1.0 / 255.0)]
    pub alpha: f64,
    /// Momentum decay
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Per-iteration mask smoothing sigma
    #[arg(long, default_value_t = 0.7)]
    pub sigma: f64,
    /// Fog whiteness
    #[arg(long = "lambda-w", default_value_t = 0.2)]
    pub lambda_w: f64,
    /// Fog blending strength
    #[arg(long = "lambda-b", default_value_t = 0.6)]
    pub lambda_b: f64,
    /// Octaves in the initial fog field
    #[arg(long, default_value_t = 6)]
    pub octaves: usize,
    #[arg(long = "base-cells", default_value_t = 4)]
    pub base_cells: usize,
    /// L-inf budget for pixel baselines
    #[arg(long, default_value_t = 8.0 / 255.0)]
    pub epsilon: f64,
    #[arg(long = "baseline-steps", default_value_t = 10)]
    pub baseline_steps: usize,
    #[arg(long = "baseline-step-size", default_value_t = 2.0 / 255.0)]
    pub baseline_step_size: f64,
    /// Base seed; sample i uses seed XOR i
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    #[serde(skip_serializing)]
    pub workers: usize,
    /// Write clean/adversarial P6 images under <out-dir>/images/
    #[arg(long = "save-images")]
    #[serde(skip_serializing)]
    pub save_images: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub(crate) struct AttackRow {
    pub index: usize,
    pub label: usize,
    pub clean_pred: usize,
    pub adv_pred: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<usize>,
    pub success: bool,
    pub final_loss: f64,
}

#[derive(Serialize)]
struct AttackMetrics {
    clean_accuracy: f64,
    mean_final_loss: f64,
    #[serde(flatten)]
    eval: EvalReport,
}

pub(crate) struct SampleOutcome {
    pub row: AttackRow,
    pub clean: Image,
    pub adversarial: Image,
}

pub fn run(args: AttackArgs) -> Result<()> {
    ensure_dir(&args.out_dir)?;
    let models: Vec<Model> = args
        .models
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<_>>()?;
    let data = synth_dataset(&args.dataset.to_spec()?)?;
    let picked = select_balanced(&data.test, args.samples);
    let outcomes = attack_samples(&args, &models, &data.test, &picked)?;

    if args.save_images {
        let img_dir = args.out_dir.join("images");
        ensure_dir(&img_dir)?;
        for o in &outcomes {
            write_p6(&o.clean, &img_dir.join(format!("clean_{:04}.ppm", o.row.index)))?;
            write_p6(
                &o.adversarial,
                &img_dir.join(format!("adv_{:04}.ppm", o.row.index)),
            )?;
        }
    }

    let rows: Vec<AttackRow> = outcomes.iter().map(|o| o.row).collect();
    write_attack_reports(&args.out_dir, &args, &rows, args.dataset.classes, args.targeted)?;
    Ok(())
}

/// Runs the configured method over the picked indices. Shared with the
/// transfer subcommand.
pub(crate) fn attack_samples(
    args: &AttackArgs,
    models: &[Model],
    test: &[crate::classifier::LabeledImage],
    picked: &[usize],
) -> Result<Vec<SampleOutcome>> {
    if args.targeted {
        if args.method != Method::Fog {
            return Err(Error::invalid(
                "pixel baselines are untargeted; use --method fog for targeted runs",
            ));
        }
        if args.target_offset.is_multiple_of(args.dataset.classes) {
            return Err(Error::invalid(
                "target offset must not be a multiple of the class count",
            ));
        }
    }
    if args.method != Method::Fog && models.len() != 1 {
        return Err(Error::invalid(
            "pixel baselines take exactly one --model",
        ));
    }

    let fog = FogParams::new(args.lambda_w, args.lambda_b, args.sigma)?;
    let fbm = FbmSpec::new(args.octaves, args.base_cells)?;

    parallel_map(picked.len(), args.workers, |slot| {
        let index = picked[slot];
        let sample = &test[index];
        let target = if args.targeted {
            Some((sample.label + args.target_offset) % args.dataset.classes)
        } else {
            None
        };
        match args.method {
            Method::Fog => {
                let cfg = AttackConfig {
                    iterations: args.steps,
                    step_size: args.alpha,
                    momentum_decay: args.mu,
                    fog,
                    fbm,
                    mode: match target {
                        Some(t) => AttackMode::Targeted(t),
                        None => AttackMode::Untargeted,
                    },
                    seed: args.seed ^ index as u64,
                };
                let out = run_attack(models, &sample.image, sample.label, &cfg)?;
                Ok(SampleOutcome {
                    row: AttackRow {
                        index,
                        label: sample.label,
                        clean_pred: out.clean_prediction,
                        adv_pred: out.adversarial_prediction,
                        target,
                        success: out.success,
                        final_loss: *out.losses.last().expect("iterations >= 1"),
                    },
                    clean: sample.image.clone(),
                    adversarial: out.adversarial,
                })
            }
            Method::Fgsm | Method::Pgd | Method::Mifgsm => {
                let kind = match args.method {
                    Method::Fgsm => BaselineKind::Fgsm,
                    Method::Pgd => BaselineKind::Pgd,
                    Method::Mifgsm => BaselineKind::MiFgsm,
                    Method::Fog => unreachable!(),
                };
                let model = &models[0];
                let adversarial = baseline_attack(
                    kind,
                    model,
                    &sample.image,
                    sample.label,
                    args.epsilon,
                    args.baseline_steps,
                    args.baseline_step_size,
                )?;
                let clean_pred = model.predict(&sample.image)?;
                let adv_pred = model.predict(&adversarial)?;
                let final_loss = cross_entropy(&model.forward(&adversarial)?, sample.label)?;
                Ok(SampleOutcome {
                    row: AttackRow {
                        index,
                        label: sample.label,
                        clean_pred,
                        adv_pred,
                        target: None,
                        success: adv_pred != sample.label,
                        final_loss,
                    },
                    clean: sample.image.clone(),
                    adversarial,
                })
            }
        }
    })
}

pub(crate) fn rows_to_records(rows: &[AttackRow]) -> Vec<PredictionRecord> {
    rows.iter()
        .map(|r| PredictionRecord {
            index: r.index,
            label: r.label,
            clean_pred: r.clean_pred,
            adv_pred: r.adv_pred,
            target: r.target,
        })
        .collect()
}

fn write_attack_reports(
    out_dir: &Path,
    args: &AttackArgs,
    rows: &[AttackRow],
    classes: usize,
    targeted: bool,
) -> Result<()> {
    let records = rows_to_records(rows);
    let eval = evaluate(&records, classes, targeted)?;
    let clean_accuracy = rows.iter().filter(|r| r.clean_pred == r.label).count() as f64
        / rows.len().max(1) as f64;
    let mean_final_loss =
        rows.iter().map(|r| r.final_loss).sum::<f64>() / rows.len().max(1) as f64;
    let metrics = AttackMetrics {
        clean_accuracy,
        mean_final_loss,
        eval,
    };

    write_json(&out_dir.join("report.json"), args, &metrics, rows)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.label.to_string(),
                r.clean_pred.to_string(),
                r.adv_pred.to_string(),
                opt_cell(r.target),
                r.success.to_string(),
                r.final_loss.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out_dir.join("report.csv"),
        &[
            "index",
            "label",
            "clean_pred",
            "adv_pred",
            "target",
            "success",
            "final_loss",
        ],
        &csv_rows,
    )?;

    let clean_preds: Vec<PredictionRow> = rows
        .iter()
        .map(|r| PredictionRow {
            index: r.index,
            label: r.label,
            pred: r.clean_pred,
            target: None,
        })
        .collect();
    let adv_preds: Vec<PredictionRow> = rows
        .iter()
        .map(|r| PredictionRow {
            index: r.index,
            label: r.label,
            pred: r.adv_pred,
            target: r.target,
        })
        .collect();
    write_predictions(&out_dir.join("predictions_clean.json"), &clean_preds)?;
    write_predictions(&out_dir.join("predictions_adv.json"), &adv_preds)?;

    println!(
        "attacked {} samples: success rate {:.4} ({} flipped / {} eligible); reports in {}",
        metrics.eval.n_total,
        metrics.eval.asr,
        metrics.eval.n_adv,
        metrics.eval.n_total - metrics.eval.n_mis,
        out_dir.display()
    );
    Ok(())
}

pub(crate) fn read_attack_rows(report_path: &Path) -> Result<Vec<AttackRow>> {
    let text = std::fs::read_to_string(report_path)?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{} is not JSON: {e}", report_path.display())))?;
    let rows = doc
        .get("per_sample")
        .ok_or_else(|| Error::Format("report lacks a per_sample section".into()))?;
    serde_json::from_value(rows.clone())
        .map_err(|e| Error::Format(format!("malformed per_sample rows: {e}")))
}
