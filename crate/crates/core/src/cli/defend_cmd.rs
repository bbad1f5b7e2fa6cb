//! `fogfool defend` - push attack outputs through a preprocessing defense
//! and measure how much attack success survives.
//!
//! Eligibility follows the undefended run: a sample counts toward the
//! retained success rate when the model was right on the clean image, and
//! the attack still holds if the model errs on the *defended* adversarial
//! image.

use std::path::PathBuf;

use serde::Serialize;

use crate::cli::attack_cmd::read_attack_rows;
use crate::cli::{ensure_dir, opt_cell, parallel_map};
use crate::error::{Error, Result};
use crate::eval::{asr, jpeg_like_defense, tv_reconstruct, SampleRecord, TvSpec};
use crate::fog::Image;
use crate::io::{load_model, read_p6, write_csv, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefenseKind {
    Jpeg,
    Tvm,
}

#[derive(Debug, clap::Args, Serialize)]
pub struct DefendArgs {
    /// Model checkpoint to re-evaluate under the defense
    #[arg(long)]
    pub model: PathBuf,
    /// Attack output directory (needs report.json and images/ from
    /// `attack --save-images`)
    #[arg(long = "attack-dir")]
    pub attack_dir: PathBuf,
    #[arg(long = "out-dir", short = 'o')]
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum)]
    pub defense: DefenseKind,
    /// JPEG quality factor
    #[arg(long, default_value_t = 50)]
    pub quality: u8,
    /// TV penalty weight
    #[arg(long = "tv-weight", default_value_t = 0.03)]
    pub tv_weight: f64,
    /// Pixel drop probability for TV reconstruction
    #[arg(long = "drop-rate", default_value_t = 0.5)]
    pub drop_rate: f64,
    #[arg(long = "tv-iters", default_value_t = 50)]
    pub tv_iters: usize,
    #[arg(long = "tv-step", default_value_t = 5e-3)]
    pub tv_step: f64,
    /// Base seed for the per-image TV drop masks
    #[arg(long = "defense-seed", default_value_t = 0)]
    pub defense_seed: u64,
    #[arg(long, default_value_t = 1)]
    #[serde(skip_serializing)]
    pub workers: usize,
}

#[derive(Serialize)]
struct DefendRow {
    index: usize,
    label: usize,
    clean_pred: usize,
    adv_pred: usize,
    target: Option<usize>,
    defended_clean_pred: usize,
    defended_adv_pred: usize,
    retained: bool,
}

#[derive(Serialize)]
struct DefendMetrics {
    undefended_asr: f64,
    retained_asr: f64,
    defended_clean_accuracy: f64,
    n_total: usize,
    n_eligible: usize,
}

pub fn run(args: DefendArgs) -> Result<()> {
    ensure_dir(&args.out_dir)?;
    let model = load_model(&args.model)?;
    let rows = read_attack_rows(&args.attack_dir.join("report.json"))?;
    let images = args.attack_dir.join("images");
    if !images.is_dir() {
        return Err(Error::invalid(format!(
            "{} has no images/ directory; rerun attack with --save-images",
            args.attack_dir.display()
        )));
    }

    let apply = |image: &Image, seed: u64| -> Result<Image> {
        match args.defense {
            DefenseKind::Jpeg => jpeg_like_defense(image, args.quality),
            DefenseKind::Tvm => tv_reconstruct(
                image,
                &TvSpec {
                    weight: args.tv_weight,
                    drop_rate: args.drop_rate,
                    iterations: args.tv_iters,
                    step: args.tv_step,
                    seed,
                },
            ),
        }
    };

    let out_rows: Vec<DefendRow> = parallel_map(rows.len(), args.workers, |slot| {
        let row = &rows[slot];
        let clean = read_p6(&images.join(format!("clean_{:04}.ppm", row.index)))?;
        let adv = read_p6(&images.join(format!("adv_{:04}.ppm", row.index)))?;
        let defended_clean = apply(&clean, args.defense_seed ^ row.index as u64)?;
        let defended_adv = apply(&adv, args.defense_seed ^ row.index as u64)?;
        let defended_clean_pred = model.predict(&defended_clean)?;
        let defended_adv_pred = model.predict(&defended_adv)?;
        Ok(DefendRow {
            index: row.index,
            label: row.label,
            clean_pred: row.clean_pred,
            adv_pred: row.adv_pred,
            target: row.target,
            defended_clean_pred,
            defended_adv_pred,
            retained: row.clean_pred == row.label && defended_adv_pred != row.label,
        })
    })?;

    let undefended: Vec<SampleRecord> = rows
        .iter()
        .map(|r| SampleRecord {
            clean_correct: r.clean_pred == r.label,
            attack_flipped: r.adv_pred != r.label,
        })
        .collect();
    let retained: Vec<SampleRecord> = out_rows
        .iter()
        .map(|r| SampleRecord {
            clean_correct: r.clean_pred == r.label,
            attack_flipped: r.defended_adv_pred != r.label,
        })
        .collect();
    let n_eligible = retained.iter().filter(|r| r.clean_correct).count();
    let metrics = DefendMetrics {
        undefended_asr: asr(&undefended)?,
        retained_asr: asr(&retained)?,
        defended_clean_accuracy: out_rows
            .iter()
            .filter(|r| r.defended_clean_pred == r.label)
            .count() as f64
            / out_rows.len().max(1) as f64,
        n_total: out_rows.len(),
        n_eligible,
    };

    write_json(&args.out_dir.join("report.json"), &args, &metrics, &out_rows)?;
    let csv_rows: Vec<Vec<String>> = out_rows
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.label.to_string(),
                r.clean_pred.to_string(),
                r.adv_pred.to_string(),
                opt_cell(r.target),
                r.defended_clean_pred.to_string(),
                r.defended_adv_pred.to_string(),
                r.retained.to_string(),
            ]
        })
        .collect();
    write_csv(
        &args.out_dir.join("report.csv"),
        &[
            "index",
            "label",
            "clean_pred",
            "adv_pred",
            "target",
            "defended_clean_pred",
            "defended_adv_pred",
            "retained",
        ],
        &csv_rows,
    )?;

    println!(
        "defense {:?}: ASR {:.4} -> {:.4} over {} eligible samples; reports in {}",
        args.defense,
        metrics.undefended_asr,
        metrics.retained_asr,
        n_eligible,
        args.out_dir.display()
    );
    Ok(())
}
