//! `fogfool eval` - rebuild metrics from clean/adversarial prediction files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::cli::{ensure_dir, opt_cell, read_predictions};
use crate::error::{Error, Result};
use crate::eval::{evaluate, PredictionRecord};
use crate::io::{write_csv, write_json};

#[derive(Debug, clap::Args, Serialize)]
pub struct EvalArgs {
    /// Predictions on clean inputs (JSON)
    #[arg(long)]
    pub clean: PathBuf,
    /// Predictions on adversarial inputs (JSON)
    #[arg(long)]
    pub adv: PathBuf,
    #[arg(long = "out-dir", short = 'o')]
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Score targeted success (adv rows must carry target labels)
    #[arg(long)]
    pub targeted: bool,
}

pub fn run(args: EvalArgs) -> Result<()> {
    ensure_dir(&args.out_dir)?;
    let clean = read_predictions(&args.clean)?;
    let adv = read_predictions(&args.adv)?;
    let clean_by_index: BTreeMap<usize, _> = clean.iter().map(|r| (r.index, r)).collect();

    let mut records = Vec::with_capacity(adv.len());
    for row in &adv {
        let clean_row = clean_by_index.get(&row.index).ok_or_else(|| {
            Error::invalid(format!(
                "sample {} appears in {} but not in {}",
                row.index,
                args.adv.display(),
                args.clean.display()
            ))
        })?;
        if clean_row.label != row.label {
            return Err(Error::invalid(format!(
                "sample {} has conflicting labels across prediction files",
                row.index
            )));
        }
        records.push(PredictionRecord {
            index: row.index,
            label: row.label,
            clean_pred: clean_row.pred,
            adv_pred: row.pred,
            target: row.target,
        });
    }
    if records.is_empty() {
        return Err(Error::invalid("prediction files contain no samples"));
    }

    let report = evaluate(&records, args.classes, args.targeted)?;
    write_json(&args.out_dir.join("report.json"), &args, &report, &records)?;
    let csv_rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.label.to_string(),
                r.clean_pred.to_string(),
                r.adv_pred.to_string(),
                opt_cell(r.target),
            ]
        })
        .collect();
    write_csv(
        &args.out_dir.join("report.csv"),
        &["index", "label", "clean_pred", "adv_pred", "target"],
        &csv_rows,
    )?;

    println!(
        "evaluated {} samples: {} ASR {:.4}; reports in {}",
        report.n_total,
        report.mode,
        report.asr,
        args.out_dir.display()
    );
    Ok(())
}
