//! Attack metrics and evaluation reports.
//!
//! The success-rate convention: samples the model already misclassifies
//! before any attack are excluded from the denominator, since no
//! perturbation is needed for them.

pub mod cka;
pub mod defense;

pub use cka::{feature_deviation_cka, linear_cka};
pub use defense::{jpeg_like_defense, psnr, tv_objective, tv_reconstruct, TvSpec};

use crate::error::{Error, Result};

/// Per-sample outcome for untargeted success-rate computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRecord {
    /// Model predicted the true label on the clean input.
    pub clean_correct: bool,
    /// Attack moved the prediction off the true label.
    pub attack_flipped: bool,
}

/// Untargeted attack success rate `n_adv / (n_total - n_mis)`.
pub fn asr(records: &[SampleRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("success rate needs at least one record"));
    }
    let eligible = records.iter().filter(|r| r.clean_correct).count();
    if eligible == 0 {
        return Err(Error::UndefinedMetric(
            "every sample was already misclassified; success rate has a zero denominator".into(),
        ));
    }
    let flipped = records
        .iter()
        .filter(|r| r.clean_correct && r.attack_flipped)
        .count();
    Ok(flipped as f64 / eligible as f64)
}

/// Per-sample outcome for targeted success-rate computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetedRecord {
    pub clean_correct: bool,
    /// Adversarial prediction landed exactly on the designated target.
    pub reached_target: bool,
}

/// Targeted success rate: same denominator as [`asr`], but success requires
/// hitting the target class, not merely leaving the true one.
pub fn targeted_asr(records: &[TargetedRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("success rate needs at least one record"));
    }
    let eligible = records.iter().filter(|r| r.clean_correct).count();
    if eligible == 0 {
        return Err(Error::UndefinedMetric(
            "every sample was already misclassified; success rate has a zero denominator".into(),
        ));
    }
    let hits = records
        .iter()
        .filter(|r| r.clean_correct && r.reached_target)
        .count();
    Ok(hits as f64 / eligible as f64)
}

/// K x K count matrix; entry (i, j) counts samples of true class i
/// predicted as class j.
pub fn confusion_matrix(
    true_labels: &[usize],
    predictions: &[usize],
    classes: usize,
) -> Result<Vec<Vec<usize>>> {
    if true_labels.len() != predictions.len() {
        return Err(Error::shape(
            format!("{} labels", true_labels.len()),
            format!("{} predictions", predictions.len()),
        ));
    }
    let mut matrix = vec![vec![0usize; classes]; classes];
    for (&t, &p) in true_labels.iter().zip(predictions) {
        if t >= classes || p >= classes {
            return Err(Error::invalid(format!(
                "label pair ({t}, {p}) out of range for {classes} classes"
            )));
        }
        matrix[t][p] += 1;
    }
    Ok(matrix)
}

/// Full per-sample prediction row, enough to rebuild every metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PredictionRecord {
    pub index: usize,
    pub label: usize,
    pub clean_pred: usize,
    pub adv_pred: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<usize>,
}

/// Aggregated metrics over a prediction batch.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EvalReport {
    pub n_total: usize,
    pub n_mis: usize,
    pub n_adv: usize,
    pub asr: f64,
    pub confusion: Vec<Vec<usize>>,
    pub mode: String,
}

/// Builds the aggregate report. Untargeted success means the adversarial
/// prediction left the true label; targeted success means it reached the
/// per-sample target.
pub fn evaluate(records: &[PredictionRecord], classes: usize, targeted: bool) -> Result<EvalReport> {
    let rate = if targeted {
        let rows: Vec<TargetedRecord> = records
            .iter()
            .map(|r| {
                let target = r.target.ok_or_else(|| {
                    Error::invalid(format!("record {} lacks a target label", r.index))
                })?;
                Ok(TargetedRecord {
                    clean_correct: r.clean_pred == r.label,
                    reached_target: r.adv_pred == target,
                })
            })
            .collect::<Result<_>>()?;
        targeted_asr(&rows)?
    } else {
        let rows: Vec<SampleRecord> = records
            .iter()
            .map(|r| SampleRecord {
                clean_correct: r.clean_pred == r.label,
                attack_flipped: r.adv_pred != r.label,
            })
            .collect();
        asr(&rows)?
    };

    let n_total = records.len();
    let n_mis = records.iter().filter(|r| r.clean_pred != r.label).count();
    let n_adv = records
        .iter()
        .filter(|r| {
            r.clean_pred == r.label
                && if targeted {
                    Some(r.adv_pred) == r.target
                } else {
                    r.adv_pred != r.label
                }
        })
        .count();
    let labels: Vec<usize> = records.iter().map(|r| r.label).collect();
    let preds: Vec<usize> = records.iter().map(|r| r.adv_pred).collect();
    Ok(EvalReport {
        n_total,
        n_mis,
        n_adv,
        asr: rate,
        confusion: confusion_matrix(&labels, &preds, classes)?,
        mode: if targeted { "targeted" } else { "untargeted" }.to_string(),
    })
}
