//! `fogfool train` - fit the toy classifier and write a checkpoint.

use std::path::PathBuf;

use serde::Serialize;

use crate::classifier::{synth_dataset, train, Model, ModelConfig, TrainConfig};
use crate::cli::DatasetArgs;
use crate::error::Result;
use crate::io::{save_model, write_csv, write_json};

#[derive(Debug, clap::Args, Serialize)]
pub struct TrainArgs {
    /// Checkpoint output path
    #[arg(long, short = 'o')]
    #[serde(skip_serializing)]
    pub out: PathBuf,
    /// Report output path (defaults to the checkpoint path + .train.json)
    #[arg(long)]
    #[serde(skip_serializing)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Conv channel width (the architecture-diversity knob)
    #[arg(long = "conv-width", default_value_t = 8)]
    pub conv_width: usize,
    #[arg(long, default_value_t = 24)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.12)]
    pub lr: f64,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Seed for parameter init and batch shuffling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Serialize)]
struct TrainMetrics {
    train_accuracy: f64,
    test_accuracy: f64,
    final_epoch_loss: f64,
}

#[derive(Serialize)]
struct EpochRow {
    epoch: usize,
    mean_loss: f64,
}

pub fn run(args: TrainArgs) -> Result<()> {
    let data = synth_dataset(&args.dataset.to_spec()?)?;
    let mut model = Model::new(ModelConfig {
        input_height: args.dataset.image_size,
        input_width: args.dataset.image_size,
        input_channels: 3,
        conv_width: args.conv_width,
        num_classes: args.dataset.classes,
        seed: args.seed,
    })?;
    let report = train(
        &mut model,
        &data,
        &TrainConfig {
            epochs: args.epochs,
            learning_rate: args.lr,
            batch_size: args.batch,
            seed: args.seed,
        },
    )?;
    save_model(&model, &args.out)?;

    let metrics = TrainMetrics {
        train_accuracy: report.train_accuracy,
        test_accuracy: report.test_accuracy,
        final_epoch_loss: *report.epoch_loss.last().expect("at least one epoch"),
    };
    let rows: Vec<EpochRow> = report
        .epoch_loss
        .iter()
        .enumerate()
        .map(|(epoch, &mean_loss)| EpochRow { epoch, mean_loss })
        .collect();

    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.out.with_extension("train.json"));
    write_json(&report_path, &args, &metrics, &rows)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.epoch.to_string(), r.mean_loss.to_string()])
        .collect();
    write_csv(
        &report_path.with_extension("csv"),
        &["epoch", "mean_loss"],
        &csv_rows,
    )?;

    println!(
        "trained {} (width {}): train acc {:.4}, test acc {:.4}; report {}",
        args.out.display(),
        args.conv_width,
        report.train_accuracy,
        report.test_accuracy,
        report_path.display()
    );
    Ok(())
}
