mod config;
mod reba_cmd;
mod seg_cmd;
mod timeline;

use clap::{Parser, Subcommand};
use config::{Global, Settings};
use ergoseg::tcn::TcnError;
use std::process::ExitCode;

/// Ergonomic risk scoring and temporal action segmentation.
///
/// Exit status: 0 on success, 2 for input or usage errors, 3 when training
/// diverges to a non-finite loss.
#[derive(Debug, Parser)]
#[command(name = "ergoseg", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// REBA scoring of skeleton recordings.
    #[command(subcommand)]
    Reba(RebaCommand),
    /// Dataset generation.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Seeded train/test partitions of a dataset.
    Split(seg_cmd::SplitArgs),
    /// Fit a segmentation model.
    Train(seg_cmd::TrainArgs),
    /// Segment feature files with a trained model.
    Predict(seg_cmd::PredictArgs),
    /// Segment FSEQ chunks arriving on stdin, window by window.
    Stream(seg_cmd::StreamArgs),
    /// Accuracy, edit score and segmental F1 of predictions.
    Eval(seg_cmd::EvalArgs),
    /// Timeline SVG of ground truth against prediction.
    Report(seg_cmd::ReportArgs),
}

#[derive(Debug, Subcommand)]
enum RebaCommand {
    /// Per-frame REBA scores as `frame,score,category`.
    Score(reba_cmd::ScoreArgs),
    /// Per-action risk as `action,score,category`.
    Aggregate(reba_cmd::AggregateArgs),
}

#[derive(Debug, Subcommand)]
enum DatasetCommand {
    /// Write a synthetic feature dataset and its manifest.
    Synth(seg_cmd::SynthArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::load(cli.global)?;
    match &cli.command {
        Command::Reba(RebaCommand::Score(a)) => reba_cmd::score(a, &settings),
        Command::Reba(RebaCommand::Aggregate(a)) => reba_cmd::aggregate(a, &settings),
        Command::Dataset(DatasetCommand::Synth(a)) => seg_cmd::synth(a, &settings),
        Command::Split(a) => seg_cmd::split(a, &settings),
        Command::Train(a) => seg_cmd::train_cmd(a, &settings),
        Command::Predict(a) => seg_cmd::predict_cmd(a, &settings),
        Command::Stream(a) => seg_cmd::stream(a, &settings),
        Command::Eval(a) => seg_cmd::eval(a, &settings),
        Command::Report(a) => seg_cmd::report(a, &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let diverged = err.chain().any(|e| matches!(e.downcast_ref::<TcnError>(), Some(TcnError::NonFiniteLoss { .. })));
            ExitCode::from(if diverged { 3 } else { 2 })
        }
    }
}
