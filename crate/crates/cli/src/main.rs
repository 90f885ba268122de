//! `vtc-kit`: synthetic corpora, feature extraction and the repeated-split
//! experiment protocol from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "vtc-kit",
    version,
    about = "Vocal tract coordination features and TMS regression experiments"
)]
pub struct Cli {
    /// Corpus manifest CSV.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment configuration: a JSON file or an inline JSON object.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus (WAVs plus manifest.csv).
    Synth(SynthArgs),
    /// Write per-speaker frames and the feature table as VTCF files.
    Extract(ExtractArgs),
    /// Run one experiment.
    Run(RunArgs),
    /// Segment-size sweep at segment level.
    Sweep(SweepArgs),
    /// Several feature sets on identical splits plus Tukey tests.
    Compare(CompareArgs),
    /// F-value heatmap over FVTC runs.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    n_control: usize,
    #[arg(long, default_value_t = 12)]
    n_premanifest: usize,
    #[arg(long, default_value_t = 12)]
    n_early: usize,
    #[arg(long, default_value_t = 7)]
    n_late: usize,
    /// Recording length in seconds.
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,
    #[arg(long, default_value_t = 1.0)]
    coupling: f64,
    /// Plant coupling only between two MFCC channels, e.g. `2,5`.
    #[arg(long, value_name = "A,B")]
    pair: Option<String>,
}

/// Experiment settings that override the configuration file.
#[derive(Debug, Args, Default)]
struct ExperimentArgs {
    #[arg(long)]
    feature_set: Option<String>,
    #[arg(long)]
    segment_s: Option<f64>,
    #[arg(long)]
    segment_hop_s: Option<f64>,
    #[arg(long)]
    n_runs: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    /// `speaker` or `segment`.
    #[arg(long)]
    level: Option<String>,
    /// Draw the retained controls once instead of per run.
    #[arg(long)]
    fixed_controls: bool,
    /// Feature CSV for the `external` feature set.
    #[arg(long)]
    external_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Also write every segment's VTC tensor (FVTC/EVTC feature sets).
    #[arg(long)]
    tensors: bool,
    /// Also write the feature table as CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Segment sizes in seconds.
    #[arg(long, value_delimiter = ',', default_values_t = [7.0, 10.0, 15.0, 20.0, 25.0, 30.0])]
    sizes: Vec<f64>,
    /// Comma-separated feature sets (defaults to the configured one).
    #[arg(long)]
    feature_sets: Option<String>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long)]
    feature_sets: String,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Directory of run_*.json reports from an earlier `run`; otherwise runs are computed.
    #[arg(long)]
    runs: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
