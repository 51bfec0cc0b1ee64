//! Command-line front end for the finger-tapping analysis pipeline.

mod commands;
mod config;
mod error;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "taplab",
    version,
    about = "Finger-tapping kinematics from hand-landmark recordings"
)]
pub struct Cli {
    /// Configuration file of `key = value` lines; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Random seed (default 0)
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<String>,
    /// Signal representation: distance or angle (default distance)
    #[arg(long, global = true, value_name = "KIND")]
    pub signal: Option<String>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic cohort of landmark recordings
    Synth(SynthArgs),
    /// Write per-frame signals and detected tapping cycles
    Signal(RecordingArgs),
    /// Extract the 13 tapping features into features.csv
    Features(RecordingArgs),
    /// Principal components and varimax rotation of a feature table
    Pca(PcaArgs),
    /// Train a classifier and write model.json
    Train(TrainArgs),
    /// Patient-grouped cross-validated evaluation
    Evaluate(EvaluateArgs),
    /// Majority-class and random-guess reference metrics
    Baselines(BaselineArgs),
    /// Collect evaluation outputs into report.md, summary.csv and metrics.svg
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Patients per severity level (default 4)
    #[arg(long)]
    pub patients: Option<String>,
    /// Videos per patient (default 2)
    #[arg(long)]
    pub videos: Option<String>,
    /// Landmark file format: json or csv (default json)
    #[arg(long)]
    pub format: Option<String>,
    /// Camera view: front or lateral (default front)
    #[arg(long)]
    pub view: Option<String>,
}

#[derive(Debug, Args)]
pub struct RecordingArgs {
    /// Landmark files or directories containing them
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Minimum peak prominence as a fraction of the 5-95 percentile range
    #[arg(long)]
    pub prominence_frac: Option<String>,
    /// Minimum peak separation in seconds
    #[arg(long)]
    pub min_separation_s: Option<String>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// Feature table written by `features`
    pub features: PathBuf,
    /// Components to rotate (default: smallest count reaching 98% variance)
    #[arg(long)]
    pub components: Option<String>,
}

#[derive(Debug, Args)]
pub struct ModelOpts {
    /// logistic or random_forest (default logistic)
    #[arg(long)]
    pub family: Option<String>,
    /// multiclass or ordinal (default multiclass)
    #[arg(long)]
    pub mode: Option<String>,
    /// Logistic L2 penalty
    #[arg(long)]
    pub l2: Option<String>,
    /// Forest tree count
    #[arg(long)]
    pub trees: Option<String>,
    /// Forest maximum depth
    #[arg(long)]
    pub depth: Option<String>,
    /// Forest minimum leaf size
    #[arg(long)]
    pub min_leaf: Option<String>,
    /// Features drawn per split
    #[arg(long)]
    pub max_features: Option<String>,
    /// Inverse-frequency class weights: on or off
    #[arg(long)]
    pub class_weight: Option<String>,
    /// Random-search draws for hyperparameter tuning (default 50)
    #[arg(long)]
    pub budget: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Feature table written by `features`
    pub features: PathBuf,
    #[command(flatten)]
    pub model: ModelOpts,
    /// Pick hyperparameters by nested cross-validation first
    #[arg(long)]
    pub tune: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Feature table written by `features`
    pub features: PathBuf,
    #[command(flatten)]
    pub model: ModelOpts,
    /// nested or lopo (default lopo)
    #[arg(long)]
    pub cv: Option<String>,
    /// Shuffles per feature for permutation importance (default 20)
    #[arg(long)]
    pub repeats: Option<String>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Feature table whose labels give the class distribution
    pub features: Option<PathBuf>,
    /// Comma-separated counts for scores 0..4, e.g. 17,60,177,219,12
    #[arg(long)]
    pub counts: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Feature table the evaluation ran on
    #[arg(long, required = true)]
    pub features: PathBuf,
    /// Output directory of `evaluate`
    #[arg(long, required = true)]
    pub eval: PathBuf,
    /// Output directory of `pca`
    #[arg(long)]
    pub pca: Option<PathBuf>,
    /// A second `evaluate` directory to compare per patient
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
