//! `benford-sep`: extract Benford divergence features from image folders,
//! fit generalized-Benford parameters, and train/evaluate classifiers.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use benford_sep::features::{DEFAULT_CHI_SCALE, DEFAULT_QFS};

#[derive(Parser)]
#[command(name = "benford-sep", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one divergence per quality factor for every image and write a CSV.
    Extract(ExtractArgs),
    /// Fit generalized-Benford parameters to a digit distribution.
    Fit(FitArgs),
    /// Split a feature CSV, train the selected models, and write a report.
    TrainEval(TrainEvalArgs),
    /// Write a seeded synthetic feature CSV (5 separable classes).
    Synth(SynthArgs),
    /// Dump the nonzero quantized AC coefficients of one image.
    Coeffs(CoeffsArgs),
}

#[derive(Args)]
pub struct ExtractArgs {
    /// Root holding one subdirectory of PGM/PNG images per class.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_QFS)]
    pub qf: Vec<u32>,
    /// `qf N q s` lines; entries replace the built-in rows for those QFs.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CHI_SCALE)]
    pub chi_scale: f64,
    /// Class directory names in label order (default: sorted).
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Also write a JSON report with the rejected-image list.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["dist", "image"]))]
pub struct FitArgs {
    /// File with nine probabilities for digits 1..9.
    #[arg(long)]
    pub dist: Option<PathBuf>,
    /// Image whose quantized coefficients supply the distribution.
    #[arg(long, requires = "qf")]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub qf: Option<u32>,
}

#[derive(Args)]
pub struct TrainEvalArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// `all` or a comma-separated list of nb, tree, logreg, cnn.
    #[arg(long, default_value = "all")]
    pub model: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.7)]
    pub train_frac: f64,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Directory for `<model>_loss.csv` and `<model>_accuracy.csv`.
    #[arg(long)]
    pub curves_dir: Option<PathBuf>,
    /// Directory for trained models as `<model>.json`.
    #[arg(long)]
    pub models_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 150)]
    pub cnn_epochs: usize,
    #[arg(long, default_value_t = 500)]
    pub logreg_epochs: usize,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args)]
pub struct CoeffsArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub qf: u32,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(a) => commands::extract(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::TrainEval(a) => commands::train_eval(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Coeffs(a) => commands::coeffs(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
