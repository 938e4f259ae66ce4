//! `msinv` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 I/O or parse failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "msinv", version, about = "Multiple-scattering inverse imaging with TV-regularized FISTA")]
pub struct Cli {
    /// Directory for outputs; defaults to the config's `output_dir`, then the
    /// working directory.
    #[arg(long, global = true, env = "MSINV_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for the data-parallel regions (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Repeat for more logging.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render the configured phantom and write synthetic measurements.
    Simulate(SimulateArgs),
    /// Reconstruct an image from measurements.
    Reconstruct(ReconstructArgs),
    /// Sample the closed-form cylinder field on a grid.
    Analytic(AnalyticArgs),
    /// Compare backpropagated gradients with central differences.
    Gradcheck(GradcheckArgs),
    /// Error metrics between two CSV images or fields.
    Metrics(MetricsArgs),
    /// Parameter sweeps emitting CSV tables.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Convert an ASCII scattering dataset to the native measurement format.
    ImportFresnel(ImportArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Base name of the output files.
    #[arg(long, default_value = "measurements")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Measurement file in the native format.
    #[arg(long)]
    pub data: PathBuf,
    /// Ground-truth CSV with an `f` column, for error histories.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Overrides the configured model.
    #[arg(long, value_parser = ["multiple", "born", "rytov"])]
    pub model: Option<String>,
    /// Overrides the configured receiver decimation.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long, default_value = "recon")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub radius_m: f64,
    /// Potential contrast `f / k_b^2` of the cylinder.
    #[arg(long)]
    pub contrast: f64,
    #[arg(long, default_value_t = 1.0)]
    pub source_distance_m: f64,
    #[arg(long, default_value_t = 0.0749)]
    pub wavelength_m: f64,
    #[arg(long, default_value_t = 64)]
    pub dims: usize,
    /// Pixel size; defaults to a 24th of the wavelength.
    #[arg(long)]
    pub spacing_m: Option<f64>,
    /// Highest harmonic kept; defaults to `ceil(k_b r) + 30`.
    #[arg(long)]
    pub truncation: Option<usize>,
    #[arg(long, default_value = "analytic")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 10)]
    pub size: usize,
    /// Forward iteration counts to test.
    #[arg(long, value_delimiter = ',', default_value = "1,3,8")]
    pub iterations: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub contrast: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum SweepCommand {
    /// Forward-model error against the closed-form cylinder field.
    Contrast(ContrastSweepArgs),
    /// Reconstruction quality versus receiver decimation.
    Subsample(SubsampleSweepArgs),
}

#[derive(Args, Debug)]
pub struct ContrastSweepArgs {
    /// `start:step:stop`.
    #[arg(long, default_value = "0.05:0.05:0.4")]
    pub contrast: String,
    #[arg(long, default_value_t = 2.0)]
    pub diameter_wavelengths: f64,
    #[arg(long, default_value_t = 64)]
    pub dims: usize,
    #[arg(long, default_value_t = 24.0)]
    pub pixels_per_wavelength: f64,
    /// Forward iteration counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,128,256")]
    pub iterations: Vec<usize>,
    #[arg(long, default_value = "contrast_sweep")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct SubsampleSweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,128")]
    pub factors: Vec<usize>,
    #[arg(long, default_value = "subsample_sweep")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct ImportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 3e9)]
    pub frequency_hz: f64,
    #[arg(long, default_value = "fresnel")]
    pub name: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
