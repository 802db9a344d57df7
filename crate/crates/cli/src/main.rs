#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Bad input: config, flags or data files. Exit code 2.
    Validation(String),
    /// A fit, integration or sampler failed on valid input. Exit code 3.
    Numerical(String),
    /// Output could not be written. Exit code 1.
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<defect_spectra::Error> for CliError {
    fn from(e: defect_spectra::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "defect-spectra",
    version,
    about = "Simulate and fit strain-broadened G-center spectra and PL kinetics",
    after_long_help = config::CONFIG_KEYS
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
pub struct Common {
    /// TOML run configuration (see `--help` for keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output files [default: config `output_dir` or "."].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// RNG seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a ZPL-shift ensemble and write spectrum.csv, histogram.csv, spectrum.svg.
    SimulateSpectrum(SpectrumArgs),
    /// Simulate a PL decay and write trace.csv, trace.svg, fit_report.csv.
    SimulateDecay(DecayArgs),
    /// Sweep proton fluence and write sweep.csv, sweep.svg, scaling_fit.csv.
    SweepFluence(SweepArgs),
    /// Fit a decay, spectrum or fluence-scaling CSV and write fit_report.csv.
    Fit(FitArgs),
    /// List vacancy or void candidate sites around an embedded G-center.
    EnumerateSites(SitesArgs),
    /// Convert between ZPL energy and wavelength shifts.
    Convert(ConvertArgs),
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    /// Sampler mode: uniform, biased-z or defect-field.
    #[arg(long)]
    mode: Option<String>,
    /// Number of retained samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Also write the per-sample strains and shifts to ensemble.csv.
    #[arg(long)]
    write_ensemble: bool,
}

#[derive(Args)]
pub struct DecayArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated target fluences in cm^-2.
    #[arg(long, value_delimiter = ',')]
    fluences: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FitModel {
    /// Single exponential on a `time_ns,counts` trace.
    Exponential,
    /// Lorentzian peaks on a `wavelength_nm,intensity` spectrum.
    Peaks,
    /// Power law on `fluence_cm2,intensity` points.
    PowerLaw,
}

#[derive(Args)]
pub struct FitArgs {
    /// Input CSV.
    input: PathBuf,
    #[arg(long, value_enum)]
    model: FitModel,
    /// Number of Lorentzian peaks for `--model peaks`.
    #[arg(long, default_value_t = 1)]
    peaks: usize,
    /// Exponential fit window `start,end` in ns.
    #[arg(long, value_delimiter = ',')]
    window: Option<Vec<f64>>,
    /// Directory for fit_report.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SiteArg {
    Vacancy,
    Void,
}

#[derive(Args)]
pub struct SitesArgs {
    /// Conventional cells per edge.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, value_enum, default_value = "vacancy")]
    kind: SiteArg,
    /// Enumerate the pristine cell (no G-center).
    #[arg(long)]
    pristine: bool,
    /// G-center orientation index 0..2.
    #[arg(long, default_value_t = 0)]
    orientation: usize,
    /// Void exclusion radius around the interstitial, nm.
    #[arg(long, default_value_t = 0.35)]
    exclusion_radius: f64,
    /// Also write the structure as XYZ.
    #[arg(long)]
    xyz: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct ConvertInput {
    /// Energy shift in meV (positive = blueshift).
    #[arg(long, allow_hyphen_values = true)]
    mev: Option<f64>,
    /// Wavelength shift in nm.
    #[arg(long, allow_hyphen_values = true)]
    nm: Option<f64>,
}

#[derive(Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    input: ConvertInput,
    /// Reference ZPL wavelength, nm.
    #[arg(long, default_value_t = 1278.3)]
    lambda0: f64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DEFECT_SPECTRA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Validation(format!("DEFECT_SPECTRA_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("DEFECT_SPECTRA_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::SimulateSpectrum(a) => commands::simulate_spectrum(&a),
        Command::SimulateDecay(a) => commands::simulate_decay(&a),
        Command::SweepFluence(a) => commands::sweep_fluence(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::EnumerateSites(a) => commands::enumerate_sites(&a),
        Command::Convert(a) => commands::convert(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
