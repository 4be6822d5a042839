//! `pvlc`: fit impedance spectra, evaluate receiver responses, sweep loads,
//! simulate PAM links and calibrate module profiles.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pvlc_core::error::Error;
use pvlc_core::fit::Weighting;
use pvlc_core::load::GridSpacing;
use pvlc_core::model::Load;

#[derive(Debug, Parser)]
#[command(name = "pvlc", version, about = "Photovoltaic receiver modeling and link simulation")]
pub struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Override the random seed of commands that use one.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit R_S, R_P and C_P to a measured impedance spectrum.
    Fit(FitArgs),
    /// Power transimpedance and |Z_TI| of a profile at one operating point.
    Response(ResponseArgs),
    /// Sweep the load resistance and report the gain-bandwidth optimum.
    Sweep(SweepArgs),
    /// Run one link simulation from a JSON config.
    Simulate(SimulateArgs),
    /// Fit a module profile to anchor observations.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with columns f_hz,re_ohm,im_ohm.
    pub spectrum: PathBuf,
    /// JSON metadata sidecar.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, default_value = "proportional", value_parser = parse_weighting)]
    pub weighting: Weighting,
}

#[derive(Debug, Args)]
pub struct ResponseArgs {
    /// Module profile JSON.
    pub profile: PathBuf,
    #[arg(long, default_value_t = 200.0)]
    pub lux: f64,
    /// Load in ohms, or `open`.
    #[arg(long, default_value = "open", value_parser = parse_load)]
    pub load: Load,
    #[arg(long, default_value_t = 10.0)]
    pub fmin: f64,
    #[arg(long, default_value_t = 10e6)]
    pub fmax: f64,
    #[arg(long, default_value_t = 400)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Module profile JSON.
    pub profile: PathBuf,
    #[arg(long, default_value_t = 200.0)]
    pub lux: f64,
    #[arg(long, default_value_t = 100.0)]
    pub rmin: f64,
    #[arg(long, default_value_t = 4200.0)]
    pub rmax: f64,
    #[arg(long, default_value_t = 60)]
    pub points: usize,
    #[arg(long, default_value = "log", value_parser = parse_spacing)]
    pub spacing: GridSpacing,
    /// Refine the optimum between grid neighbours.
    #[arg(long)]
    pub refine: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Link config JSON.
    pub config: PathBuf,
    /// Also dump the received waveform as `t_s,v_volt` CSV.
    #[arg(long)]
    pub waveform: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Anchor set JSON.
    pub anchors: PathBuf,
    /// Also write the full calibration report (per-anchor residuals) as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_load(s: &str) -> Result<Load, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_weighting(s: &str) -> Result<Weighting, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_spacing(s: &str) -> Result<GridSpacing, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = commands::run(&cli).and_then(|bytes| match &cli.out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(&bytes).map_err(Error::from),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
