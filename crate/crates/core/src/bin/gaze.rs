use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use gaze_core::config::Config;
use gaze_core::harness::{self, Mode, RunConfig};
use gaze_core::GazeError;

/// Corneal-imaging gaze toolkit: detection, tracking and desk-scale
/// experiments.
#[derive(Debug, Parser)]
#[command(name = "gaze", version)]
struct Cli {
    /// detect, track, simulate, sensitivity, kappa-conv, accuracy, design or
    /// autofocus-calib.
    mode: String,
    /// Configuration file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn execute(cli: &Cli) -> Result<harness::RunSummary, GazeError> {
    let mode: Mode = cli.mode.parse()?;
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| match e {
            GazeError::Io(io) => GazeError::Config(format!("{}: {io}", path.display())),
            other => other,
        })?,
        None => Config::new(),
    };
    for kv in &cli.set {
        cfg.set(kv)?;
    }
    let rc = RunConfig::from_config(mode, &cfg, &cli.out)?;
    harness::run(&rc)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("GAZE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            log::info!("{} records, {} files in {}", summary.records, summary.files.len(), cli.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gaze: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
