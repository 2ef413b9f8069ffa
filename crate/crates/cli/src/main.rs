//! `itep` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a numerical check fails (or
//! a computation breaks down), 2 for configuration and usage errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "itep", version, about = "Interior transmission eigenvalue pencil toolkit")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "itep-out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample both ellipticity conditions.
    CheckEllipticity,
    /// Eigenvalues and Keldysh chains of the pencil.
    Spectrum {
        /// Cross-check on a finer grid.
        #[arg(long)]
        refine: bool,
        /// Compare with the exact characteristic determinant.
        #[arg(long)]
        verify_oracle: bool,
    },
    /// Resolvent norms along rays and on circles.
    ResolventScan,
    /// Eigenvalue counting function against its bounds.
    Counting,
    /// Projection of random smooth functions onto chain spans.
    Completeness,
    /// Roots of the characteristic determinant.
    Oracle,
    /// Laurent coefficients of the inverse at a pole.
    Laurent,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckEllipticity => "check-ellipticity",
            Command::Spectrum { .. } => "spectrum",
            Command::ResolventScan => "resolvent-scan",
            Command::Counting => "counting",
            Command::Completeness => "completeness",
            Command::Oracle => "oracle",
            Command::Laurent => "laurent",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(itep::Error),
    Io(std::io::Error),
}

impl From<itep::Error> for CliError {
    fn from(e: itep::Error) -> Self {
        match e {
            itep::Error::InvalidInput(_)
            | itep::Error::DimensionMismatch { .. }
            | itep::Error::SizeCap { .. } => CliError::Config(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "configuration error: {s}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut cfg = load_config(cli.config.as_ref())?;
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut out = output::Output::new(cli.command.name(), cli.seed);
    let passed = match cli.command {
        Command::CheckEllipticity => commands::check_ellipticity(&mut cfg, cli.seed, &mut out)?,
        Command::Spectrum { refine, verify_oracle } => {
            let s = cfg.spectrum.get_or_insert_with(Default::default);
            s.refine |= refine;
            s.verify_oracle |= verify_oracle;
            commands::spectrum(&mut cfg, &mut out)?
        }
        Command::ResolventScan => commands::resolvent_scan(&mut cfg, &mut out)?,
        Command::Counting => commands::counting(&mut cfg, &mut out)?,
        Command::Completeness => commands::completeness(&mut cfg, cli.seed, &mut out)?,
        Command::Oracle => commands::oracle(&mut cfg, &mut out)?,
        Command::Laurent => commands::laurent(&mut cfg, &mut out)?,
    };
    out.finish(&cli.out, &cfg, passed)?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("itep {}: {e}", cli.command.name());
            ExitCode::from(e.code())
        }
    }
}
