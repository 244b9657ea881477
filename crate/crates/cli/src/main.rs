//! `tnc` — deterministic solver and policy-analysis runner for the
//! ride-hailing market-equilibrium model.
//!
//! Every command reads one TOML config (the bundled San Francisco setup by
//! default), writes its data artifacts plus a run manifest into the output
//! directory, and prints a short summary. Data files carry no timestamps;
//! rerunning a command with the same inputs reproduces them byte for byte.

// `!(hi > lo)` rejects NaN flag values as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tnc_market::analysis::Scheme;
use tnc_market::io::{parse_config, sf_default_spec, OutputFormat, RunSpec};
use tnc_market::Error;

const EXIT_CODE_HELP: &str = "Exit codes:
  0  success
  2  configuration or argument error (bad config key, missing section, bad flag)
  3  solver or calibration failure (infeasible point, non-bracketed root)
  4  output I/O failure
  5  requested quantity not found (regime threshold absent, revenue target out of range)

On failure a machine-readable record {\"error\":{\"kind\",\"message\"},\"exit_code\"} is
printed to stderr as the last line.";

#[derive(Parser)]
#[command(
    name = "tnc",
    version,
    about = "Equilibrium solver and policy analysis for a regulated ride-hailing market",
    after_help = EXIT_CODE_HELP
)]
struct Cli {
    /// Run configuration (TOML); defaults to the bundled San Francisco setup.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides [output] dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format for tables (overrides [output] formats).
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Worker-thread cap for sweep evaluation (default: TNC_WORKERS or all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the logit constants from the [calibration] anchors and verify.
    Calibrate,
    /// Solve a single equilibrium under the configured policy.
    Solve {
        /// Override the wage floor, $/hr.
        #[arg(long)]
        w_min: Option<f64>,
        /// Charge level for --scheme ($/trip or $/hr).
        #[arg(long)]
        tax: Option<f64>,
        /// Charge scheme the --tax level applies to.
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
    },
    /// Solve one equilibrium per grid point of a charge sweep.
    Sweep {
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        /// Grid as lo:hi:n, e.g. 0:3:100.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        w_min: Option<f64>,
    },
    /// Equal-revenue comparison of the two charge schemes.
    Compare {
        /// Single trip-charge level to compare at (defaults to the config grid).
        #[arg(long)]
        tax: Option<f64>,
        #[arg(long)]
        w_min: Option<f64>,
    },
    /// Regime thresholds (charge levels) and wage thresholds.
    Thresholds {
        #[arg(long)]
        w_min: Option<f64>,
    },
    /// Time-charge sweeps under perturbed parameters.
    Sensitivity {
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        w_min: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Trip,
    Time,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Trip => Scheme::Trip,
            SchemeArg::Time => Scheme::Time,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> OutputFormat {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParams(_) => 2,
        Error::Io(_) => 4,
        Error::ThresholdNotFound(_) | Error::RevenueRange { .. } => 5,
        Error::InfeasibleFleet { .. }
        | Error::WildGooseChase { .. }
        | Error::Domain(_)
        | Error::Bracket(_)
        | Error::Calibration(_) => 3,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Config(_) => "config",
        Error::InvalidParams(_) => "invalid_params",
        Error::Io(_) => "io",
        Error::ThresholdNotFound(_) => "threshold_not_found",
        Error::RevenueRange { .. } => "revenue_range",
        Error::InfeasibleFleet { .. } => "infeasible_fleet",
        Error::WildGooseChase { .. } => "wild_goose_chase",
        Error::Domain(_) => "domain",
        Error::Bracket(_) => "bracket",
        Error::Calibration(_) => "calibration",
    }
}

/// Grid flag syntax: `lo:hi:n`.
fn parse_grid_flag(s: &str) -> Result<(f64, f64, usize), Error> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("--grid expects lo:hi:n, got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(hi > lo) || n < 2 {
        return Err(Error::Config(format!(
            "--grid needs hi > lo and n >= 2, got '{s}'"
        )));
    }
    Ok((lo, hi, n))
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut overrides = manifest::Overrides::new();
    let mut spec: RunSpec = match &cli.config {
        Some(path) => parse_config(path)?,
        None => sf_default_spec(),
    };
    let config_source = cli
        .config
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "<bundled sf_default>".to_string());

    if let Some(out) = &cli.out {
        spec.output.dir = out.display().to_string();
        overrides.insert("out", spec.output.dir.clone());
    }
    if let Some(fmt) = cli.format {
        spec.output.formats = vec![fmt.into()];
        overrides.insert(
            "format",
            match fmt {
                FormatArg::Csv => "csv",
                FormatArg::Json => "json",
            }
            .to_string(),
        );
    }

    let workers = cli.workers.or_else(|| {
        std::env::var("TNC_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(w) = workers {
        overrides.insert("workers", w.to_string());
    }

    let body = |spec: RunSpec, overrides: manifest::Overrides| -> Result<(), Error> {
        match cli.command {
            Command::Calibrate => commands::calibrate(spec, &config_source, overrides),
            Command::Solve { w_min, tax, scheme } => commands::solve(
                spec,
                &config_source,
                overrides,
                w_min,
                tax,
                scheme.map(Into::into),
            ),
            Command::Sweep {
                scheme,
                ref grid,
                w_min,
            } => {
                let grid = grid.as_deref().map(parse_grid_flag).transpose()?;
                commands::sweep(
                    spec,
                    &config_source,
                    overrides,
                    scheme.map(Into::into),
                    grid,
                    w_min,
                )
            }
            Command::Compare { tax, w_min } => {
                commands::compare(spec, &config_source, overrides, tax, w_min)
            }
            Command::Thresholds { w_min } => {
                commands::thresholds(spec, &config_source, overrides, w_min)
            }
            Command::Sensitivity { ref grid, w_min } => {
                let grid = grid.as_deref().map(parse_grid_flag).transpose()?;
                commands::sensitivity(spec, &config_source, overrides, grid, w_min)
            }
        }
    };

    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            pool.install(|| body(spec, overrides))
        }
        None => body(spec, overrides),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code_for(&err);
            eprintln!("error: {err}");
            let record = serde_json::json!({
                "error": { "kind": error_kind(&err), "message": err.to_string() },
                "exit_code": code,
            });
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}
