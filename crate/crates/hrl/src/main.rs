//! Batch verification driver.  Every subcommand runs one module's check
//! suite and writes a machine-readable report; exit code 0 means all checks
//! passed, 1 means a contract failed, 2 means the request itself was
//! invalid.

use clap::{Parser, Subcommand};
use hrl::error::HrlError;
use hrl::quadrature::QuadratureConfig;
use hrl::report::{
    constants_report, extremal_report, full_report, spectrum_report, stability_report,
    transform_report, Report,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hrl",
    about = "Numerical verification of a sharp weighted fourth-order Sobolev inequality",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Space dimension (>= 5)
    #[arg(long = "N", global = true)]
    n: Option<u32>,

    /// Weight strength (0 < mu < N - 4)
    #[arg(long, global = true)]
    mu: Option<f64>,

    /// Elements in the eigenvalue discretization
    #[arg(long = "grid-size", global = true)]
    grid_size: Option<usize>,

    /// Relative quadrature tolerance
    #[arg(long = "rel-tol", global = true)]
    rel_tol: Option<f64>,

    /// Comma-separated sector indices, e.g. 0,1,2
    #[arg(long, global = true, value_delimiter = ',')]
    sectors: Option<Vec<u32>>,

    /// Sample count for the stability study
    #[arg(long = "samples", global = true)]
    sample_count: Option<usize>,

    /// RNG seed for sampled studies
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format: json or csv
    #[arg(long, global = true)]
    format: Option<String>,

    /// Output file path (stdout when omitted)
    #[arg(long = "out", global = true)]
    out: Option<PathBuf>,

    /// JSON config file; flags take precedence over its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived closed-form constants and their sanity checks
    Constants,
    /// Verify the extremal family: equation residual, equality case, scaling
    ExtremalCheck,
    /// Verify the radial change of variables and its coefficient collapse
    TransformCheck,
    /// Solve the linearized sector eigenproblems
    Spectrum,
    /// Run the quantitative stability experiments
    Stability,
    /// Run every check suite and compose one report
    ReportAll,
}

/// Flat config-file mirror of the run parameters.
#[derive(Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<u32>,
    mu: Option<f64>,
    grid_size: Option<usize>,
    rel_tol: Option<f64>,
    sectors: Option<Vec<u32>>,
    sample_count: Option<usize>,
    seed: Option<u64>,
    format: Option<String>,
    out: Option<PathBuf>,
}

struct RunConfig {
    n: u32,
    mu: f64,
    grid_size: usize,
    rel_tol: f64,
    sectors: Vec<u32>,
    sample_count: usize,
    seed: u64,
    format: String,
    out: Option<PathBuf>,
}

fn resolve(cli: &Cli) -> Result<RunConfig, HrlError> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)?
        }
        None => FileConfig::default(),
    };
    let format = cli
        .format
        .clone()
        .or(file.format)
        .unwrap_or_else(|| "json".to_string());
    if format != "json" && format != "csv" {
        return Err(HrlError::Domain(format!(
            "format must be json or csv, got {format}"
        )));
    }
    Ok(RunConfig {
        n: cli.n.or(file.n).unwrap_or(5),
        mu: cli.mu.or(file.mu).unwrap_or(0.5),
        grid_size: cli.grid_size.or(file.grid_size).unwrap_or(400),
        rel_tol: cli.rel_tol.or(file.rel_tol).unwrap_or(1e-9),
        sectors: cli
            .sectors
            .clone()
            .or(file.sectors)
            .unwrap_or_else(|| vec![0, 1, 2]),
        sample_count: cli.sample_count.or(file.sample_count).unwrap_or(3),
        seed: cli.seed.or(file.seed).unwrap_or(1),
        format,
        out: cli.out.clone().or(file.out),
    })
}

fn execute(command: &Command, rc: &RunConfig) -> Result<Report, HrlError> {
    let cfg = QuadratureConfig {
        rel_tol: rc.rel_tol,
        ..QuadratureConfig::default()
    };
    cfg.validate()?;
    match command {
        Command::Constants => constants_report(rc.n, rc.mu),
        Command::ExtremalCheck => extremal_report(rc.n, rc.mu, &cfg),
        Command::TransformCheck => transform_report(rc.n, rc.mu, &cfg),
        Command::Spectrum => spectrum_report(rc.n, rc.mu, &rc.sectors, rc.grid_size, &cfg),
        Command::Stability => {
            stability_report(rc.n, rc.mu, rc.sample_count, rc.seed, rc.grid_size, &cfg)
        }
        Command::ReportAll => full_report(
            rc.n,
            rc.mu,
            &rc.sectors,
            rc.grid_size,
            rc.sample_count,
            rc.seed,
            &cfg,
        ),
    }
}

fn emit(report: &Report, rc: &RunConfig) -> std::io::Result<()> {
    let body = if rc.format == "csv" {
        report.to_csv()
    } else {
        report.to_json()
    };
    match &rc.out {
        Some(path) => std::fs::write(path, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn failure_record(stage: &str, err: &HrlError) -> String {
    serde_json::json!({
        "failure": stage,
        "detail": err.to_string(),
    })
    .to_string()
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("HRL_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let rc = match resolve(&cli) {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("{}", failure_record("config", &e));
            return ExitCode::from(2);
        }
    };
    match execute(&cli.command, &rc) {
        Ok(report) => {
            if let Err(e) = emit(&report, &rc) {
                eprintln!("{}", failure_record("output", &HrlError::Io(e)));
                return ExitCode::from(2);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ HrlError::Domain(_)) => {
            eprintln!("{}", failure_record("domain", &e));
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{}", failure_record("run", &e));
            ExitCode::from(1)
        }
    }
}
