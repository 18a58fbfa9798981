use clap::{Args, Parser, Subcommand};
use finsler_douglas::par::Exec;
use finsler_douglas_cli::commands;
use finsler_douglas_cli::report::error_body;
use finsler_douglas_cli::{CliError, Overrides, Report, RunConfig};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Douglas curvature checks for general (α, β)-metrics.
#[derive(Parser)]
#[command(name = "douglas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the Douglas tensor and cross-check the two routes.
    Verify(Common),
    /// Grid residuals of the characterizing equation.
    PdeCheck(Common),
    /// Tabulate a reconstructed solution as CSV.
    Solve(Common),
    /// List catalog entries.
    Catalog(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration (optional for `catalog`).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sample-level parallelism.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Verify(c) => ("verify", c),
            Command::PdeCheck(c) => ("pde-check", c),
            Command::Solve(c) => ("solve", c),
            Command::Catalog(c) => ("catalog", c),
        }
    }
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn json_bytes(v: &impl serde::Serialize) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("reports serialize");
    b.push(b'\n');
    b
}

fn load(name: &str, common: &Common) -> Result<Option<RunConfig>, CliError> {
    let Some(path) = &common.config else {
        return if name == "catalog" {
            Ok(None)
        } else {
            Err(CliError::Config(format!("`{name}` needs --config <path>")))
        };
    };
    let mut cfg = RunConfig::load(path)?;
    cfg.apply(&Overrides {
        seed: common.seed,
        tol: common.tol,
        out: common.out.clone(),
    });
    cfg.validate(name)?;
    Ok(Some(cfg))
}

fn run(name: &'static str, common: &Common) -> Result<u8, CliError> {
    let start = Instant::now();
    let cfg = load(name, common)?;
    let exec = Exec::default();
    let out = cfg
        .as_ref()
        .and_then(|c| c.out.clone())
        .or_else(|| common.out.clone());
    let mut report: Report = match name {
        "verify" => commands::verify(cfg.as_ref().unwrap(), exec)?,
        "pde-check" => commands::pde_check(cfg.as_ref().unwrap(), exec)?,
        "solve" => {
            let cfg = cfg.as_ref().unwrap();
            let table = cfg
                .table
                .clone()
                .or_else(|| out.as_ref().map(|p| p.with_extension("csv")));
            let (report, csv) = commands::solve(cfg, exec, table.clone())?;
            match &table {
                Some(p) => write_out(Some(p), &csv)?,
                // without any path the table owns stdout and the report goes to stderr
                None => {
                    write_out(None, &csv)?;
                    let mut report = report;
                    report.wall_time_s = start.elapsed().as_secs_f64();
                    std::io::stderr()
                        .write_all(&json_bytes(&report))
                        .map_err(|e| CliError::Io(e.to_string()))?;
                    return Ok(report.exit_code());
                }
            }
            report
        }
        _ => commands::catalog_listing(cfg.as_ref())?,
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    write_out(out.as_deref(), &json_bytes(&report))?;
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let (name, common) = cli.command.parts();
    let result = match common.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new()
            .num_threads(k as usize)
            .build()
        {
            Ok(pool) => pool.install(|| run(name, common)),
            Err(e) => Err(CliError::Config(format!("cannot start {k} threads: {e}"))),
        },
        None => run(name, common),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let body = json_bytes(&error_body(name, &e));
            let _ = std::io::stdout().write_all(&body);
            eprintln!("douglas {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
