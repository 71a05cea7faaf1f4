use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use radgas::acceptance::{run_acceptance, AcceptanceConfig};
use radgas::runner::{convergence_study, run, to_json, write_atomic, OrderStatus};
use radgas::scenario::{Kind, Scenario};
use radgas::Error;

/// Worker count for the rayon pool; defaults to all cores.
const WORKERS_ENV: &str = "RADGAS_WORKERS";

#[derive(Parser)]
#[command(name = "radgas", version, about = "Radiating gas model laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Target {
    /// Scenario (or acceptance configuration) file.
    file: PathBuf,
    /// Validate and print a summary without writing anything.
    #[arg(long)]
    dry_run: bool,
    /// Output directory, overriding the file's `output` key.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Profile slices and property suite for a `profiles` scenario.
    Profiles(Target),
    /// Time evolution of a `run1d` or `run2d` scenario.
    Run(Target),
    /// Self-convergence study over nested grids.
    Converge(Target),
    /// The acceptance suite.
    Accept(Target),
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Scenario(_) | Error::Config(_) | Error::InvalidStates(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn load(target: &Target) -> Result<Scenario, Failure> {
    Scenario::from_file(&target.file).map_err(|e| match e {
        Error::Io(io) => Failure::Config(format!("{}: {io}", target.file.display())),
        other => other.into(),
    })
}

fn print_summary(s: &Scenario, out: &Path) {
    for (k, v) in s.summary() {
        println!("{k:>8}: {v}");
    }
    println!("{:>8}: {}", "hash", s.config_hash());
    println!("{:>8}: {}", "output", out.display());
}

fn simulate(target: &Target, want_profiles: bool) -> Result<bool, Failure> {
    let s = load(target)?;
    if (s.kind == Kind::Profiles) != want_profiles {
        let expected = if want_profiles { "profiles" } else { "run1d or run2d" };
        return Err(Failure::Config(format!("scenario kind {:?} is not {expected}", s.kind)));
    }
    let out = target.out.clone().unwrap_or_else(|| s.output.clone());
    if target.dry_run {
        print_summary(&s, &out);
        println!("scenario valid (dry run, nothing written)");
        return Ok(true);
    }
    let (traj, manifest) = run(&s, Some(&out))?;
    let report = &traj.report;
    for fit in &report.fits {
        let exponent = fit.fit.as_ref().map(|f| format!("{:.4}", f.fitted_exponent)).unwrap_or("-".into());
        println!("fit {:<12} exponent {exponent:>8} {}", fit.label, if fit.pass { "ok" } else { "FAIL" });
    }
    if let Some(reason) = &report.abort_reason {
        eprintln!("run aborted: {reason}");
    }
    for f in &report.must_pass_failures {
        eprintln!("must-pass failure: {f}");
    }
    println!(
        "{} files written to {} in {:.1} s",
        manifest.files.len() + 1,
        out.display(),
        manifest.wall_time_seconds
    );
    Ok(report.passed())
}

fn converge(target: &Target) -> Result<bool, Failure> {
    let s = load(target)?;
    let out = target.out.clone().unwrap_or_else(|| s.output.clone());
    if target.dry_run {
        print_summary(&s, &out);
        println!("convergence levels: {}", s.convergence.levels);
        return Ok(true);
    }
    let report = convergence_study(&s, s.convergence.levels)?;
    for field in &report.fields {
        let fmt = |v: &[f64]| v.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" ");
        println!("{:<3} L1 orders {}  Linf orders {}", field.field, fmt(&field.orders_l1), fmt(&field.orders_linf));
    }
    println!("status: {:?}", report.status);
    write_atomic(&out.join("order_report.json"), to_json(&report)?.as_bytes())?;
    Ok(report.status != OrderStatus::Unresolved)
}

fn accept(target: &Target) -> Result<bool, Failure> {
    let text = std::fs::read_to_string(&target.file)
        .map_err(|e| Failure::Config(format!("{}: {e}", target.file.display())))?;
    let config = AcceptanceConfig::parse(&text)?;
    let out = target
        .out
        .clone()
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out/acceptance"));
    if target.dry_run {
        println!("acceptance config {} valid (seed {}), output {}", config.name, config.seed, out.display());
        return Ok(true);
    }
    let start = Instant::now();
    let (report, timings) = run_acceptance(&config)?;
    for c in &report.criteria {
        println!("{}", c.line());
    }
    write_atomic(&out.join("acceptance_report.json"), to_json(&report)?.as_bytes())?;
    write_atomic(&out.join("acceptance_timings.json"), to_json(&timings)?.as_bytes())?;
    println!("total {:.1} s, report in {}", start.elapsed().as_secs_f64(), out.display());
    Ok(report.all_pass())
}

fn configure_workers() -> Result<(), Failure> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("{WORKERS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Run(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_workers().and_then(|()| match &cli.command {
        Command::Profiles(t) => simulate(t, true),
        Command::Run(t) => simulate(t, false),
        Command::Converge(t) => converge(t),
        Command::Accept(t) => accept(t),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
