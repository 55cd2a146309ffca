use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trisre_cli::{compare_reports, run_and_write, CliError, DiffStatus, ExperimentConfig, Pipeline, RunReport};

#[derive(Parser)]
#[command(name = "trisre", version, about = "Tail analysis of triangular stochastic recurrences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `sim.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run whichever pipeline the config names.
    Run(RunArgs),
    /// Tail indices of A1 and A4 and the regime.
    SolveIndex(RunArgs),
    /// Stationarity condition and top Lyapunov exponent.
    Stationarity(RunArgs),
    /// Forward and backward stationary samples, compared by KS.
    Simulate(RunArgs),
    /// Hill estimates and regular-variation diagnostics.
    Tails(RunArgs),
    /// Tail constants by closed form and by plateau.
    Constants(RunArgs),
    /// Spectral measure or spectral process checks.
    Spectral(RunArgs),
    /// Tail and spectral checks for the bivariate GARCH(1,1) model.
    GarchVerify(RunArgs),
    /// The full acceptance suite.
    Report {
        #[command(flatten)]
        args: RunArgs,
        /// Sample sizes cut by a factor of 20.
        #[arg(long)]
        quick: bool,
    },
    /// Compare two report.json files.
    Diff { a: PathBuf, b: PathBuf },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn load(args: &RunArgs, pipeline: Option<Pipeline>) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::from_json(&read(&args.config)?)?;
    if let Some(p) = pipeline {
        config.pipeline = p;
    }
    if let Some(s) = args.seed {
        config.sim.base_seed = s;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(o) = &args.out {
        config.output_dir = o.clone();
    }
    config.validate()?;
    Ok(config)
}

fn execute(config: &ExperimentConfig) -> Result<bool, CliError> {
    let report = run_and_write(config)?;
    for c in &report.results {
        let verdict = match c.pass {
            Some(true) => "ok  ",
            Some(false) => "FAIL",
            None => "    ",
        };
        println!("{verdict} {:<40} {}", c.name, c.value);
    }
    for e in &report.errors {
        println!("error in {}: {}", e.step, e.message);
    }
    println!(
        "{} {}: {} -> {}",
        report.pipeline,
        report.name,
        if report.pass { "PASS" } else { "FAIL" },
        config.output_dir.display()
    );
    Ok(report.pass)
}

fn diff(a: &Path, b: &Path) -> Result<bool, CliError> {
    let ra = RunReport::from_json(&read(a)?)?;
    let rb = RunReport::from_json(&read(b)?)?;
    let entries = compare_reports(&ra, &rb)?;
    let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
    for e in &entries {
        let status = serde_json::to_value(e.status).expect("status serializes");
        let delta = e.relative_delta.map_or_else(String::new, |d| format!(" ({:+.3e})", d));
        println!("{:<12} {:<40} {} -> {}{delta}", status.as_str().unwrap_or("?"), e.name, show(e.a), show(e.b));
    }
    let same = entries.iter().all(|e| e.status == DiffStatus::WithinTol);
    println!("{} differing records, {}", entries.len(), if same { "all within tolerance" } else { "some changed" });
    Ok(same)
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
    let result = match &cli.command {
        Command::Run(a) => load(a, None).and_then(|c| execute(&c)),
        Command::SolveIndex(a) => load(a, Some(Pipeline::SolveIndex)).and_then(|c| execute(&c)),
        Command::Stationarity(a) => load(a, Some(Pipeline::Stationarity)).and_then(|c| execute(&c)),
        Command::Simulate(a) => load(a, Some(Pipeline::Simulate)).and_then(|c| execute(&c)),
        Command::Tails(a) => load(a, Some(Pipeline::Tails)).and_then(|c| execute(&c)),
        Command::Constants(a) => load(a, Some(Pipeline::Constants)).and_then(|c| execute(&c)),
        Command::Spectral(a) => load(a, Some(Pipeline::Spectral)).and_then(|c| execute(&c)),
        Command::GarchVerify(a) => load(a, Some(Pipeline::GarchVerify)).and_then(|c| execute(&c)),
        Command::Report { args, quick } => load(args, Some(Pipeline::FullReport)).and_then(|mut c| {
            if *quick {
                c.scale = trisre::verify::Scale::Quick;
            }
            execute(&c)
        }),
        Command::Diff { a, b } => diff(a, b),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
