use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use incproc::experiment::{emit_report, run_experiment, Command, ExperimentConfig, Format};
use incproc::Error;

/// Overrides the output directory unless `--out` is given.
const OUT_ENV: &str = "INCPROC_OUT";

#[derive(Parser)]
#[command(name = "incproc", version, about = "Seeded verification experiments for increasing processes")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Change of variables residual for a monotone f and path a.
    CovCheck(Common),
    /// Certified deficit enclosures along the staircase truncations.
    StaircaseDeficit(Common),
    /// Simulate truncated paths and check their Laplace transform.
    Simulate(Common),
    /// Probability that levels are left-accessible.
    AccessibilityScan(Common),
    /// Evaluate the generator at a list of levels.
    GeneratorEval(Common),
    /// Monte Carlo martingale test of the extended generator.
    MartingaleTest(Common),
    /// Pathwise integration by parts residuals.
    IbpCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    /// One tolerance; a list goes through --set tol=...
    #[arg(long)]
    tol: Option<f64>,
    /// Extra key=value settings, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Text,
}

fn split(sub: Sub) -> (Command, Common) {
    match sub {
        Sub::CovCheck(c) => (Command::CovCheck, c),
        Sub::StaircaseDeficit(c) => (Command::StaircaseDeficit, c),
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::AccessibilityScan(c) => (Command::AccessibilityScan, c),
        Sub::GeneratorEval(c) => (Command::GeneratorEval, c),
        Sub::MartingaleTest(c) => (Command::MartingaleTest, c),
        Sub::IbpCheck(c) => (Command::IbpCheck, c),
    }
}

fn config_pairs(command: Command, common: &Common) -> Result<Vec<(String, String)>, Error> {
    let mut pairs = Vec::new();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Environment {
            path: path.clone(),
            message: e.to_string(),
        })?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Usage {
                field: format!("{}:{}", path.display(), i + 1),
                message: "expected key=value".into(),
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    for item in &common.set {
        let (k, v) = item.split_once('=').ok_or_else(|| Error::Usage {
            field: format!("{command}.set"),
            message: format!("{item:?} is not key=value"),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let flags = [
        ("seed", common.seed.map(|v| v.to_string())),
        ("paths", common.paths.map(|v| v.to_string())),
        ("eps", common.eps.map(|v| v.to_string())),
        ("tol", common.tol.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            pairs.push((k.to_string(), v));
        }
    }
    let out = common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from));
    if let Some(out) = out {
        pairs.push(("out".into(), out.display().to_string()));
    }
    Ok(pairs)
}

fn run(command: Command, common: Common) -> Result<bool, Error> {
    let pairs = config_pairs(command, &common)?;
    let config = ExperimentConfig::from_pairs(command, &pairs)?;
    let report = run_experiment(&config)?;
    let format = match common.format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Text => Format::Text,
    };
    emit_report(&report, &config.out, format)?;
    print!("{}", report.summary_text());
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = split(cli.command);
    match run(command, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("incproc {command}: {e}");
            ExitCode::from(match e {
                Error::Usage { .. } => 2,
                Error::Environment { .. } => 4,
                _ => 3,
            })
        }
    }
}
