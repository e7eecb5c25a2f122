use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use xzzx::verify::{verify_all, VerifyOptions};
use xzzx::{LatticeGeometry, StabilizerCode};

mod config;
mod experiment;
mod output;

use config::ExperimentConfig;
use experiment::RunOptions;

#[derive(Parser, Debug)]
#[command(name = "xzzx", version, about = "XZZX surface code simulations under biased noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, env = "XZZX_WORKERS", default_value_t = 0)]
        workers: usize,
        /// JSON-lines output; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the small-instance oracle suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fewer random instances and no exact ML comparison.
        #[arg(long)]
        quick: bool,
    },
    /// Print the structure of a code as JSON.
    Describe {
        /// `periodic-RxC` or `open-DXxDZ`, e.g. `periodic-2x3`.
        geometry: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refit stored JSON-lines batch records.
    Fit {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FitKind::Threshold)]
        model: FitKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project JSON-lines batch records to CSV.
    ExportCsv {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FitKind {
    Threshold,
    Subthreshold,
}

fn parse_geometry(s: &str) -> Result<LatticeGeometry> {
    let (kind, dims) = s.split_once('-').context("geometry looks like periodic-4x5 or open-3x5")?;
    let (a, b) = dims.split_once('x').context("dimensions look like 4x5")?;
    let (a, b): (usize, usize) = (a.parse()?, b.parse()?);
    let g = match kind {
        "periodic" => LatticeGeometry::Periodic { rows: a, cols: b },
        "open" => LatticeGeometry::OpenRectangular { d_x: a, d_z: b },
        other => bail!("unknown geometry kind {other:?}"),
    };
    g.validate()?;
    Ok(g)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seed, workers, out } => {
            let config = ExperimentConfig::load(&config)?;
            let summary = experiment::run(&config, &RunOptions { seed, workers, out })?;
            print!("{summary}");
            Ok(true)
        }
        Command::Verify { seed, quick } => {
            let mut options = VerifyOptions { seed, ..Default::default() };
            if quick {
                options.matching_graphs = 100;
                options.parity_trials = 1000;
                options.ml_dominance = false;
            }
            let report = verify_all(&options)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(report.all_passed())
        }
        Command::Describe { geometry, out } => {
            let code = StabilizerCode::xzzx(parse_geometry(&geometry)?)?;
            emit(&serde_json::to_string_pretty(&code.describe())?, out.as_ref())?;
            Ok(true)
        }
        Command::Fit { input, model, out } => {
            let batches = output::read_batches(&input)?;
            let mut summary = String::new();
            match model {
                FitKind::Threshold => experiment::summarise_thresholds(&mut summary, &batches)?,
                FitKind::Subthreshold => {
                    let points = batches.iter().map(|b| (b.eta, b.p, xzzx::stats::RatePoint::from(b)));
                    experiment::summarise_subthreshold(&mut summary, points)?;
                }
            }
            emit(summary.trim_end(), out.as_ref())?;
            Ok(true)
        }
        Command::ExportCsv { input, out } => {
            let n = output::export_csv(&input, &out)?;
            eprintln!("wrote {n} rows to {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
