use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use piggyback_core::analytic::maxrev::{max_rev, MaxRevOptions};
use piggyback_core::analytic::{resilience, ClosedFormStrategy};
use piggyback_lab::runner::describe;
use piggyback_lab::{run, ConfigError, Document, ExperimentSpec, LabError};

/// Piggyback mining experiments.
#[derive(Parser)]
#[command(name = "piggyback", version)]
struct Cli {
    /// Experiment document; command-line flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output path; the JSON report goes next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Seeds per point.
    #[arg(long, global = true)]
    seeds: Option<u64>,
    /// Block events per run.
    #[arg(long, global = true)]
    horizon: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form evaluation over a grid (progress rate by default).
    Analytic,
    /// Independent runs of one scenario.
    Simulate,
    /// Runs over the values of one scenario field.
    Sweep,
    /// Reproduce fig2, fig3, fig4 or fig5.
    Figure { name: String },
    /// Least piggybacker power that defeats a deviant pool of power `ps`.
    Resilience {
        ps: f64,
        #[arg(long, value_enum, default_value = "selfish")]
        strategy: Closed,
    },
    /// Best revenue of a deviant pool `pd` that a piggybacker `po` tolerates.
    Maxrev { pd: f64, po: f64 },
}

#[derive(Clone, Copy, ValueEnum)]
enum Closed {
    Honest,
    Selfish,
}

fn document(cli: &Cli, kind: &str) -> Result<Document, LabError> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError::new(format!("{}: {e}", path.display())))?;
            Document::parse(&text)?
        }
        None => Document::default(),
    };
    doc.set("kind", kind);
    if let Some(seed) = cli.seed {
        doc.set("seed", seed.to_string());
    }
    if let Some(seeds) = cli.seeds {
        doc.set("seeds_per_point", seeds.to_string());
    }
    if let Some(horizon) = cli.horizon {
        doc.set("horizon", horizon.to_string());
    }
    if let Some(out) = &cli.out {
        doc.set("output", out.display().to_string());
    }
    Ok(doc)
}

fn in_unit(name: &str, v: f64) -> Result<f64, LabError> {
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(ConfigError::new(format!("{name} must lie in [0, 1), got {v}")).into())
    }
}

fn execute(cli: &Cli) -> Result<(), LabError> {
    let kind = match &cli.command {
        Command::Analytic => "analytic",
        Command::Simulate => "simulate",
        Command::Sweep => "sweep",
        Command::Figure { .. } => "figure",
        Command::Resilience { ps, strategy } => {
            let strategy = match strategy {
                Closed::Honest => ClosedFormStrategy::Honest,
                Closed::Selfish => ClosedFormStrategy::Selfish,
            };
            println!("{}", resilience(in_unit("ps", *ps)?, strategy)?);
            return Ok(());
        }
        Command::Maxrev { pd, po } => {
            let pd = in_unit("pd", *pd)?;
            if pd == 0.0 {
                return Err(ConfigError::new("pd must be positive").into());
            }
            let options = MaxRevOptions {
                seed: cli.seed.unwrap_or(0),
                ..MaxRevOptions::default()
            };
            let family = piggyback_core::analytic::maxrev::default_family();
            let best = max_rev(pd, in_unit("po", *po)?, &family, &options)?;
            println!("{} {}", best.rev, describe(&best.best));
            return Ok(());
        }
    };
    let mut doc = document(cli, kind)?;
    if let Command::Figure { name } = &cli.command {
        doc.set("figure", name.as_str());
    }
    let spec = ExperimentSpec::from_document(&doc)?;
    let summary = run(&spec)?;
    println!(
        "wrote {} ({} rows) and {}",
        summary.csv.display(),
        summary.rows,
        summary.json.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
