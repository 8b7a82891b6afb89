use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use suspension_cli::commands;
use suspension_cli::config::{load_config, RunConfig};
use suspension_core::tuning::Objective;
use suspension_core::vehicle::ModelKind;

#[derive(Parser)]
#[command(name = "suspension", version, about = "Simulate and GA-tune vehicle suspensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for fitness evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration; defaults apply to every omitted key.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    #[arg(long, value_parser = parse_objective)]
    objective: Option<Objective>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the passive and/or fixed-gain active suspension.
    Simulate(RunArgs),
    /// Tune the active suspension with the genetic algorithm.
    Optimize(RunArgs),
    /// Tabulate passive vs active metrics of every run under a directory.
    Report { run_dir: PathBuf },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s {
        "qc" => Ok(ModelKind::Qc),
        "fc" => Ok(ModelKind::Fc),
        _ => Err(format!("expected qc or fc, got `{s}`")),
    }
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    match s {
        "lqr" => Ok(Objective::Lqr),
        "cb" => Ok(Objective::Cb),
        _ => Err(format!("expected lqr or cb, got `{s}`")),
    }
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            c.output_dir = Some(out.clone());
        }
        if let Some(seed) = self.seed {
            c.seed = Some(seed);
        }
        if let Some(model) = self.model {
            c.model = model;
        }
        if let Some(objective) = self.objective {
            c.objective = Some(objective);
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring --threads")?;
    }
    match cli.command {
        Command::Simulate(args) => {
            let config = args.resolve()?;
            let s = commands::simulate(&config)?;
            println!("wrote {} files to {}", s.files.len() + 1, commands::output_dir(&config).display());
        }
        Command::Optimize(args) => {
            let config = args.resolve()?;
            let s = commands::optimize(&config)?;
            if let Some(ga) = &s.ga {
                let cost = ga.best_cost.map_or_else(|| "inf".into(), |c| c.to_string());
                println!("best cost {cost} (feasible: {})", ga.feasible);
                for g in &ga.best {
                    println!("  {:<8} {}", g.name, g.value);
                }
            }
            println!("wrote {} files to {}", s.files.len() + 1, commands::output_dir(&config).display());
        }
        Command::Report { run_dir } => {
            let r = commands::report_to_dir(&run_dir)?;
            print!("{}", r.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
