//! `qpic`: generate baseline datasets, train surrogates, run hybrid PIC
//! simulations and evaluate them.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;

/// A problem with the command line or configuration (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "qpic",
    version,
    about = "Hybrid quantum-classical particle-in-cell workbench"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Data-parallel training workers.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run baseline PIC per velocity and write frame files plus a dataset manifest
    /// into `dataset_dir` (`--out-dir` overrides it).
    Generate(Overrides),
    /// Train a surrogate on a generated dataset.
    Train(Overrides),
    /// Run a baseline or hybrid simulation.
    Simulate {
        /// `baseline` or `model:PATH` to a checkpoint.
        #[arg(long, default_value = "baseline", value_parser = commands::parse_solver)]
        solver: commands::SolverArg,
        /// Also run the baseline and record per-step field errors.
        #[arg(long)]
        pair_baseline: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Metrics and reports.
    #[command(subcommand)]
    Evaluate(EvalCommand),
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// Compare two paired-comparison files step by step.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Final phase-space files for the velocity-distribution distance.
        #[arg(long, requires = "phase_b")]
        phase_a: Option<PathBuf>,
        #[arg(long, requires = "phase_a")]
        phase_b: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Velocity histograms and energy distance of two phase-space files.
    Phase {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Growth rate and saturation level of a diagnostics file.
    Growth {
        #[arg(long)]
        diagnostics: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train and score the hybrid model over ansatz kinds and layer counts.
    Sweep(Overrides),
}

#[derive(Args, Debug, Clone)]
struct Overrides {
    /// Configuration overrides as `key=value`.
    #[arg(value_name = "KEY=VALUE")]
    values: Vec<String>,
}

impl GlobalArgs {
    fn resolve(&self, overrides: &Overrides) -> anyhow::Result<Config> {
        let mut values = overrides.values.clone();
        if let Some(s) = self.seed {
            values.push(format!("seed={s}"));
        }
        if let Some(w) = self.workers {
            values.push(format!("workers={w}"));
        }
        if let Some(d) = &self.out_dir {
            values.push(format!("out_dir={}", toml::Value::String(d.display().to_string())));
        }
        Config::load(self.config.as_deref(), &values)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Generate(o) => {
            // The dataset directory is the output of `generate`.
            let mut o = o;
            if let Some(d) = &g.out_dir {
                o.values
                    .push(format!("dataset_dir={}", toml::Value::String(d.display().to_string())));
            }
            commands::generate(&g.resolve(&o)?)
        }
        Command::Train(o) => commands::train(&g.resolve(&o)?),
        Command::Simulate {
            solver,
            pair_baseline,
            overrides,
        } => commands::simulate(&g.resolve(&overrides)?, &solver, pair_baseline),
        Command::Evaluate(e) => match e {
            EvalCommand::Compare {
                a,
                b,
                phase_a,
                phase_b,
                overrides,
            } => {
                let phases = phase_a.zip(phase_b);
                commands::compare(
                    &g.resolve(&overrides)?,
                    &a,
                    &b,
                    phases.as_ref().map(|(a, b)| (a.as_path(), b.as_path())),
                )
            }
            EvalCommand::Phase { a, b, overrides } => commands::phase(&g.resolve(&overrides)?, &a, &b),
            EvalCommand::Growth { diagnostics, overrides } => commands::growth(&g.resolve(&overrides)?, &diagnostics),
            EvalCommand::Sweep(o) => commands::sweep(&g.resolve(&o)?),
        },
    }
}

fn is_usage(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<UsageError>().is_some()
            || matches!(c.downcast_ref::<qpic_core::Error>(), Some(qpic_core::Error::Config(_)))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_usage(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
