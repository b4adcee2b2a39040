use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use riskloop_cli::{
    cmd_cases, cmd_explain, cmd_replay, cmd_run, cmd_validate, CliError, RunOverrides,
};

#[derive(Parser)]
#[command(name = "riskloop", version, about = "Risk modelling, falsification and rule extraction for collaborative robot cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a .riskml model.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Derive assurance cases from a model as JSON.
    Cases {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a falsification campaign described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the evaluation budget.
        #[arg(long)]
        budget: Option<usize>,
        /// Simulator seed, repeatable; the first also seeds the search.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        /// Output directory; defaults to the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Induce rules from a campaign archive.
    Explain {
        /// Archive CSV written by `run`.
        archive: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Minimum leaf likelihood for a rule; defaults to the campaign's.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a single assignment given as a JSON object.
    Replay {
        assignment: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Simulator seed, repeatable to average as the campaign did.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Validate { model } => cmd_validate(&model),
        Command::Cases { model, out } => cmd_cases(&model, &out),
        Command::Run {
            config,
            budget,
            seeds,
            out,
        } => {
            let s = cmd_run(&config, &RunOverrides { budget, seeds, out })?;
            let e = &s.evaluations;
            Ok(format!(
                "{} evaluations, {} violation(s) of {}, best robustness {}\narchive: {}",
                e.evaluations,
                e.violations,
                s.event,
                e.best_robustness.map_or("-".into(), |r| r.to_string()),
                s.artifacts["archive"].display()
            ))
        }
        Command::Explain {
            archive,
            model,
            threshold,
            out,
        } => {
            let r = cmd_explain(&archive, &model, threshold, &out)?;
            let mut msg = format!(
                "{} rows, {} non-compliant; {} likelihood {} over {} samples\n",
                r.rows, r.non_compliance, r.event, r.likelihood.fraction, r.likelihood.samples
            );
            msg.push_str(&riskloop::explain::render_report(&r.rules));
            Ok(msg.trim_end().to_string())
        }
        Command::Replay {
            assignment,
            model,
            scenario,
            seeds,
            out,
        } => {
            let r = cmd_replay(&model, &scenario, &assignment, &seeds, &out)?;
            let triggered: Vec<&str> = r
                .verdict
                .per_event
                .iter()
                .filter(|(_, o)| o.triggered)
                .map(|(n, _)| n.as_str())
                .collect();
            Ok(format!(
                "{}: {} (triggered: {})",
                r.situation,
                r.verdict.label,
                if triggered.is_empty() { "none".into() } else { triggered.join(", ") }
            ))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
