//! `krein-ext`: boundary matrices of Krein-von Neumann and Friedrichs
//! extensions as JSON reports.

mod config;
mod job;
mod operator;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::{parse_param, JobConfig, Overrides, Task};

#[derive(Debug, Parser)]
#[command(name = "krein-ext", version, about = "Krein-von Neumann and Friedrichs boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the operator and compute the Krein boundary matrices.
    Compute(Flags),
    /// Run every invariant check.
    Verify(Flags),
    /// Exact matrices for a pure operator.
    ClosedForm(Flags),
}

#[derive(Debug, clap::Args)]
struct Flags {
    /// TOML job file with [operator], [tolerances] and [tasks].
    #[arg(long)]
    config: Option<PathBuf>,
    /// pure, fourth-order, four-coeff or a catalog name such as pure-4.
    #[arg(long)]
    preset: Option<String>,
    /// Order 2N of the operator.
    #[arg(long)]
    order: Option<usize>,
    /// Block size M.
    #[arg(long)]
    block_size: Option<usize>,
    /// Endpoints as A,B; each may be an expression such as sqrt(2)*pi.
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
    #[arg(long = "task", value_enum, num_args = 1.., value_delimiter = ',')]
    tasks: Vec<Task>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Upper end of the positivity scan.
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Preset parameter NAME=EXPR, repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, String)>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the spectral scan.
    #[arg(long, env = "KREIN_EXT_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(job::EXIT_CONFIG),
            };
        }
    };
    let (flags, defaults): (Flags, &[Task]) = match cli.command {
        Command::Compute(f) => (f, &[Task::Validate, Task::Krein]),
        Command::Verify(f) => (f, &[Task::VerifyAll]),
        Command::ClosedForm(f) => (f, &[Task::ClosedForm]),
    };
    let overrides = Overrides {
        preset: flags.preset,
        order: flags.order,
        block_size: flags.block_size,
        interval: flags.interval,
        params: flags.params,
        tasks: flags.tasks,
        rel_tol: flags.rel_tol,
        abs_tol: flags.abs_tol,
        lambda_max: flags.lambda_max,
        threads: flags.threads,
        output: flags.out,
    };
    let job = match JobConfig::load(flags.config.as_deref(), overrides, defaults) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("krein-ext: {e}");
            return ExitCode::from(job::EXIT_CONFIG);
        }
    };
    let outcome = job::run(&job);
    if let Some(report) = &outcome.report {
        let text = report.to_json();
        match &job.output {
            Some(path) => {
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("krein-ext: {}: {e}", path.display());
                    return ExitCode::from(job::EXIT_CONFIG);
                }
            }
            None => print!("{text}"),
        }
    }
    if let Some(msg) = &outcome.message {
        eprintln!("krein-ext: {msg}");
    }
    ExitCode::from(outcome.code)
}
