use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jgsa_cli::config::{CliOverrides, ExperimentConfig, Method};
use jgsa_cli::report::{parse_report, report_diff};
use jgsa_cli::runner::run_experiment;
use jgsa_cli::HarnessError;

/// Domain-adaptation experiment runner.
#[derive(Parser)]
#[command(name = "jgsa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "t-max")]
        t_max: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        /// primal, linear, or rbf
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare all methods on the built-in synthetic benchmark.
    SynthDemo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare two report files, ignoring timing fields.
    ReportDiff { a: PathBuf, b: PathBuf },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch() -> Result<ExitCode, HarnessError> {
    match Cli::parse().command {
        Command::Run {
            config,
            method,
            k,
            t_max,
            beta,
            kernel,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::parse_file(&config)?;
            let overrides = CliOverrides {
                method,
                k,
                t_max,
                beta,
                kernel,
                seed,
                out,
            };
            overrides.apply(&mut cfg)?;
            let outcome = run_experiment(&cfg)?;
            print!("{}", jgsa_cli::report::format_report(&outcome.report));
            Ok(ExitCode::SUCCESS)
        }
        Command::SynthDemo { seed } => {
            println!("two-domain synthetic benchmark, seed {seed}");
            for method in [Method::None, Method::Pca, Method::Sa, Method::Jgsa] {
                let mut cfg = ExperimentConfig::default();
                cfg.method = method;
                cfg.seed = seed;
                let outcome = run_experiment(&cfg)?;
                for (name, acc) in &outcome.report.accuracies {
                    if method == Method::None || name != "raw" {
                        println!("  accuracy {name:>5}: {acc:.4}");
                    }
                }
                if let Some(post) = outcome.report.mmd_post {
                    println!("  divergence after {method}: {post:.6}");
                } else {
                    println!("  divergence before adaptation: {:.6}", outcome.report.mmd_pre);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ReportDiff { a, b } => {
            let parse = |p: &PathBuf| -> Result<_, HarnessError> {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    HarnessError::Data(format!("cannot read report {}: {e}", p.display()))
                })?;
                parse_report(&text)
            };
            let ra = parse(&a)?;
            let rb = parse(&b)?;
            let diffs = report_diff(&ra, &rb);
            if diffs.is_empty() {
                println!("reports match");
                Ok(ExitCode::SUCCESS)
            } else {
                for key in diffs {
                    println!("differs: {key}");
                }
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
