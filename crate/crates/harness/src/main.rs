//! Command-line front end. Exit codes: 0 when every asserted check passed,
//! 2 when the experiment ran but an assertion failed, 1 on configuration
//! or runtime errors (including usage mistakes).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dnls_harness::config::{ExperimentConfig, Kind};
use dnls_harness::experiments;
use dnls_harness::report::ReportFormat;

#[derive(Parser)]
#[command(
    name = "dnls",
    about = "Numerical laboratory for the lattice Schrödinger equation: spacing sweeps, growth studies, functional checks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (flat key = value with [sections])
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports, tables and plot scripts
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the configured random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count for independent sweep points (outputs do not depend on it)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Report format
    #[arg(long, value_parser = ["csv", "json"], default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and stream conservation diagnostics
    Simulate(RunArgs),
    /// Continuum-limit rate study with the four-channel error split
    Converge(RunArgs),
    /// Free-flow rate study (lattice flow vs continuum flow)
    LinearFlow(RunArgs),
    /// Static interpolation sweeps: projection, round trip, aliasing
    InterpTest(RunArgs),
    /// Aliasing-defect sweep only
    Aliasing(RunArgs),
    /// Long-time Sobolev-norm growth study
    Growth(RunArgs),
    /// Gagliardo-Nirenberg / space-time / bilinear uniformity checks
    FunctionalCheck(RunArgs),
}

impl Command {
    fn split(self) -> (Kind, RunArgs) {
        match self {
            Command::Simulate(a) => (Kind::Simulate, a),
            Command::Converge(a) => (Kind::Converge, a),
            Command::LinearFlow(a) => (Kind::LinearFlow, a),
            Command::InterpTest(a) => (Kind::InterpTest, a),
            Command::Aliasing(a) => (Kind::Aliasing, a),
            Command::Growth(a) => (Kind::Growth, a),
            Command::FunctionalCheck(a) => (Kind::FunctionalCheck, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let (kind, args) = cli.command.split();

    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = args.seed {
        cfg.set("experiment.seed", seed);
    }
    let format = if args.format == "csv" { ReportFormat::Csv } else { ReportFormat::Json };

    match experiments::run_and_write(kind, &cfg, args.jobs.max(1), &args.out, format) {
        Ok(report) => {
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            for a in &report.assessments {
                println!(
                    "{}: {} measured {:.6} bound {:.6} [{}]",
                    a.name,
                    if a.pass { "pass" } else { "FAIL" },
                    a.measured,
                    a.bound,
                    a.law
                );
            }
            println!(
                "{}: {} ({:.2}s)",
                kind.as_str(),
                if report.pass { "pass" } else { "FAIL" },
                report.runtime_s
            );
            if report.pass {
                ExitCode::from(0)
            } else {
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
