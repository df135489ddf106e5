use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypercmc::export::config::{example_config, RunConfig};
use hypercmc::export::pipeline::{self, parse_q_range};
use hypercmc::export::report::to_json;
use hypercmc::Error;

/// CMC surfaces in hyperbolic 3-space from holomorphic loop-group potentials.
///
/// Exit codes: 0 success, 1 hard error, 2 residual check failed (outputs still written).
#[derive(Parser)]
#[command(name = "hypercmc", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate, factorize, evaluate the Sym formula and write mesh, report and curves.
    Generate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the configuration and the potential without integrating.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep the Lawson deformation parameter q' over a:b:n.
    Deform {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_name = "A:B:N", allow_hyphen_values = true)]
        q_range: String,
    },
    /// Print a ready-made configuration (umbilic, revolution, radial, cylinder, trinoid).
    Examples { name: String },
    /// Like generate, but without the mesh.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
    },
}

fn status(passed: bool, failed: &[&str]) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("residual checks failed: {}", failed.join(", "));
        ExitCode::from(2)
    }
}

fn main_inner(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Command::Generate { config } => {
            let r = pipeline::generate(&RunConfig::load(&config)?)?;
            Ok(status(r.report.passed, &r.report.failed()))
        }
        Command::Diagnose { config } => {
            let r = pipeline::diagnose(&RunConfig::load(&config)?)?;
            Ok(status(r.report.passed, &r.report.failed()))
        }
        Command::Validate { config } => {
            let vr = pipeline::validate(&RunConfig::load(&config)?)?;
            print!("{}", to_json(&vr));
            Ok(ExitCode::SUCCESS)
        }
        Command::Deform { config, q_range } => {
            let qs = parse_q_range(&q_range)?;
            let rep = pipeline::deform(&RunConfig::load(&config)?, &qs)?;
            let failed: Vec<String> = rep.entries.iter().filter(|e| !e.pass).map(|e| format!("q'={}", e.q_prime)).collect();
            let failed: Vec<&str> = failed.iter().map(|s| s.as_str()).collect();
            Ok(status(rep.passed, &failed))
        }
        Command::Examples { name } => {
            print!("{}", example_config(&name)?.to_toml());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
