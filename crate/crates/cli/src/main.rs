use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dea_beam::materials::EnergyPath;
use dea_beam::validation::{check_derivatives, compare_energy_paths};
use dea_beam::{build_scenario, write_outputs, Error, ScenarioConfig};
use serde_json::json;

/// Electromechanically coupled beam simulator for dielectric elastomer actuators.
#[derive(Parser, Debug)]
#[command(name = "dea-beam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write trajectory.csv, energy.csv and summary.json.
    Simulate {
        config: PathBuf,
        /// Output directory (defaults to `output.dir` of the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep every N-th time level.
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long, value_parser = parse_energy_path)]
        energy_path: Option<EnergyPath>,
    },
    /// Run the scenario with the analytic and the quadrature energy and
    /// report the largest relative deviation.
    ValidateEnergy { config: PathBuf },
    /// Compare the Newton tangent and the potential gradient with central
    /// finite differences.
    CheckDerivatives {
        config: PathBuf,
        /// Random states for the gradient check.
        #[arg(long, default_value_t = 10)]
        states: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Relative error above which the check fails.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
}

fn parse_energy_path(s: &str) -> Result<EnergyPath, String> {
    s.parse::<EnergyPath>().map_err(|e| e.to_string())
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": kind, "message": message }).to_string()
}

fn run(cli: Cli) -> Result<(serde_json::Value, bool), Error> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            stride,
            energy_path,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(path) = energy_path {
                cfg.solver.energy_path = path;
            }
            if let Some(stride) = stride {
                cfg.output.stride = stride;
            }
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
            let scenario = build_scenario(&cfg)?;
            let (summary, files) = write_outputs(&scenario, &dir, cfg.output.stride)?;
            Ok((
                json!({
                    "summary": summary,
                    "trajectory": files.trajectory,
                    "energy": files.energy,
                    "summary_path": files.summary,
                }),
                true,
            ))
        }
        Command::ValidateEnergy { config } => {
            let scenario = build_scenario(&ScenarioConfig::load(&config)?)?;
            let report = compare_energy_paths(&scenario)?;
            Ok((json!(report), true))
        }
        Command::CheckDerivatives {
            config,
            states,
            seed,
            tolerance,
        } => {
            let scenario = build_scenario(&ScenarioConfig::load(&config)?)?;
            let report = check_derivatives(&scenario, states, seed)?;
            let pass = report.tangent_relative_error <= tolerance && report.gradient_relative_error <= tolerance;
            Ok((json!({ "report": report, "tolerance": tolerance, "pass": pass }), pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            eprintln!("{}", error_json("UsageError", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok((value, pass)) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("report serializes"));
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
