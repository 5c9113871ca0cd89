use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rieszkit::scenario::{
    bundled, run_scenario, validate, RunError, RunOptions, ScenarioConfig, Verdict, BUNDLED,
};

const EXIT_OK: u8 = 0;
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INVALID_CONFIG: u8 = 2;
const EXIT_SOLVER_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "rieszkit",
    version,
    about = "Scenario runner for discrete Riesz potential theory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Path to a scenario TOML file, or the name of a bundled scenario.
    #[arg(long)]
    config: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json plus CSV tables.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        /// Output directory for report.json and CSV tables.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Cap on the number of points per assembled kernel matrix.
        #[arg(long)]
        max_points: Option<usize>,
        /// Worker thread budget (accepted for interface stability; the
        /// solvers are single-threaded and results never depend on it).
        #[arg(long)]
        threads: Option<usize>,
        /// Run only the named checks (repeatable).
        #[arg(long = "check")]
        checks: Vec<String>,
    },
    /// Statically validate a scenario configuration.
    Validate {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// List the bundled scenarios.
    List,
}

fn load_config(arg: &str) -> Result<ScenarioConfig, String> {
    let text = if let Some(t) = bundled(arg) {
        t.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| format!("cannot read config {arg:?} (and no bundled scenario has that name): {e}"))?
    };
    ScenarioConfig::from_toml(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for (name, _) in BUNDLED {
                println!("{name}");
            }
            ExitCode::from(EXIT_OK)
        }
        Command::Validate { config } => {
            let cfg = match load_config(&config.config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("configuration error: {e}");
                    return ExitCode::from(EXIT_INVALID_CONFIG);
                }
            };
            let diags = validate(&cfg);
            if diags.is_empty() {
                println!("ok: scenario {:?} is valid", cfg.name);
                ExitCode::from(EXIT_OK)
            } else {
                for d in &diags {
                    eprintln!("{}: {}", d.field, d.message);
                }
                ExitCode::from(EXIT_INVALID_CONFIG)
            }
        }
        Command::Run { config, out, seed, max_points, threads: _threads, checks } => {
            let cfg = match load_config(&config.config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("configuration error: {e}");
                    return ExitCode::from(EXIT_INVALID_CONFIG);
                }
            };
            for c in &checks {
                if !cfg.checks.iter().any(|k| k == c) {
                    eprintln!("check filter {c:?} does not name a check of this scenario");
                    return ExitCode::from(EXIT_INVALID_CONFIG);
                }
            }
            let opts = RunOptions { seed_override: seed, max_points, check_filter: checks };
            let report = match run_scenario(&cfg, &opts) {
                Ok(r) => r,
                Err(e @ RunError::Invalid(_)) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_INVALID_CONFIG);
                }
                Err(e @ RunError::Solver { .. }) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_SOLVER_ERROR);
                }
            };
            for c in &report.checks {
                let v = match c.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "FAIL",
                    Verdict::Inconclusive => "inconclusive",
                };
                println!("{:<16} {}", c.check, v);
            }
            println!(
                "{}: {} passed, {} failed, {} inconclusive",
                report.scenario,
                report.summary.passed,
                report.summary.failed,
                report.summary.inconclusive
            );
            if let Err(e) = report.write_to(&out) {
                eprintln!("cannot write report to {}: {e}", out.display());
                return ExitCode::from(EXIT_SOLVER_ERROR);
            }
            println!("report written to {}", out.join("report.json").display());
            if report.all_passed() {
                ExitCode::from(EXIT_OK)
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
    }
}
