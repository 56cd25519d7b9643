use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quasiclassical::moment_algebra::build_bracket_table;
use quasiclassical::scenarios::{
    self, oracle_preset, transform_csv, Outcome, ScenarioConfig, ScenarioName, TransformTarget,
};
use quasiclassical::Error;

#[derive(Parser)]
#[command(name = "quasi", version, about = "Quasiclassical moment dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's output_dir or ./out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classification grid over the config's sweep ranges.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the truncated bracket table as JSON.
    Brackets {
        #[arg(long)]
        order: u32,
        #[arg(long, default_value_t = 1)]
        pairs: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare wavefunction evolution with moment dynamics.
    Oracle {
        /// harmonic or free
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a trajectory CSV to Casimir–Darboux or plane coordinates.
    Transform {
        #[arg(long)]
        to: String,
        #[arg(long)]
        input: PathBuf,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
    },
    /// Full second-order dynamics against the adiabatic approximation.
    AdiabaticCompare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn out_dir(cli: Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    cli.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn report(outcome: &Outcome) -> u8 {
    for c in &outcome.checks {
        let tag = if c.passed { "pass" } else { "FAIL" };
        println!("  {tag} {}: {:e} (threshold {:e})", c.name, c.value, c.threshold);
    }
    for a in &outcome.artifacts {
        println!("  wrote {}", a.display());
    }
    let status = if outcome.passed() { "PASS" } else { "FAIL" };
    println!("{}: {status}", outcome.scenario.as_str());
    if outcome.passed() {
        0
    } else {
        EXIT_CHECK
    }
}

fn load_config(path: &Path, force: Option<ScenarioName>) -> Result<ScenarioConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let Some(name) = force else {
        return ScenarioConfig::from_json(&text);
    };
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config {
        path: "<root>".into(),
        message: e.to_string(),
    })?;
    let obj = value.as_object_mut().ok_or_else(|| Error::Config {
        path: "<root>".into(),
        message: "config must be a JSON object".into(),
    })?;
    let expected = serde_json::to_value(name)?;
    match obj.get("scenario") {
        None => {
            obj.insert("scenario".into(), expected);
        }
        Some(v) if *v == expected => {}
        Some(v) => {
            return Err(Error::Config {
                path: "scenario".into(),
                message: format!("expected {expected}, found {v}"),
            })
        }
    }
    ScenarioConfig::from_json(&value.to_string())
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load_config(&config, None)?;
            let dir = out_dir(out, &cfg);
            Ok(report(&scenarios::run(&cfg, &dir)?))
        }
        Command::Sweep { config, out } => {
            let cfg = load_config(&config, None)?;
            let dir = out_dir(out, &cfg);
            Ok(report(&scenarios::sweep(&cfg, &dir)?))
        }
        Command::AdiabaticCompare { config, out } => {
            let cfg = load_config(&config, Some(ScenarioName::AdiabaticCompare))?;
            let dir = out_dir(out, &cfg);
            Ok(report(&scenarios::run(&cfg, &dir)?))
        }
        Command::Oracle { scenario, out } => {
            let cfg = oracle_preset(&scenario)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("out"));
            Ok(report(&scenarios::run(&cfg, &dir)?))
        }
        Command::Brackets { order, pairs, out } => {
            let table = build_bracket_table(order, pairs).map_err(|e| match e {
                Error::InvalidParameter(m) => Error::Config {
                    path: "order".into(),
                    message: m,
                },
                other => other,
            })?;
            let text = serde_json::to_string_pretty(&table.to_json())? + "\n";
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(if table.mismatches().is_empty() { 0 } else { EXIT_CHECK })
        }
        Command::Transform {
            to,
            input,
            output,
            mass,
        } => {
            let target: TransformTarget = to.parse().map_err(|e: Error| Error::Config {
                path: "to".into(),
                message: e.to_string(),
            })?;
            if !(mass > 0.0) {
                return Err(Error::Config {
                    path: "mass".into(),
                    message: format!("must be positive, got {mass}"),
                });
            }
            let text = std::fs::read_to_string(&input)?;
            let converted = transform_csv(&text, target, mass)?;
            match output {
                Some(p) => std::fs::write(p, converted)?,
                None => print!("{converted}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
