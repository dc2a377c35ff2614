//! Scenario runner: loads a config (file path or bundled name), executes the
//! requested verifier, and writes a deterministic JSON report.
//!
//! Exit codes: 0 all checks passed, 1 execution or configuration error,
//! 2 a check failed, 3 a required curvature certificate could not be
//! established. A batch exits with its most severe member (1 > 3 > 2 > 0).

mod config;
mod runner;

use clap::Parser;
use config::ScenarioConfig;
use finsler::error::Error;
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};

const BUNDLED: &[(&str, &str)] = &[
    ("asym-circle-heat", include_str!("../scenarios/asym-circle-heat.json")),
    ("asym-interval-pl-check", include_str!("../scenarios/asym-interval-pl-check.json")),
    ("bonnet-myers-grid", include_str!("../scenarios/bonnet-myers-grid.json")),
    ("certified-bochner", include_str!("../scenarios/certified-bochner.json")),
    ("circle-eigen", include_str!("../scenarios/circle-eigen.json")),
    ("circle-heat", include_str!("../scenarios/circle-heat.json")),
    ("euclidean-bishop-gromov", include_str!("../scenarios/euclidean-bishop-gromov.json")),
    (
        "euclidean-gaussian-curvature-scan",
        include_str!("../scenarios/euclidean-gaussian-curvature-scan.json"),
    ),
    ("funk-curvature-scan", include_str!("../scenarios/funk-curvature-scan.json")),
    ("gaussian-eigen", include_str!("../scenarios/gaussian-eigen.json")),
    ("gaussian-laplace-compare", include_str!("../scenarios/gaussian-laplace-compare.json")),
    ("gaussian-sharp-pl-check", include_str!("../scenarios/gaussian-sharp-pl-check.json")),
    ("gaussian-volume-bound", include_str!("../scenarios/gaussian-volume-bound.json")),
    ("sphere-bishop-gromov", include_str!("../scenarios/sphere-bishop-gromov.json")),
    ("sphere-laplace-compare", include_str!("../scenarios/sphere-laplace-compare.json")),
    (
        "weighted-euclidean-bishop-gromov",
        include_str!("../scenarios/weighted-euclidean-bishop-gromov.json"),
    ),
];

#[derive(Parser)]
#[command(
    name = "finsler-cli",
    version,
    about = "Runs reproducible curvature, volume, and heat-flow verification scenarios"
)]
struct Cli {
    /// Scenario JSON: a file path, or the name of a bundled scenario.
    /// A file may hold one scenario object or an array of them.
    config: Option<String>,

    /// Directory reports and CSV tables are written into.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Replace the seed of every scenario in this run.
    #[arg(long)]
    seed: Option<u64>,

    /// Print the bundled scenario names and exit.
    #[arg(long)]
    list_scenarios: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };

    if cli.list_scenarios {
        for (name, body) in BUNDLED {
            match serde_json::from_str::<ScenarioConfig>(body) {
                Ok(cfg) => println!("{name}  [{}]", cfg.verifier.name()),
                Err(e) => {
                    eprintln!("error: bundled scenario {name} is invalid: {e}");
                    std::process::exit(1);
                }
            }
        }
        std::process::exit(0);
    }

    let Some(arg) = &cli.config else {
        eprintln!("error: no scenario given; pass a JSON file or a bundled name (--list-scenarios)");
        std::process::exit(1);
    };
    let source = match load_source(arg) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    };
    let mut configs = match parse_configs(&source) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    };
    if let Some(seed) = cli.seed {
        for c in &mut configs {
            c.seed = seed;
        }
    }

    let results: Vec<(i32, String)> = configs
        .par_iter()
        .map(|c| match runner::run_scenario(c, &cli.out) {
            Ok(r) => {
                if r.passed {
                    (0, format!("{}: pass ({} checks)", r.scenario, r.verdicts.len()))
                } else {
                    let failed: Vec<&str> = r
                        .verdicts
                        .iter()
                        .filter(|v| !v.passed)
                        .map(|v| v.check.as_str())
                        .collect();
                    (2, format!("{}: FAIL ({})", r.scenario, failed.join("; ")))
                }
            }
            Err(Error::Uncertified(msg)) => (3, format!("{}: UNCERTIFIED ({msg})", c.name)),
            Err(e) => (1, format!("{}: ERROR ({e})", c.name)),
        })
        .collect();

    for (_, line) in &results {
        println!("{line}");
    }
    for severity in [1, 3, 2] {
        if results.iter().any(|(code, _)| *code == severity) {
            std::process::exit(severity);
        }
    }
    std::process::exit(0);
}

/// A config argument names either an existing file or a bundled scenario
/// (with or without the .json suffix).
fn load_source(arg: &str) -> Result<String, String> {
    let path = Path::new(arg);
    if path.exists() {
        return fs::read_to_string(path).map_err(|e| format!("reading {arg}: {e}"));
    }
    let stem = arg.strip_suffix(".json").unwrap_or(arg);
    for (name, body) in BUNDLED {
        if *name == stem {
            return Ok((*body).to_string());
        }
    }
    Err(format!("{arg}: not a file and not a bundled scenario (--list-scenarios)"))
}

fn parse_configs(source: &str) -> Result<Vec<ScenarioConfig>, String> {
    let value: serde_json::Value =
        serde_json::from_str(source).map_err(|e| format!("invalid JSON: {e}"))?;
    let configs = if value.is_array() {
        serde_json::from_value::<Vec<ScenarioConfig>>(value)
            .map_err(|e| format!("invalid scenario array: {e}"))?
    } else {
        vec![serde_json::from_value::<ScenarioConfig>(value)
            .map_err(|e| format!("invalid scenario: {e}"))?]
    };
    if configs.is_empty() {
        return Err("scenario array is empty".into());
    }
    Ok(configs)
}
