//! Scenario runner for the fiberqed simulations: reads a TOML config, runs
//! the selected scenarios and writes CSV tables plus `manifest.json`.

pub mod config;
pub mod error;
pub mod gaps;
pub mod output;
pub mod scenarios;

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

pub use config::Config;
pub use error::{CliError, ConfigError};
use output::Sink;
use scenarios::Setup;

/// Numbers returned by one run, also echoed into the manifest.
#[derive(Debug, Default, Serialize)]
pub struct RunResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<scenarios::ModesSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<scenarios::SpectrumSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<scenarios::LineSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steadystate: Option<Vec<scenarios::SteadyRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner: Option<Vec<scenarios::WignerRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Vec<scenarios::GapRow>>,
}

/// Scenario names selected by `scenario` (`all` expands to every scenario).
pub fn expand(scenario: &str) -> Result<Vec<&'static str>, CliError> {
    let names = &config::SCENARIOS[..config::SCENARIOS.len() - 1];
    if scenario == "all" {
        return Ok(names.to_vec());
    }
    names
        .iter()
        .find(|n| **n == scenario)
        .map(|n| vec![*n])
        .ok_or_else(|| ConfigError::field("scenario", format!("unknown scenario `{scenario}`")).into())
}

/// Runs `scenario` (or the config's, or `all`) into `out`.
pub fn run(config: &Config, scenario: Option<&str>, out: &Path, seed: Option<u64>) -> Result<RunResults, CliError> {
    let start = Instant::now();
    let name = scenario.or(config.scenario.as_deref()).unwrap_or("all").to_string();
    let selected = expand(&name)?;
    config.validate()?;
    let setup = Setup::new(config, seed)?;
    let mut sink = Sink::new(out)?;
    let mut results = RunResults::default();
    for s in &selected {
        log::info!("running scenario {s}");
        match *s {
            "modes" => results.modes = Some(scenarios::run_modes(&setup, &mut sink)?),
            "spectrum" => results.spectrum = Some(scenarios::run_spectrum(&setup, &mut sink)?),
            "line" => results.line = Some(scenarios::run_line(&setup, &mut sink)?),
            "steadystate" => results.steadystate = Some(scenarios::run_steadystate(&setup, &mut sink)?),
            "wigner" => results.wigner = Some(scenarios::run_wigner(&setup, &mut sink)?),
            "gaps" => results.gaps = Some(scenarios::run_gaps(&setup, &mut sink)?),
            _ => unreachable!("expand returns known names"),
        }
    }
    let manifest = manifest(config, &name, seed, &sink, &results, start.elapsed().as_secs_f64());
    sink.write_json("manifest.json", &manifest)?;
    Ok(results)
}

fn manifest(config: &Config, scenario: &str, seed: Option<u64>, sink: &Sink, results: &RunResults, wall: f64) -> Value {
    let w = &config.wigner;
    json!({
        "software": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": scenario,
        "seed": seed,
        "threads": rayon::current_num_threads(),
        "units": {
            "length": "lambda (resonant wavelength)",
            "rate": "gamma (single-atom free-space decay rate)",
            "time": "1/gamma",
            "wavenumber": "2 pi / lambda",
        },
        "tolerances": {
            "steady_state_residual": fiberqed::lindblad::RESIDUAL_TOL,
            "eigen_tolerance": w.eigen_tolerance,
            "marginal_tail": w.tail,
            "convexity": fiberqed::tomography::legendre::CONVEXITY_TOL,
        },
        "config": config,
        "files": sink.files,
        "results": results,
        "wall_time_seconds": wall,
    })
}
