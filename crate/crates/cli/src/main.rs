use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fiberqed_cli::{run, Config};

#[derive(Debug, Parser)]
#[command(name = "fiberqed", version, about = "Chiral waveguide QED scenarios: CSV tables and a JSON manifest")]
struct Args {
    /// TOML config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// modes, spectrum, line, steadystate, wigner, gaps or all.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the parameter sweeps (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Seeds the eigen-solver start-vector perturbation.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    // dense kernels stay sequential so output does not depend on --threads
    faer::set_global_parallelism(faer::Par::Seq);
    if args.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let config = match &args.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    };
    let result = config.map_err(Into::into).and_then(|c| run(&c, args.scenario.as_deref(), &args.out, args.seed));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
