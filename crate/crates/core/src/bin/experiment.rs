//! Monte Carlo experiment runner.
//!
//!   experiment run --config cfg.json --runs 100 --out results/
//!   experiment table --summary results/summary.json
//!   experiment trace --alpha2 1e-2 --s 1e-2 --seed 3 --out trace/

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::{error, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphere_projection::dynamics::{simulate_scenario, write_scenario_csv};
use sphere_projection::experiment::{
    run_monte_carlo, write_outputs, Estimator, ExperimentConfig, Summary,
};
use sphere_projection::gaussian::{run_gaussian_filter, run_gaussian_smoother, GaussianBelief};
use sphere_projection::projection::{run_vmf_filter, run_vmf_smoother};
use sphere_projection::{Error, NaturalParam, Result};

#[derive(Parser)]
#[command(
    name = "experiment",
    about = "VMF projection filter/smoother Monte Carlo study"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the (alpha2, s) sweep and write results.csv and summary.json.
    Run {
        /// JSON config file; defaults are used for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        /// Trajectory length in seconds.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of vmff,vmfs,gf,gs.
        #[arg(long, value_delimiter = ',')]
        estimators: Option<Vec<String>>,
    },
    /// Pretty-print a summary.json as a table.
    Table {
        #[arg(long)]
        summary: PathBuf,
    },
    /// Simulate one scenario and dump it with all four estimator trajectories as CSV.
    Trace {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-2)]
        alpha2: f64,
        #[arg(long, default_value_t = 1e-2)]
        s: f64,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "trace")]
        out: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_path(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn run(
    config: Option<PathBuf>,
    runs: Option<usize>,
    duration: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    estimators: Option<Vec<String>>,
) -> Result<bool> {
    let mut cfg = load_config(config.as_ref())?;
    if let Some(r) = runs {
        cfg.runs = r;
    }
    if let Some(d) = duration {
        cfg.duration_s = d;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    if let Some(list) = estimators {
        cfg.estimators = list
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse())
            .collect::<Result<Vec<Estimator>>>()?;
    }
    cfg.validate()?;

    let started = Instant::now();
    info!(
        "running {} cells x {} runs, {} s trajectories",
        cfg.cells().len(),
        cfg.runs,
        cfg.duration_s
    );
    let table = run_monte_carlo(&cfg)?;
    write_outputs(&table, &cfg.output_dir)?;
    info!("finished in {:.1} s", started.elapsed().as_secs_f64());
    print!("{}", Summary::from_table(&table).render_table());
    println!("results written to {}", cfg.output_dir.display());

    let empty = table.empty_cells();
    for (a, s, e) in &empty {
        error!("no successful runs for {e} in cell (alpha2={a}, s={s})");
    }
    Ok(empty.is_empty())
}

fn trace(
    config: Option<PathBuf>,
    alpha2: f64,
    s: f64,
    duration: Option<f64>,
    seed: u64,
    out: PathBuf,
) -> Result<()> {
    let mut cfg = load_config(config.as_ref())?;
    if let Some(d) = duration {
        cfg.duration_s = d;
    }
    let scenario_cfg = cfg.scenario_config(alpha2, s, seed);
    let scenario = simulate_scenario(&scenario_cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let model = scenario_cfg.model;
    std::fs::create_dir_all(&out).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;
    write_scenario_csv(&scenario, &out.join("scenario.csv"))?;

    let vf = run_vmf_filter(&scenario, s, &model, NaturalParam::UNIFORM)?;
    vf.write_csv(&out.join("vmff.csv"))?;
    run_vmf_smoother(&vf, &scenario, s)?.write_csv(&out.join("vmfs.csv"))?;
    let gf = run_gaussian_filter(&scenario, s, &model, GaussianBelief::uniform_sphere())?;
    gf.write_csv(&out.join("gf.csv"))?;
    run_gaussian_smoother(&gf, &scenario, s)?.write_csv(&out.join("gs.csv"))?;
    println!("trajectories written to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            runs,
            duration,
            seed,
            out,
            estimators,
        } => run(config, runs, duration, seed, out, estimators),
        Command::Table { summary } => Summary::from_path(&summary).map(|s| {
            print!("{}", s.render_table());
            true
        }),
        Command::Trace {
            config,
            alpha2,
            s,
            duration,
            seed,
            out,
        } => trace(config, alpha2, s, duration, seed, out).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
