use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pilotadapt::scenario::{self, gains_csv, gains_from_trace, write_outputs, ScenarioFile};
use pilotadapt::{FeedbackMode, MonteCarloMse, RunReport, SimParams};

#[derive(Parser)]
#[command(
    name = "pilotadapt",
    version,
    about = "Adaptive OFDM pilot pattern simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Feedback {
    Explicit,
    Implicit,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a flight and write traces, CDFs and gains.
    Run {
        /// Scenario TOML file, or `default` for the built-in flight.
        #[arg(long, default_value = "default")]
        scenario: String,
        /// Fraction of the full stage durations to simulate.
        #[arg(long, default_value_t = 0.05)]
        time_scale: f64,
        /// Number of independent runs; run `i` uses seed `base_seed + i`.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        base_seed: u64,
        #[arg(long, value_enum, default_value_t = Feedback::Explicit)]
        feedback: Feedback,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Text file of precomputed MSE values, read before and written after the run.
        #[arg(long)]
        mse_cache: Option<PathBuf>,
        /// Window length of the MSE oracle in OFDM symbols.
        #[arg(long, default_value_t = pilotadapt::mse_cache::DEFAULT_ORACLE_SYMBOLS)]
        oracle_symbols: usize,
        #[arg(long, default_value_t = pilotadapt::mse_cache::DEFAULT_ORACLE_TRIALS)]
        oracle_trials: usize,
        #[arg(long, default_value_t = 1)]
        oracle_seed: u64,
    },
    /// Print the temporal and spectral correlation codebook.
    Codebook,
    /// Recompute the percentile gain table from a trace.
    Gains {
        /// Path to a `trace.csv`.
        trace: PathBuf,
        /// Percentiles to report.
        #[arg(long, value_delimiter = ',', default_value = "10,50,90")]
        percentiles: Vec<f64>,
    },
    /// Print the built-in scenario as a TOML file.
    Scenario,
}

fn load_scenario(arg: &str) -> Result<ScenarioFile> {
    if arg == "default" {
        return Ok(ScenarioFile::builtin());
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading scenario {arg}"))?;
    scenario::parse_scenario(&text).with_context(|| format!("parsing scenario {arg}"))
}

#[allow(clippy::too_many_arguments)]
fn run(
    scenario_arg: &str,
    time_scale: f64,
    seeds: u64,
    base_seed: u64,
    feedback: Feedback,
    out: &Path,
    mse_cache: Option<&Path>,
    oracle_symbols: usize,
    oracle_trials: usize,
    oracle_seed: u64,
) -> Result<()> {
    if seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let file = load_scenario(scenario_arg)?;
    let mut params = SimParams::<f64>::default();
    file.apply(&mut params)?;
    params.feedback = match feedback {
        Feedback::Explicit => FeedbackMode::Explicit,
        Feedback::Implicit => FeedbackMode::Implicit,
    };
    let fixed = file.fixed_configs()?;
    let oracle = MonteCarloMse::new(
        params.window.with_symbols(oracle_symbols)?,
        oracle_trials,
        oracle_seed,
        params.n_taps,
    )?;
    if let Some(path) = mse_cache {
        let n = oracle.cache.load(path)?;
        eprintln!("loaded {n} cached MSE values from {}", path.display());
    }
    let mut runs = Vec::new();
    for i in 0..seeds {
        let seed = base_seed.wrapping_add(i);
        let report =
            scenario::run_scenario(&file.stage, &fixed, &params, time_scale, seed, &oracle)?;
        eprintln!("seed {seed}: {} epochs", report.records.len());
        runs.push(report);
    }
    if let Some(path) = mse_cache {
        oracle.cache.save(path)?;
    }
    let report = RunReport::concat(runs)?;
    write_outputs(&report, out)?;
    print!("{}", std::fs::read_to_string(out.join("summary.txt"))?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            time_scale,
            seeds,
            base_seed,
            feedback,
            out,
            mse_cache,
            oracle_symbols,
            oracle_trials,
            oracle_seed,
        } => run(
            &scenario,
            time_scale,
            seeds,
            base_seed,
            feedback,
            &out,
            mse_cache.as_deref(),
            oracle_symbols,
            oracle_trials,
            oracle_seed,
        ),
        Command::Codebook => {
            let p = SimParams::<f64>::default();
            print!("{}", p.codebook().to_table());
            Ok(())
        }
        Command::Gains { trace, percentiles } => {
            let text = std::fs::read_to_string(&trace)
                .with_context(|| format!("reading {}", trace.display()))?;
            print!("{}", gains_csv(&gains_from_trace(&text, &percentiles)?));
            Ok(())
        }
        Command::Scenario => {
            print!("{}", ScenarioFile::builtin().to_toml()?);
            Ok(())
        }
    }
}
