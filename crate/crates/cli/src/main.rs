//! Command-line front end: single runs, grid sweeps, and detection-curve
//! tables.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on runtime
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use ssdf_arena::detector::PuModel;
use ssdf_arena::experiment::{
    emit_reports, expand_grid, run_scenario, sweep, write_pd_snr_csv, write_roc_csv, EmitFormat,
    ExperimentError, ScenarioConfig,
};
use ssdf_arena::link::{self, Environment, EnvironmentName, PowerLevel};

#[derive(Parser)]
#[command(
    name = "ssdf-arena",
    about = "Attack-defense budget game over a TDMA sensor uplink",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit its tables.
    Run(RunArgs),
    /// Expand a grid file and run every scenario in it.
    Sweep(SweepArgs),
    /// Emit detection-curve tables without running a scenario.
    Curves(CurvesArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory for the emitted tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Metric stream format.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid file: comma-separated values become sweep axes.
    #[arg(long)]
    grid: PathBuf,
    /// Worker threads (capped by SSDF_ARENA_THREADS).
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct CurvesArgs {
    /// Which curve family to emit: roc or pd-snr.
    #[arg(long)]
    kind: String,
    /// Environment fixing the link SNR of the curve.
    #[arg(long, default_value = "OL")]
    env: String,
    /// Primary-user model for pd-snr curves.
    #[arg(long, default_value = "nonfluct")]
    pu: String,
    /// False-alarm rate held fixed for pd-snr curves.
    #[arg(long, default_value_t = 0.1)]
    pf: f64,
    /// Observation window length multiplying the per-sample SNR.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Transmit power level for the link geometry.
    #[arg(long, default_value_t = 31)]
    power_level: u8,
    /// Distance between every sensor and the fusion center, meters.
    #[arg(long, default_value_t = 125.0)]
    distance: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// CLI-level overrides applied on top of the config file.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    attack_budget: Option<f64>,
    #[arg(long)]
    defense_budget: Option<f64>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pu: Option<String>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
}

impl Overrides {
    fn apply(&self, config: &mut ScenarioConfig) -> Result<(), ExperimentError> {
        let pairs: [(&str, Option<String>); 10] = [
            ("env", self.env.clone()),
            ("attack_budget", self.attack_budget.map(|v| v.to_string())),
            ("defense_budget", self.defense_budget.map(|v| v.to_string())),
            ("strategy", self.strategy.clone()),
            ("rounds", self.rounds.map(|v| v.to_string())),
            ("nodes", self.nodes.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("pu", self.pu.clone()),
            ("xi", self.xi.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
        ];
        for (key, value) in pairs {
            if let Some(value) = value {
                config.apply(key, &value)?;
            }
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config_error = err
                .downcast_ref::<ExperimentError>()
                .map(|e| matches!(e, ExperimentError::Config(_)))
                .unwrap_or(false);
            if config_error {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn dispatch() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Curves(args) => curves(args),
    }
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<ScenarioConfig> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(ScenarioConfig::from_kv_text(&text)?)
        }
        None => Ok(ScenarioConfig::default()),
    }
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let mut config = load_config(&args.config)?;
    args.overrides.apply(&mut config)?;
    config.validate()?;
    let format: EmitFormat = args.format.parse().map_err(ExperimentError::Config)?;
    let report = run_scenario(&config)?;
    let files = emit_reports(std::slice::from_ref(&report), format, &args.out)?;
    println!(
        "protected {:.1}% | mean correct packets {:.2} | non-beneficial {:.4} J | converged {}",
        100.0 * report.summary.protected_fraction_final,
        report.summary.mean_correct_packets,
        report.summary.total_non_beneficial_j,
        report.summary.converged,
    );
    for file in files {
        println!("wrote {}", file.display());
    }
    Ok(())
}

fn run_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.grid)
        .with_context(|| format!("reading {}", args.grid.display()))?;
    let configs = expand_grid(&text)?;
    let format: EmitFormat = args.format.parse().map_err(ExperimentError::Config)?;
    let entries = sweep(&configs, args.parallelism);
    let mut reports = Vec::new();
    for (index, entry) in entries.into_iter().enumerate() {
        match entry {
            Ok(report) => reports.push(report),
            Err(message) => eprintln!("scenario {index} failed: {message}"),
        }
    }
    if reports.is_empty() {
        anyhow::bail!(ExperimentError::NothingToEmit);
    }
    let files = emit_reports(&reports, format, &args.out)?;
    println!(
        "{} scenarios -> {} files under {}",
        reports.len(),
        files.len(),
        args.out.display()
    );
    Ok(())
}

/// Statistic-level SNR of the configured link geometry: the per-sample
/// link SNR scaled by the observation window length.
fn curve_snr(args: &CurvesArgs) -> anyhow::Result<f64> {
    let name: EnvironmentName = args.env.parse()?;
    let env = Environment::get(name);
    let level = PowerLevel::get(args.power_level)?;
    let pl = link::path_loss_db(
        &env,
        args.distance,
        link::DEFAULT_D0_M,
        link::DEFAULT_PL0_DB,
        0.0,
    )?;
    let snr_db = link::link_snr_db(link::received_power_dbm(&level, pl), &env);
    Ok(link::db_to_linear(snr_db) * args.samples as f64)
}

fn curves(args: CurvesArgs) -> anyhow::Result<()> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    match args.kind.as_str() {
        "roc" => {
            let pf_grid: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
            let snr = curve_snr(&args)?;
            let path = args
                .out
                .join(format!("roc_{}.csv", args.env.to_ascii_uppercase()));
            write_roc_csv(&pf_grid, snr, &path)?;
            println!("wrote {}", path.display());
        }
        "pd-snr" => {
            let model: PuModel = args.pu.parse().map_err(ExperimentError::Config)?;
            let grid: Vec<f64> = (-20..=20).map(|db| db as f64).collect();
            let path = args.out.join("pd_snr.csv");
            write_pd_snr_csv(&grid, args.pf, model, &path)?;
            println!("wrote {}", path.display());
        }
        other => {
            anyhow::bail!(ExperimentError::Config(format!(
                "kind: expected 'roc' or 'pd-snr', got '{other}'"
            )));
        }
    }
    Ok(())
}
