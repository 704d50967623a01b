//! Scenario orchestration: wiring the game, the TDMA round simulator and
//! the energy ledger into reproducible runs, sweeps and emitted tables.

mod config;
mod emit;

pub use config::{derive_seed, expand_grid, parse_kv, ScenarioConfig};
pub use emit::{
    emit_reports, protection_comparison_csv, write_pd_snr_csv, write_roc_csv, EmitFormat,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{EnergyError, EnergyLedger};
use crate::game::{Game, GameError, RoundRecord};
pub use crate::game::Strategy;
use crate::link::Environment;
use crate::tdma::{simulate_round, RoundMetrics, TdmaError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Tdma(#[from] TdmaError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("nothing to emit: empty report list")]
    NothingToEmit,
}

impl From<crate::link::LinkError> for ExperimentError {
    fn from(e: crate::link::LinkError) -> Self {
        ExperimentError::Tdma(TdmaError::Link(e))
    }
}

/// Headline numbers of one finished scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub protected_fraction_final: f64,
    pub mean_correct_packets: f64,
    pub total_non_beneficial_j: f64,
    pub converged: bool,
    pub rounds_to_equilibrium: Option<u32>,
}

/// Everything a scenario run produced.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ScenarioConfig,
    pub per_round: Vec<RoundMetrics>,
    pub game_rounds: Vec<RoundRecord>,
    pub summary: Summary,
    pub ledger: EnergyLedger,
    /// Ledger snapshots, one CSV block per round.
    pub ledger_rows: String,
}

impl ExperimentReport {
    /// Recomputes the summary from the per-round records; both must agree.
    pub fn recomputed_summary(&self) -> Summary {
        let protected_fraction_final = self
            .per_round
            .last()
            .map(|m| m.protected_fraction)
            .unwrap_or(1.0);
        let mean_correct_packets = if self.per_round.is_empty() {
            0.0
        } else {
            self.per_round.iter().map(|m| m.correct_packets as f64).sum::<f64>()
                / self.per_round.len() as f64
        };
        let rounds_to_equilibrium = self
            .game_rounds
            .iter()
            .find(|r| r.equilibrium || r.total_compromise)
            .map(|r| r.round);
        Summary {
            protected_fraction_final,
            mean_correct_packets,
            total_non_beneficial_j: self.ledger.non_beneficial_j(),
            converged: rounds_to_equilibrium.is_some(),
            rounds_to_equilibrium,
        }
    }
}

/// Runs one scenario: the game loop and the radio round side by side.
///
/// The game's equilibrium short-circuit stops budget movement once
/// neither player can improve, but the radio keeps transmitting reports
/// every round, so packet and energy metrics cover the full horizon.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let mut game = Game::new(config.game_config())?;
    let env = Environment::get(config.environment);
    let profile = config.link_profile()?;
    let mut ledger = EnergyLedger::new(config.n_nodes);
    // The radio draws from its own stream so game-side randomness
    // (hardware faults, random defense) never shifts link outcomes.
    let mut link_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, u64::MAX));

    let mut per_round = Vec::with_capacity(config.rounds as usize);
    let mut game_rounds = Vec::with_capacity(config.rounds as usize);
    let mut ledger_rows = String::new();
    for _ in 0..config.rounds {
        let record = game.step_round()?;
        let (metrics, _) = simulate_round(&game.state, &env, &profile, &mut ledger, &mut link_rng)?;
        ledger_rows.push_str(&ledger.csv_rows(record.round));
        per_round.push(metrics);
        game_rounds.push(record);
    }

    let rounds_to_equilibrium = game_rounds
        .iter()
        .find(|r| r.equilibrium || r.total_compromise)
        .map(|r| r.round);
    let summary = Summary {
        protected_fraction_final: per_round
            .last()
            .map(|m| m.protected_fraction)
            .unwrap_or(1.0),
        mean_correct_packets: per_round.iter().map(|m| m.correct_packets as f64).sum::<f64>()
            / per_round.len().max(1) as f64,
        total_non_beneficial_j: ledger.non_beneficial_j(),
        converged: rounds_to_equilibrium.is_some(),
        rounds_to_equilibrium,
    };
    Ok(ExperimentReport {
        config: config.clone(),
        per_round,
        game_rounds,
        summary,
        ledger,
        ledger_rows,
    })
}

/// Outcome of one sweep entry; failures never abort the sweep.
pub type SweepEntry = Result<ExperimentReport, String>;

/// Runs scenarios independently, preserving input order in the output.
///
/// Parallelism is capped by the `SSDF_ARENA_THREADS` environment
/// variable when set.
pub fn sweep(configs: &[ScenarioConfig], parallelism: usize) -> Vec<SweepEntry> {
    let env_cap = std::env::var("SSDF_ARENA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(usize::MAX);
    let threads = parallelism.min(env_cap).clamp(1, configs.len().max(1));

    if threads <= 1 {
        return configs
            .iter()
            .map(|c| run_scenario(c).map_err(|e| e.to_string()))
            .collect();
    }
    let results: std::sync::Mutex<Vec<Option<SweepEntry>>> =
        std::sync::Mutex::new((0..configs.len()).map(|_| None).collect());
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if index >= configs.len() {
                    break;
                }
                let entry = run_scenario(&configs[index]).map_err(|e| e.to_string());
                results.lock().unwrap()[index] = Some(entry);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|e| e.expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::EnvironmentName;

    fn fast_config() -> ScenarioConfig {
        let mut config = ScenarioConfig::default();
        config.n_nodes = 10;
        config.rounds = 5;
        config.environment = EnvironmentName::UL;
        config
    }

    #[test]
    fn zero_attack_protects_everything_under_all_strategies() {
        for strategy in [Strategy::Proposed, Strategy::Random, Strategy::EqualWeight] {
            let mut config = fast_config();
            config.attack_total = 0.0;
            config.hw_failure_rate = 0.0;
            config.strategy = strategy;
            let report = run_scenario(&config).unwrap();
            assert_eq!(report.summary.protected_fraction_final, 1.0);
        }
    }

    #[test]
    fn summary_is_recomputable_from_the_rounds() {
        let mut config = fast_config();
        config.attack_total = 4.0;
        let report = run_scenario(&config).unwrap();
        assert_eq!(report.summary, report.recomputed_summary());
    }

    #[test]
    fn ledger_identity_holds_every_round() {
        let mut config = fast_config();
        config.attack_total = 4.0;
        let report = run_scenario(&config).unwrap();
        assert!(report.ledger.conservation_error() < 1e-12);
        assert_eq!(report.per_round.len(), 5);
        assert_eq!(report.game_rounds.len(), 5);
    }

    #[test]
    fn sweep_preserves_order_and_isolates_failures() {
        let good = fast_config();
        let mut bad = fast_config();
        bad.rounds = 0;
        let entries = sweep(&[good.clone(), bad, good], 2);
        assert_eq!(entries.len(), 3);
        assert!(entries[0].is_ok());
        assert!(entries[1].is_err());
        assert!(entries[2].is_ok());
    }

    #[test]
    fn sweep_is_deterministic_across_parallelism() {
        let configs: Vec<ScenarioConfig> = [8.0, 17.0]
            .iter()
            .map(|&y| {
                let mut c = fast_config();
                c.attack_total = y;
                c
            })
            .collect();
        let serial = sweep(&configs, 1);
        let parallel = sweep(&configs, 2);
        for (a, b) in serial.iter().zip(&parallel) {
            let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
            assert_eq!(
                serde_json::to_string(&a.summary).unwrap(),
                serde_json::to_string(&b.summary).unwrap()
            );
        }
    }
}
