//! Round-based simulator of a fusion center defending wireless sensor
//! spectrum reports against a rational budget-redistribution attacker.
//!
//! The crate is organized around five subsystems:
//!
//! - [`game`] — the leader/follower budget game: per-report utilities,
//!   node classification, strong/weak list partitioning, budget
//!   redistribution for both players, equilibrium detection, and an
//!   exhaustive best-response oracle for small instances.
//! - [`detector`] — matched-filter detection math: test statistic,
//!   detection/false-alarm probabilities, threshold inversion, ROC and
//!   Pd-vs-SNR curves, and effective SNR under attack/defense budgets.
//! - [`link`] — log-distance path loss with shadowing over six measured
//!   environments, Tmote-Sky power levels, BER, and packet/handshake
//!   success probabilities.
//! - [`energy`] — per-slot transmit/receive/sleep/acquisition energy,
//!   handshake and retransmission costs, and a battery ledger that tracks
//!   non-beneficial energy lost to corrupted or failed reports.
//! - [`tdma`] — the event-level round simulator that schedules one slot
//!   per node, resolves handshakes with attack interference applied to
//!   the slot SNR, and books energies.
//!
//! [`experiment`] wires everything into reproducible scenario runs,
//! sweeps, and CSV/JSONL emission.

pub mod detector;
pub mod energy;
pub mod experiment;
pub mod game;
pub mod link;
pub mod qfunc;
pub mod tdma;

pub use experiment::{run_scenario, sweep, ExperimentReport, ScenarioConfig, Strategy};
pub use game::{BudgetVector, GameConfig, GameState, NodeState, RoundRecord};
pub use link::{Environment, EnvironmentName, PowerLevel};
