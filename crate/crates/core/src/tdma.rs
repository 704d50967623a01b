//! Event-level TDMA round simulation.
//!
//! Builds the slot schedule, runs each node's handshake attempts against
//! a link whose SNR carries the node's attack budget as added
//! interference and its defense budget as a transmit boost, books
//! energies into the ledger, and aggregates per-round delivery metrics
//! for the fusion center.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{
    EnergyError, EnergyLedger, SlotCharge, TimingProfile, E_PROCESSING_J, P_RECEIVE_MW,
};
use crate::game::GameState;
use crate::game::NodeState;
use crate::link::{
    self, db_to_linear, Environment, LinkError, PowerLevel, ShadowMode,
};

#[derive(Debug, Error, PartialEq)]
pub enum TdmaError {
    #[error("schedule needs at least one node")]
    EmptySchedule,
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Total report payload produced by one node per round, bytes.
pub const REPORT_BYTES: u32 = 120;

/// Radio and geometry parameters shared by every link of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkProfile {
    pub data_level: PowerLevel,
    pub ack_level: PowerLevel,
    /// Payload bytes per data packet (D).
    pub payload_bytes: u32,
    /// Header bytes per data packet (H).
    pub header_bytes: u32,
    pub ack_bytes: u32,
    pub distance_m: f64,
    pub d0_m: f64,
    pub pl0_db: f64,
    pub shadow_mode: ShadowMode,
    /// Conversion from budget units to milliwatts on the link.
    pub budget_to_mw: f64,
    pub timing: TimingProfile,
    /// Attempt cap per packet before the link is declared unreachable.
    pub retry_cap: u32,
    /// Ground truth of the sensed spectrum this scenario.
    pub pu_present: bool,
    /// Votes required to declare the primary user present; defaults to
    /// a majority of all nodes.
    pub fusion_threshold: Option<usize>,
}

impl LinkProfile {
    pub fn new(data_level: u8, ack_level: u8) -> Result<Self, TdmaError> {
        let payload_bytes = 120;
        let header_bytes = 8;
        let ack_bytes = 12;
        let timing = TimingProfile::new(payload_bytes + header_bytes, ack_bytes)?;
        Ok(Self {
            data_level: PowerLevel::get(data_level)?,
            ack_level: PowerLevel::get(ack_level)?,
            payload_bytes,
            header_bytes,
            ack_bytes,
            distance_m: 125.0,
            d0_m: link::DEFAULT_D0_M,
            pl0_db: link::DEFAULT_PL0_DB,
            shadow_mode: ShadowMode::Stochastic,
            budget_to_mw: 1.0,
            timing,
            retry_cap: 10,
            pu_present: true,
            fusion_threshold: None,
        })
    }

    /// Data-packet length on the air: payload plus header.
    pub fn pkt_bytes(&self) -> u32 {
        self.payload_bytes + self.header_bytes
    }

    /// Packets needed to move one report at this payload size.
    pub fn packets_per_report(&self) -> u32 {
        REPORT_BYTES.div_ceil(self.payload_bytes)
    }
}

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

/// One TDMA round: an ordered, guard-separated slot per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub slots: Vec<(usize, f64, f64)>,
    pub guard_s: f64,
    pub round_length_s: f64,
}

/// Deterministic slot order by node index; round length is
/// n * T_s + (n - 1) * T_g.
pub fn build_schedule(n_nodes: usize, timing: &TimingProfile) -> Result<Schedule, TdmaError> {
    if n_nodes == 0 {
        return Err(TdmaError::EmptySchedule);
    }
    let slots = (0..n_nodes)
        .map(|i| {
            let start = i as f64 * (timing.slot_s + timing.guard_s);
            (i, start, timing.slot_s)
        })
        .collect();
    let round_length_s =
        n_nodes as f64 * timing.slot_s + (n_nodes - 1) as f64 * timing.guard_s;
    Ok(Schedule {
        slots,
        guard_s: timing.guard_s,
        round_length_s,
    })
}

// ---------------------------------------------------------------------------
// Slot simulation
// ---------------------------------------------------------------------------

/// What happened in one node's slot group.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub node: usize,
    /// Handshake attempts across all packets of the report.
    pub attempts: u32,
    /// All packets of the report reached the fusion center.
    pub delivered: bool,
    /// False when the node is excluded or suspected of hardware failure.
    pub report_valid: bool,
    pub energy_sender_j: f64,
    pub energy_receiver_j: f64,
}

/// Runs one node's report through its slot group.
///
/// The attack budget raises the interference floor of the forward link
/// while the defense budget boosts the transmitted signal; the ACK link
/// back to the node is interference-free. Each packet retries up to the
/// cap, booking sender and receiver energy per attempt.
pub fn simulate_slot<R: Rng + ?Sized>(
    node: usize,
    game: &GameState,
    env: &Environment,
    profile: &LinkProfile,
    rng: &mut R,
) -> Result<(SlotOutcome, SlotCharge), TdmaError> {
    let shadow = link::shadow_sample_db(profile.shadow_mode, env.shadow_sigma_db, rng);
    let pl_db = link::path_loss_db(env, profile.distance_m, profile.d0_m, profile.pl0_db, shadow)?;
    let gain = db_to_linear(-pl_db);
    let noise_mw = db_to_linear(env.noise_floor_dbm);

    let x_mw = game.defense.amount(node) * profile.budget_to_mw;
    let y_mw = game.attack.amount(node) * profile.budget_to_mw;
    let snr_fwd =
        gain * (profile.data_level.antenna_mw() + x_mw) / (noise_mw + y_mw);
    let snr_rev = gain * profile.ack_level.antenna_mw() / noise_mw;

    let p_data = link::packet_success_prob(snr_fwd, profile.pkt_bytes())?;
    let p_ack = link::packet_success_prob(snr_rev, profile.ack_bytes)?;

    let timing = &profile.timing;
    let sender_tx_per_attempt = profile.data_level.consumed_mw * 1e-3 * timing.pkt_tx_s;
    let sender_rx_per_attempt = P_RECEIVE_MW * 1e-3 * (timing.slot_s - timing.pkt_tx_s);
    let fc_rx_on_data = P_RECEIVE_MW * 1e-3 * (timing.slot_s - timing.ack_tx_s);
    let fc_tx_ack = profile.ack_level.consumed_mw * 1e-3 * timing.ack_tx_s;
    let fc_rx_on_silence = P_RECEIVE_MW * 1e-3 * timing.slot_s;

    let mut charge = SlotCharge {
        node,
        sender_tx_j: 0.0,
        sender_rx_j: 0.0,
        sender_processing_j: 0.0,
        fc_rx_j: 0.0,
        fc_tx_j: 0.0,
        fc_processing_j: 0.0,
        beneficial: false,
    };
    let mut attempts_total = 0u32;
    let mut delivered = true;
    for _ in 0..profile.packets_per_report() {
        let mut packet_ok = false;
        for _ in 0..profile.retry_cap {
            attempts_total += 1;
            charge.sender_tx_j += sender_tx_per_attempt;
            charge.sender_rx_j += sender_rx_per_attempt;
            let data_ok = rng.random::<f64>() < p_data;
            if data_ok {
                charge.fc_rx_j += fc_rx_on_data;
                charge.fc_tx_j += fc_tx_ack;
                let ack_ok = rng.random::<f64>() < p_ack;
                if ack_ok {
                    packet_ok = true;
                    break;
                }
            } else {
                charge.fc_rx_j += fc_rx_on_silence;
            }
        }
        if packet_ok {
            charge.sender_processing_j += E_PROCESSING_J;
            charge.fc_processing_j += E_PROCESSING_J;
        } else {
            delivered = false;
        }
    }

    let report_valid = game.statuses[node].state == NodeState::Benevolent;
    charge.beneficial = delivered && report_valid;
    let outcome = SlotOutcome {
        node,
        attempts: attempts_total,
        delivered,
        report_valid,
        energy_sender_j: charge.sender_tx_j + charge.sender_rx_j + charge.sender_processing_j,
        energy_receiver_j: charge.fc_rx_j + charge.fc_tx_j + charge.fc_processing_j,
    };
    Ok((outcome, charge))
}

// ---------------------------------------------------------------------------
// Round simulation
// ---------------------------------------------------------------------------

/// Per-round delivery and energy metrics, one JSON line per round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: u32,
    /// Packets that arrived intact from benevolent reports.
    pub correct_packets: u32,
    pub protected_fraction: f64,
    /// Fusion decision: primary user declared present.
    pub fc_decision: bool,
    #[serde(rename = "energy_delta_J")]
    pub energy_delta_j: f64,
}

/// Runs every slot of one round, books the ledger, and fuses the
/// delivered reports by majority vote.
pub fn simulate_round<R: Rng + ?Sized>(
    game: &GameState,
    env: &Environment,
    profile: &LinkProfile,
    ledger: &mut EnergyLedger,
    rng: &mut R,
) -> Result<(RoundMetrics, Vec<SlotOutcome>), TdmaError> {
    let n = game.n_nodes();
    let schedule = build_schedule(n, &profile.timing)?;
    let spent_before = ledger.total_spent_j();

    let mut outcomes = Vec::with_capacity(n);
    let mut charges = Vec::with_capacity(n);
    let mut idle_sleep = vec![0.0f64; n];
    for &(node, _, _) in &schedule.slots {
        let (outcome, charge) = simulate_slot(node, game, env, profile, rng)?;
        idle_sleep[node] =
            (schedule.round_length_s - outcome.attempts as f64 * profile.timing.slot_s).max(0.0);
        outcomes.push(outcome);
        charges.push(charge);
    }
    ledger.account_round(game.round, &charges, &idle_sleep);

    let correct_packets: u32 = outcomes
        .iter()
        .filter(|o| o.delivered && o.report_valid)
        .map(|_| profile.packets_per_report())
        .sum();
    let valid_delivered = outcomes.iter().filter(|o| o.delivered && o.report_valid).count();
    let threshold = profile.fusion_threshold.unwrap_or(n.div_ceil(2));
    let votes_for_present = if profile.pu_present { valid_delivered } else { 0 };
    let fc_decision = votes_for_present >= threshold;

    let metrics = RoundMetrics {
        round: game.round,
        correct_packets,
        protected_fraction: game.protected_fraction(),
        fc_decision,
        energy_delta_j: ledger.total_spent_j() - spent_before,
    };
    Ok((metrics, outcomes))
}
