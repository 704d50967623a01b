//! Per-node and fusion-center energy accounting.
//!
//! Transmit/receive/sleep/acquisition energy per TDMA slot, handshake and
//! retransmission costs, and a battery ledger that separates out the
//! non-beneficial joules spent on handshakes whose reports were corrupted
//! or never delivered.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link::{LinkError, PowerLevel};

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("packet transmit time {t_pkt_s} s exceeds the slot {slot_s} s")]
    PacketExceedsSlot { t_pkt_s: f64, slot_s: f64 },
    #[error("negative duration {0} s")]
    NegativeDuration(f64),
    #[error("probability triple is inconsistent: p_shs {p_shs} != p_s_data * (1 - p_f_ack) = {expected}")]
    InconsistentProbabilities { p_shs: f64, expected: f64 },
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Receive-mode power draw, mW.
pub const P_RECEIVE_MW: f64 = 69.0;
/// Sleep-mode power draw, mW.
pub const P_SLEEP_MW: f64 = 3e-3;
/// Data-acquisition power draw, mW.
pub const P_ACQUISITION_MW: f64 = 11.4;
/// Data-acquisition window per round, seconds.
pub const T_ACQUISITION_S: f64 = 5e-3;
/// Per-packet processing energy, joules (booked once per successful handshake).
pub const E_PROCESSING_J: f64 = 12.66e-6;
/// Initial battery charge, joules.
pub const BATTERY_J: f64 = 15e3;
/// Energy of one acquisition window: P_DA * T_DA.
pub const E_ACQUISITION_J: f64 = P_ACQUISITION_MW * 1e-3 * T_ACQUISITION_S;

/// Slot and packet timing constants of the TDMA round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingProfile {
    /// Slot duration, seconds.
    pub slot_s: f64,
    /// Guard interval between consecutive slots, seconds.
    pub guard_s: f64,
    /// Data-packet transmit time, seconds.
    pub pkt_tx_s: f64,
    /// ACK transmit time, seconds.
    pub ack_tx_s: f64,
    /// Radio bit rate, bits per second.
    pub rate_bps: f64,
    /// Data-acquisition window, seconds.
    pub acq_s: f64,
}

impl TimingProfile {
    /// Builds the default profile for given packet and ACK lengths.
    pub fn new(pkt_bytes: u32, ack_bytes: u32) -> Result<Self, EnergyError> {
        Self::with_slot(pkt_bytes, ack_bytes, 4.78e-3, 100e-6, 250_000.0)
    }

    pub fn with_slot(
        pkt_bytes: u32,
        ack_bytes: u32,
        slot_s: f64,
        guard_s: f64,
        rate_bps: f64,
    ) -> Result<Self, EnergyError> {
        let pkt_tx_s = pkt_bytes as f64 * 8.0 / rate_bps;
        let ack_tx_s = ack_bytes as f64 * 8.0 / rate_bps;
        if pkt_tx_s > slot_s {
            return Err(EnergyError::PacketExceedsSlot { t_pkt_s: pkt_tx_s, slot_s });
        }
        if ack_tx_s > slot_s {
            return Err(EnergyError::PacketExceedsSlot { t_pkt_s: ack_tx_s, slot_s });
        }
        Ok(Self {
            slot_s,
            guard_s,
            pkt_tx_s,
            ack_tx_s,
            rate_bps,
            acq_s: T_ACQUISITION_S,
        })
    }
}

// ---------------------------------------------------------------------------
// Closed-form slot energies
// ---------------------------------------------------------------------------

/// Energy to transmit one packet: P_ct(m) * T_pkt.
pub fn tx_energy(level: &PowerLevel, pkt_time_s: f64) -> Result<f64, EnergyError> {
    if pkt_time_s < 0.0 {
        return Err(EnergyError::NegativeDuration(pkt_time_s));
    }
    Ok(level.consumed_mw * 1e-3 * pkt_time_s)
}

/// Sender energy over a whole slot: transmit, then listen for the rest.
pub fn slot_tx_energy(level: &PowerLevel, timing: &TimingProfile) -> Result<f64, EnergyError> {
    let e_dt = tx_energy(level, timing.pkt_tx_s)?;
    Ok(e_dt + P_RECEIVE_MW * 1e-3 * (timing.slot_s - timing.pkt_tx_s))
}

/// Expected sender energy until the handshake succeeds:
/// processing once, plus 1/p_shs slot transmissions.
pub fn sender_total_energy(
    level_data: &PowerLevel,
    p_shs: f64,
    timing: &TimingProfile,
) -> Result<f64, EnergyError> {
    if p_shs <= 0.0 {
        return Err(EnergyError::Link(LinkError::UnreachableLink));
    }
    let retries = 1.0 / p_shs;
    Ok(E_PROCESSING_J + retries * slot_tx_energy(level_data, timing)?)
}

/// Receiver energy of one successful handshake: listen for the data
/// packet, then transmit the ACK at level u.
pub fn receiver_handshake_energy(timing: &TimingProfile, level_ack: &PowerLevel) -> f64 {
    P_RECEIVE_MW * 1e-3 * (timing.slot_s - timing.ack_tx_s)
        + level_ack.consumed_mw * 1e-3 * timing.ack_tx_s
}

/// Receiver energy of a failed handshake: a full slot of listening with
/// no data packet arriving.
pub fn receiver_failed_energy(timing: &TimingProfile) -> f64 {
    P_RECEIVE_MW * 1e-3 * timing.slot_s
}

/// Expected receiver energy across all retransmissions, as the
/// three-branch expectation over (handshake ok, data ok but ACK lost,
/// data lost).
pub fn receiver_total_energy(
    p_s_data: f64,
    p_f_ack: f64,
    p_shs: f64,
    timing: &TimingProfile,
    level_ack: &PowerLevel,
) -> Result<f64, EnergyError> {
    let expected = p_s_data * (1.0 - p_f_ack);
    if (p_shs - expected).abs() > 1e-9 {
        return Err(EnergyError::InconsistentProbabilities { p_shs, expected });
    }
    if p_shs <= 0.0 {
        return Err(EnergyError::Link(LinkError::UnreachableLink));
    }
    let retries = 1.0 / p_shs;
    let e_shs = receiver_handshake_energy(timing, level_ack);
    let e_fhs = receiver_failed_energy(timing);
    let p_f_data = 1.0 - p_s_data;
    Ok(E_PROCESSING_J
        + retries * (p_shs * e_shs + p_s_data * p_f_ack * e_shs + p_f_data * e_fhs))
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

/// Energy buckets of one radio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBuckets {
    pub tx_j: f64,
    pub rx_j: f64,
    pub processing_j: f64,
    pub sleep_j: f64,
    pub acquisition_j: f64,
}

impl EnergyBuckets {
    pub fn total(&self) -> f64 {
        self.tx_j + self.rx_j + self.processing_j + self.sleep_j + self.acquisition_j
    }
}

/// What one node's slot cost and whether the joules counted for anything.
#[derive(Debug, Clone, Copy)]
pub struct SlotCharge {
    pub node: usize,
    /// Sender-side transmit energy (packet bursts).
    pub sender_tx_j: f64,
    /// Sender-side listening energy (slot remainders waiting for ACKs).
    pub sender_rx_j: f64,
    /// Sender-side packet-processing energy.
    pub sender_processing_j: f64,
    /// Receiver-side (fusion center) listening energy.
    pub fc_rx_j: f64,
    /// Receiver-side ACK transmit energy.
    pub fc_tx_j: f64,
    /// Receiver-side processing energy.
    pub fc_processing_j: f64,
    /// True when the handshake energy bought a valid, delivered report.
    pub beneficial: bool,
}

/// Battery ledger for all sensor nodes plus the fusion center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub per_node: Vec<EnergyBuckets>,
    pub fc: EnergyBuckets,
    /// Remaining battery per node, joules.
    pub battery_j: Vec<f64>,
    /// Remaining fusion-center battery, joules.
    pub fc_battery_j: f64,
    /// Per-node joules spent on corrupted or failed handshakes.
    pub non_beneficial_per_node_j: Vec<f64>,
    /// Fusion-center joules spent on corrupted or failed handshakes.
    pub fc_non_beneficial_j: f64,
    /// Nodes whose battery ran out, with the round it happened.
    pub dead_nodes: Vec<(usize, u32)>,
    initial_battery_j: f64,
}

impl EnergyLedger {
    pub fn new(n_nodes: usize) -> Self {
        Self::with_battery(n_nodes, BATTERY_J)
    }

    pub fn with_battery(n_nodes: usize, battery_j: f64) -> Self {
        Self {
            per_node: vec![EnergyBuckets::default(); n_nodes],
            fc: EnergyBuckets::default(),
            battery_j: vec![battery_j; n_nodes],
            fc_battery_j: battery_j,
            non_beneficial_per_node_j: vec![0.0; n_nodes],
            fc_non_beneficial_j: 0.0,
            dead_nodes: Vec::new(),
            initial_battery_j: battery_j,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.per_node.len()
    }

    pub fn initial_battery_j(&self) -> f64 {
        self.initial_battery_j
    }

    /// Total non-beneficial energy across nodes and the fusion center.
    pub fn non_beneficial_j(&self) -> f64 {
        self.fc_non_beneficial_j + self.non_beneficial_per_node_j.iter().sum::<f64>()
    }

    /// Total energy expended so far by everyone.
    pub fn total_spent_j(&self) -> f64 {
        self.fc.total() + self.per_node.iter().map(|b| b.total()).sum::<f64>()
    }

    /// Books one round of slot charges plus idle sleep and acquisition.
    ///
    /// `idle_sleep_s[i]` is how long node i slept this round. Nodes whose
    /// battery underflows are recorded in `dead_nodes`.
    pub fn account_round(&mut self, round: u32, charges: &[SlotCharge], idle_sleep_s: &[f64]) {
        for charge in charges {
            let b = &mut self.per_node[charge.node];
            b.tx_j += charge.sender_tx_j;
            b.rx_j += charge.sender_rx_j;
            b.processing_j += charge.sender_processing_j;
            let sender_cost =
                charge.sender_tx_j + charge.sender_rx_j + charge.sender_processing_j;
            self.battery_j[charge.node] -= sender_cost;

            self.fc.rx_j += charge.fc_rx_j;
            self.fc.tx_j += charge.fc_tx_j;
            self.fc.processing_j += charge.fc_processing_j;
            let fc_cost = charge.fc_rx_j + charge.fc_tx_j + charge.fc_processing_j;
            self.fc_battery_j -= fc_cost;

            if !charge.beneficial {
                self.non_beneficial_per_node_j[charge.node] += sender_cost;
                self.fc_non_beneficial_j += fc_cost;
            }
        }
        for (node, &sleep_s) in idle_sleep_s.iter().enumerate() {
            let sleep = P_SLEEP_MW * 1e-3 * sleep_s;
            self.per_node[node].sleep_j += sleep;
            self.per_node[node].acquisition_j += E_ACQUISITION_J;
            self.battery_j[node] -= sleep + E_ACQUISITION_J;
            if self.battery_j[node] <= 0.0
                && !self.dead_nodes.iter().any(|&(n, _)| n == node)
            {
                self.dead_nodes.push((node, round));
            }
        }
    }

    /// Largest relative violation of battery = initial - spent, per node.
    pub fn conservation_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, buckets) in self.per_node.iter().enumerate() {
            let err = (self.initial_battery_j - self.battery_j[i] - buckets.total()).abs()
                / self.initial_battery_j;
            worst = worst.max(err);
        }
        let fc_err = (self.initial_battery_j - self.fc_battery_j - self.fc.total()).abs()
            / self.initial_battery_j;
        worst.max(fc_err)
    }

    /// Serializes the per-node state as CSV rows for one round.
    pub fn csv_rows(&self, round: u32) -> String {
        let mut out = String::new();
        for (i, b) in self.per_node.iter().enumerate() {
            out.push_str(&format!(
                "{round},{i},{},{},{},{},{},{},{}\n",
                b.tx_j,
                b.rx_j,
                b.processing_j,
                b.sleep_j,
                b.acquisition_j,
                self.battery_j[i],
                self.non_beneficial_per_node_j[i],
            ));
        }
        out.push_str(&format!(
            "{round},fc,{},{},{},{},{},{},{}\n",
            self.fc.tx_j,
            self.fc.rx_j,
            self.fc.processing_j,
            self.fc.sleep_j,
            self.fc.acquisition_j,
            self.fc_battery_j,
            self.fc_non_beneficial_j,
        ));
        out
    }

    pub const CSV_HEADER: &'static str =
        "round,node,tx_J,rx_J,proc_J,sleep_J,acq_J,battery_J,non_beneficial_J\n";
}
