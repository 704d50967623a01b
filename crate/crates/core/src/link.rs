//! Physical-layer link budget for Tmote-Sky radios.
//!
//! Log-distance path loss with log-normal shadowing over six measured
//! environments, received power, link SNR, BER for the spread-spectrum
//! radio, and packet / handshake success probabilities. All probability
//! formulas consume linear SNR; dB-to-linear conversion is centralized
//! here.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qfunc::q;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("distance {distance} m is below the reference distance {d0} m")]
    DistanceBelowReference { distance: f64, d0: f64 },
    #[error("reference distance must be positive, got {0}")]
    InvalidReference(f64),
    #[error("SNR and process gain must be nonnegative, got {0}")]
    NegativeInput(f64),
    #[error("handshake success probability is zero: link unreachable")]
    UnreachableLink,
    #[error("unknown power level {0}; valid levels are 3,7,11,15,19,23,27,31")]
    UnknownPowerLevel(u8),
    #[error("unknown environment '{0}'")]
    UnknownEnvironment(String),
    #[error("bad override line '{0}'")]
    BadOverride(String),
}

/// Default process gain: 2 Mchip/s spread over 250 kb/s.
pub const PROCESS_GAIN: f64 = 8.0;

/// Default reference distance for the path-loss model, meters.
pub const DEFAULT_D0_M: f64 = 1.0;

/// Default free-space loss at the reference distance, dB (2.4 GHz band).
pub const DEFAULT_PL0_DB: f64 = 40.2;

// ---------------------------------------------------------------------------
// Environments
// ---------------------------------------------------------------------------

/// The six measured propagation environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvironmentName {
    /// Outdoor line-of-sight.
    OL,
    /// Outdoor non-line-of-sight.
    ON,
    /// Underground line-of-sight.
    UL,
    /// Underground non-line-of-sight.
    UN,
    /// Indoor line-of-sight.
    IL,
    /// Indoor non-line-of-sight.
    IN,
}

impl EnvironmentName {
    pub const ALL: [EnvironmentName; 6] = [
        EnvironmentName::OL,
        EnvironmentName::ON,
        EnvironmentName::UL,
        EnvironmentName::UN,
        EnvironmentName::IL,
        EnvironmentName::IN,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EnvironmentName::OL => "OL",
            EnvironmentName::ON => "ON",
            EnvironmentName::UL => "UL",
            EnvironmentName::UN => "UN",
            EnvironmentName::IL => "IL",
            EnvironmentName::IN => "IN",
        }
    }
}

impl std::str::FromStr for EnvironmentName {
    type Err = LinkError;

    fn from_str(s: &str) -> Result<Self, LinkError> {
        match s.to_ascii_uppercase().as_str() {
            "OL" => Ok(EnvironmentName::OL),
            "ON" => Ok(EnvironmentName::ON),
            "UL" => Ok(EnvironmentName::UL),
            "UN" => Ok(EnvironmentName::UN),
            "IL" => Ok(EnvironmentName::IL),
            "IN" => Ok(EnvironmentName::IN),
            other => Err(LinkError::UnknownEnvironment(other.to_string())),
        }
    }
}

impl std::fmt::Display for EnvironmentName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Path-loss parameters of one propagation environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub name: EnvironmentName,
    /// Path-loss exponent n.
    pub path_loss_exponent: f64,
    /// Shadow-fading standard deviation, dB.
    pub shadow_sigma_db: f64,
    /// Receiver noise floor, dBm.
    pub noise_floor_dbm: f64,
}

/// The measured parameter set for all six environments.
pub const ENVIRONMENTS: [Environment; 6] = [
    Environment {
        name: EnvironmentName::OL,
        path_loss_exponent: 2.42,
        shadow_sigma_db: 3.12,
        noise_floor_dbm: -93.0,
    },
    Environment {
        name: EnvironmentName::ON,
        path_loss_exponent: 3.51,
        shadow_sigma_db: 2.95,
        noise_floor_dbm: -93.0,
    },
    Environment {
        name: EnvironmentName::UL,
        path_loss_exponent: 1.45,
        shadow_sigma_db: 2.45,
        noise_floor_dbm: -92.0,
    },
    Environment {
        name: EnvironmentName::UN,
        path_loss_exponent: 3.15,
        shadow_sigma_db: 3.19,
        noise_floor_dbm: -92.0,
    },
    Environment {
        name: EnvironmentName::IL,
        path_loss_exponent: 1.64,
        shadow_sigma_db: 3.29,
        noise_floor_dbm: -88.0,
    },
    Environment {
        name: EnvironmentName::IN,
        path_loss_exponent: 2.38,
        shadow_sigma_db: 2.25,
        noise_floor_dbm: -88.0,
    },
];

impl Environment {
    pub fn get(name: EnvironmentName) -> Environment {
        ENVIRONMENTS[EnvironmentName::ALL
            .iter()
            .position(|&e| e == name)
            .expect("all names present")]
    }

    /// Applies `key = value` overrides to a copy of the built-in table.
    ///
    /// Keys take the form `<ENV>.<field>` with fields `path_loss_exponent`,
    /// `shadow_sigma_db`, `noise_floor_dbm`. Lines starting with `#` and
    /// blank lines are skipped.
    pub fn table_with_overrides(text: &str) -> Result<Vec<Environment>, LinkError> {
        let mut table = ENVIRONMENTS.to_vec();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LinkError::BadOverride(line.to_string()))?;
            let (env, field) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| LinkError::BadOverride(line.to_string()))?;
            let name: EnvironmentName = env.trim().parse()?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| LinkError::BadOverride(line.to_string()))?;
            let row = table
                .iter_mut()
                .find(|r| r.name == name)
                .expect("table covers all names");
            match field.trim() {
                "path_loss_exponent" => row.path_loss_exponent = value,
                "shadow_sigma_db" => row.shadow_sigma_db = value,
                "noise_floor_dbm" => row.noise_floor_dbm = value,
                _ => return Err(LinkError::BadOverride(line.to_string())),
            }
        }
        Ok(table)
    }
}

// ---------------------------------------------------------------------------
// Power levels
// ---------------------------------------------------------------------------

/// One register setting of the Tmote-Sky transmit amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLevel {
    /// Register level m.
    pub level: u8,
    /// Consumed transmission power, mW.
    pub consumed_mw: f64,
    /// Antenna output power, dBm.
    pub antenna_dbm: f64,
}

/// The eight datasheet power levels.
pub const POWER_LEVELS: [PowerLevel; 8] = [
    PowerLevel { level: 3, consumed_mw: 25.5, antenna_dbm: -25.0 },
    PowerLevel { level: 7, consumed_mw: 29.7, antenna_dbm: -15.0 },
    PowerLevel { level: 11, consumed_mw: 33.6, antenna_dbm: -10.0 },
    PowerLevel { level: 15, consumed_mw: 37.5, antenna_dbm: -7.0 },
    PowerLevel { level: 19, consumed_mw: 41.7, antenna_dbm: -5.0 },
    PowerLevel { level: 23, consumed_mw: 45.6, antenna_dbm: -3.0 },
    PowerLevel { level: 27, consumed_mw: 49.5, antenna_dbm: -1.0 },
    PowerLevel { level: 31, consumed_mw: 52.2, antenna_dbm: 0.0 },
];

impl PowerLevel {
    pub fn get(level: u8) -> Result<PowerLevel, LinkError> {
        POWER_LEVELS
            .iter()
            .copied()
            .find(|p| p.level == level)
            .ok_or(LinkError::UnknownPowerLevel(level))
    }

    /// Antenna output power converted to linear milliwatts.
    pub fn antenna_mw(&self) -> f64 {
        db_to_linear(self.antenna_dbm)
    }
}

// ---------------------------------------------------------------------------
// Shadowing
// ---------------------------------------------------------------------------

/// How the shadow-fading term of the path-loss formula is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowMode {
    /// No shadowing term (deterministic link, reproduces closed forms).
    Deterministic,
    /// Zero-mean Gaussian draw with the environment's sigma, per link per round.
    Stochastic,
    /// The literal constant +sigma added to every link.
    ConstantSigma,
}

/// Draws one shadow sample in dB for the given mode.
pub fn shadow_sample_db<R: Rng + ?Sized>(mode: ShadowMode, sigma_db: f64, rng: &mut R) -> f64 {
    match mode {
        ShadowMode::Deterministic => 0.0,
        ShadowMode::Stochastic => {
            let normal = Normal::new(0.0, sigma_db).expect("sigma >= 0");
            normal.sample(rng)
        }
        ShadowMode::ConstantSigma => sigma_db,
    }
}

// ---------------------------------------------------------------------------
// Link budget
// ---------------------------------------------------------------------------

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Log-distance path loss: PL0 + 10 n log10(d / d0) + shadow.
pub fn path_loss_db(
    env: &Environment,
    distance_m: f64,
    d0_m: f64,
    pl0_db: f64,
    shadow_sample_db: f64,
) -> Result<f64, LinkError> {
    if d0_m <= 0.0 {
        return Err(LinkError::InvalidReference(d0_m));
    }
    if distance_m < d0_m {
        return Err(LinkError::DistanceBelowReference {
            distance: distance_m,
            d0: d0_m,
        });
    }
    Ok(pl0_db + 10.0 * env.path_loss_exponent * (distance_m / d0_m).log10() + shadow_sample_db)
}

/// Received antenna power: transmit power minus path loss.
pub fn received_power_dbm(level: &PowerLevel, path_loss_db: f64) -> f64 {
    level.antenna_dbm - path_loss_db
}

/// Link SNR in dB: received power minus the environment noise floor.
pub fn link_snr_db(received_dbm: f64, env: &Environment) -> f64 {
    received_dbm - env.noise_floor_dbm
}

/// Bit error rate of the uncoded spread-spectrum link: Q(sqrt(2 gamma PrG)).
pub fn ber(snr_linear: f64, process_gain: f64) -> Result<f64, LinkError> {
    if snr_linear < 0.0 {
        return Err(LinkError::NegativeInput(snr_linear));
    }
    if process_gain <= 0.0 {
        return Err(LinkError::NegativeInput(process_gain));
    }
    Ok(q((2.0 * snr_linear * process_gain).sqrt()))
}

/// Probability that an uncoded L-byte packet is received intact:
/// (1 - Q(sqrt(16 gamma)))^(8 L).
///
/// The factor 16 is 2 * gamma * PrG with the radio's process gain of 8.
pub fn packet_success_prob(snr_linear: f64, length_bytes: u32) -> Result<f64, LinkError> {
    if snr_linear < 0.0 {
        return Err(LinkError::NegativeInput(snr_linear));
    }
    let bit_ok = 1.0 - q((16.0 * snr_linear).sqrt());
    Ok(bit_ok.powi(8 * length_bytes as i32))
}

/// Probability that the data packet and the returned ACK both survive.
pub fn handshake_success_prob(
    snr_fwd: f64,
    data_bytes: u32,
    snr_rev: f64,
    ack_bytes: u32,
) -> Result<f64, LinkError> {
    Ok(packet_success_prob(snr_fwd, data_bytes)? * packet_success_prob(snr_rev, ack_bytes)?)
}

/// Expected attempts of the retransmit-until-handshake process: 1 / p.
pub fn expected_retransmissions(p_shs: f64) -> Result<f64, LinkError> {
    if p_shs <= 0.0 {
        return Err(LinkError::UnreachableLink);
    }
    Ok(1.0 / p_shs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(name: EnvironmentName) -> Environment {
        Environment::get(name)
    }

    #[test]
    fn environment_table_is_exact() {
        let ol = env(EnvironmentName::OL);
        assert_eq!((ol.path_loss_exponent, ol.shadow_sigma_db, ol.noise_floor_dbm), (2.42, 3.12, -93.0));
        let un = env(EnvironmentName::UN);
        assert_eq!((un.path_loss_exponent, un.shadow_sigma_db, un.noise_floor_dbm), (3.15, 3.19, -92.0));
        assert_eq!(ENVIRONMENTS.len(), 6);
    }

    #[test]
    fn power_table_is_exact() {
        let top = PowerLevel::get(31).unwrap();
        assert_eq!((top.consumed_mw, top.antenna_dbm), (52.2, 0.0));
        let bottom = PowerLevel::get(3).unwrap();
        assert_eq!((bottom.consumed_mw, bottom.antenna_dbm), (25.5, -25.0));
        assert!(PowerLevel::get(4).is_err());
    }

    #[test]
    fn path_loss_reference_and_examples() {
        let ol = env(EnvironmentName::OL);
        assert_eq!(path_loss_db(&ol, 1.0, 1.0, 40.2, 0.0).unwrap(), 40.2);
        let pl = path_loss_db(&ol, 125.0, 1.0, 40.2, 0.0).unwrap();
        assert!((pl - 90.945222314794965).abs() < 1e-9);
        let on = env(EnvironmentName::ON);
        let pl_on = path_loss_db(&on, 125.0, 1.0, 40.2, 0.0).unwrap();
        assert!((pl_on - 113.80154145658278).abs() < 1e-9);
        assert!(pl_on > pl);
        assert!(path_loss_db(&ol, 0.5, 1.0, 40.2, 0.0).is_err());
    }

    #[test]
    fn received_power_and_snr() {
        let m31 = PowerLevel::get(31).unwrap();
        let m3 = PowerLevel::get(3).unwrap();
        assert!((received_power_dbm(&m31, 90.945) + 90.945).abs() < 1e-12);
        assert!((received_power_dbm(&m3, 90.945) + 115.945).abs() < 1e-12);
        assert_eq!(received_power_dbm(&m31, 0.0), 0.0);

        let ol = env(EnvironmentName::OL);
        assert!((link_snr_db(-90.945, &ol) - 2.055).abs() < 1e-12);
        assert_eq!(link_snr_db(ol.noise_floor_dbm, &ol), 0.0);
        let il = env(EnvironmentName::IL);
        assert!((link_snr_db(-90.945, &il) + 2.945).abs() < 1e-12);
    }

    #[test]
    fn environment_snr_ordering_at_equal_geometry() {
        let m31 = PowerLevel::get(31).unwrap();
        let snr = |name| {
            let e = env(name);
            let pl = path_loss_db(&e, 125.0, 1.0, 40.2, 0.0).unwrap();
            link_snr_db(received_power_dbm(&m31, pl), &e)
        };
        assert!(snr(EnvironmentName::UL) > snr(EnvironmentName::OL));
        assert!(snr(EnvironmentName::OL) > snr(EnvironmentName::ON));
    }

    #[test]
    fn ber_examples() {
        assert_eq!(ber(0.0, PROCESS_GAIN).unwrap(), 0.5);
        assert!((ber(1.0, PROCESS_GAIN).unwrap() - 3.1671241833119921e-5).abs() < 1e-16);
        assert!(ber(1e9, PROCESS_GAIN).unwrap() < 1e-300);
        assert!(ber(-0.1, PROCESS_GAIN).is_err());
    }

    #[test]
    fn packet_success_examples() {
        assert_eq!(packet_success_prob(1.0, 0).unwrap(), 1.0);
        let p = packet_success_prob(1.0, 128).unwrap();
        assert!((p - (1.0 - 3.1671241833119921e-5f64).powi(1024)).abs() < 1e-12);
        assert!(p > 0.96 && p < 0.98);
        // Complement is exact by definition.
        assert_eq!(1.0 - p, 1.0 - packet_success_prob(1.0, 128).unwrap());
    }

    #[test]
    fn packet_success_monotonicity() {
        for l in [1u32, 16, 64, 128] {
            assert!(packet_success_prob(2.0, l).unwrap() > packet_success_prob(1.0, l).unwrap());
        }
        for g in [0.5, 1.0, 2.0] {
            assert!(packet_success_prob(g, 32).unwrap() > packet_success_prob(g, 64).unwrap());
        }
    }

    #[test]
    fn handshake_probability() {
        assert_eq!(handshake_success_prob(1e9, 128, 1e9, 12).unwrap(), 1.0);
        let p = handshake_success_prob(1.0, 128, 1.0, 12).unwrap();
        let expect = packet_success_prob(1.0, 128).unwrap() * packet_success_prob(1.0, 12).unwrap();
        assert_eq!(p, expect);
        assert!(handshake_success_prob(0.0, 128, 1.0, 12).unwrap() < 1e-200);
    }

    #[test]
    fn retransmission_expectation() {
        assert_eq!(expected_retransmissions(1.0).unwrap(), 1.0);
        assert_eq!(expected_retransmissions(0.5).unwrap(), 2.0);
        assert!(matches!(expected_retransmissions(0.0), Err(LinkError::UnreachableLink)));
    }

    #[test]
    fn retransmission_matches_monte_carlo() {
        let p = 0.8;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 100_000;
        let mut total = 0u64;
        for _ in 0..trials {
            let mut attempts = 1u64;
            while rng.random::<f64>() >= p {
                attempts += 1;
            }
            total += attempts;
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 1.25).abs() / 1.25 < 0.01, "mean = {mean}");
    }

    #[test]
    fn shadow_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sigma = 3.12;
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| shadow_sample_db(ShadowMode::Stochastic, sigma, &mut rng))
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        let se = sigma / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean = {mean}");
        assert!((var.sqrt() - sigma).abs() / sigma < 0.02);
        assert_eq!(shadow_sample_db(ShadowMode::Deterministic, sigma, &mut rng), 0.0);
        assert_eq!(shadow_sample_db(ShadowMode::ConstantSigma, sigma, &mut rng), sigma);
    }

    #[test]
    fn every_probability_stays_in_the_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let snr = rng.random::<f64>() * 100.0;
            let len = (rng.random::<f64>() * 256.0) as u32;
            for p in [
                ber(snr, PROCESS_GAIN).unwrap(),
                packet_success_prob(snr, len).unwrap(),
                handshake_success_prob(snr, len, snr, 12).unwrap(),
            ] {
                assert!((0.0..=1.0).contains(&p), "p = {p} at snr = {snr}, len = {len}");
            }
        }
    }

    #[test]
    fn override_table_replaces_rows() {
        let table =
            Environment::table_with_overrides("# comment\nOL.path_loss_exponent = 2.5\n").unwrap();
        let ol = table.iter().find(|e| e.name == EnvironmentName::OL).unwrap();
        assert_eq!(ol.path_loss_exponent, 2.5);
        assert_eq!(ol.shadow_sigma_db, 3.12);
        assert!(Environment::table_with_overrides("bogus line").is_err());
        assert!(Environment::table_with_overrides("XX.path_loss_exponent = 1").is_err());
    }
}
