//! Scenario configuration: defaults, a flat `key = value` file format,
//! and cartesian grid expansion for sweeps.

use serde::{Deserialize, Serialize};

use crate::detector::PuModel;
use crate::game::{AttackOpening, GameConfig, Strategy};
use crate::link::{EnvironmentName, ShadowMode};
use crate::tdma::LinkProfile;

use super::ExperimentError;

/// Everything needed to run one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_nodes: usize,
    pub defense_total: f64,
    pub attack_total: f64,
    pub strategy: Strategy,
    pub environment: EnvironmentName,
    pub pu_model: PuModel,
    pub rounds: u32,
    pub seed: u64,
    /// Strong/weak boundary; derived as 0.05 * X / N when unset.
    pub xi: Option<f64>,
    /// Attacker overshoot; derived as 0.25 * xi when unset.
    pub alpha: Option<f64>,
    pub hw_failure_rate: f64,
    pub power_level: u8,
    pub ack_level: u8,
    pub d0_m: f64,
    pub pl0_db: f64,
    pub distance_m: f64,
    pub shadow_mode: ShadowMode,
    pub payload_bytes: u32,
    pub reserve_fraction: f64,
    pub attack_depth_xi: f64,
    pub pressure_share: f64,
    pub pipeline_margin_xi: f64,
    pub rescue_depth: u32,
    pub budget_to_mw: f64,
    pub retry_cap: u32,
    /// Observation window length for detection curves.
    pub samples: usize,
    pub pu_present: bool,
    pub fusion_threshold: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let opening = AttackOpening::default();
        Self {
            n_nodes: 50,
            defense_total: 20.0,
            attack_total: 8.0,
            strategy: Strategy::Proposed,
            environment: EnvironmentName::OL,
            pu_model: PuModel::Nonfluctuating,
            rounds: 20,
            seed: 0,
            xi: None,
            alpha: None,
            hw_failure_rate: 0.05,
            power_level: 31,
            ack_level: 31,
            d0_m: 1.0,
            pl0_db: 40.2,
            distance_m: 125.0,
            shadow_mode: ShadowMode::Stochastic,
            payload_bytes: 120,
            reserve_fraction: opening.reserve_fraction,
            attack_depth_xi: opening.depth_xi,
            pressure_share: opening.pressure_share,
            pipeline_margin_xi: opening.pipeline_margin_xi,
            rescue_depth: 1,
            budget_to_mw: 1.0,
            retry_cap: 10,
            samples: 1000,
            pu_present: true,
            fusion_threshold: None,
        }
    }
}

fn field_err(field: &str, message: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Config(format!("{field}: {message}"))
}

impl ScenarioConfig {
    pub fn xi(&self) -> f64 {
        self.xi
            .unwrap_or(0.05 * self.defense_total / self.n_nodes as f64)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.25 * self.xi())
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_nodes == 0 {
            return Err(field_err("nodes", "must be >= 1"));
        }
        if !(self.defense_total > 0.0) {
            return Err(field_err("defense_budget", "must be > 0"));
        }
        if self.attack_total < 0.0 {
            return Err(field_err("attack_budget", "must be >= 0"));
        }
        if self.rounds == 0 {
            return Err(field_err("rounds", "must be >= 1"));
        }
        if !(self.xi() > 0.0) {
            return Err(field_err("xi", "must be > 0"));
        }
        if self.alpha() < 0.0 {
            return Err(field_err("alpha", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.hw_failure_rate) {
            return Err(field_err("hw_failure_rate", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.reserve_fraction) {
            return Err(field_err("attack_reserve", "must lie in [0, 1]"));
        }
        if self.payload_bytes == 0 {
            return Err(field_err("payload_bytes", "must be >= 1"));
        }
        if self.distance_m < self.d0_m {
            return Err(field_err("distance_m", "must be >= d0_m"));
        }
        if self.samples == 0 {
            return Err(field_err("samples", "must be >= 1"));
        }
        Ok(())
    }

    pub fn game_config(&self) -> GameConfig {
        let mut config = GameConfig::new(self.n_nodes, self.defense_total, self.attack_total);
        config.xi = self.xi();
        config.alpha = self.alpha();
        config.max_rounds = self.rounds;
        config.rescue_depth = self.rescue_depth;
        config.opening = AttackOpening {
            reserve_fraction: self.reserve_fraction,
            depth_xi: self.attack_depth_xi,
            pressure_share: self.pressure_share,
            pipeline_margin_xi: self.pipeline_margin_xi,
        };
        config.hw_failure_rate = self.hw_failure_rate;
        config.seed = self.seed;
        config.strategy = self.strategy;
        config
    }

    pub fn link_profile(&self) -> Result<LinkProfile, ExperimentError> {
        let mut profile = LinkProfile::new(self.power_level, self.ack_level)?;
        profile.payload_bytes = self.payload_bytes;
        profile.timing = crate::energy::TimingProfile::new(
            self.payload_bytes + profile.header_bytes,
            profile.ack_bytes,
        )?;
        profile.distance_m = self.distance_m;
        profile.d0_m = self.d0_m;
        profile.pl0_db = self.pl0_db;
        profile.shadow_mode = self.shadow_mode;
        profile.budget_to_mw = self.budget_to_mw;
        profile.retry_cap = self.retry_cap;
        profile.pu_present = self.pu_present;
        profile.fusion_threshold = self.fusion_threshold;
        Ok(profile)
    }

    /// Applies one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let v = value.trim();
        match key {
            "nodes" | "n_nodes" => self.n_nodes = parse(key, v)?,
            "defense_budget" | "defense_total" => self.defense_total = parse(key, v)?,
            "attack_budget" | "attack_total" => self.attack_total = parse(key, v)?,
            "strategy" => {
                self.strategy = v.parse().map_err(|e| field_err(key, e))?;
            }
            "environment" | "env" => {
                self.environment = v.parse().map_err(|e| field_err(key, e))?;
            }
            "pu" | "pu_model" => {
                self.pu_model = v.parse().map_err(|e| field_err(key, e))?;
            }
            "rounds" => self.rounds = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "xi" => self.xi = Some(parse(key, v)?),
            "alpha" => self.alpha = Some(parse(key, v)?),
            "hw_failure_rate" => self.hw_failure_rate = parse(key, v)?,
            "power_level" | "m" => self.power_level = parse(key, v)?,
            "ack_level" | "u" => self.ack_level = parse(key, v)?,
            "d0_m" | "d0" => self.d0_m = parse(key, v)?,
            "pl0_db" | "pl0" => self.pl0_db = parse(key, v)?,
            "distance_m" | "distance" => self.distance_m = parse(key, v)?,
            "shadow_mode" => {
                self.shadow_mode = match v.to_ascii_lowercase().as_str() {
                    "deterministic" | "off" => ShadowMode::Deterministic,
                    "stochastic" | "random" => ShadowMode::Stochastic,
                    "constant" | "constant_sigma" => ShadowMode::ConstantSigma,
                    other => return Err(field_err(key, format!("unknown mode '{other}'"))),
                }
            }
            "payload_bytes" | "payload" => self.payload_bytes = parse(key, v)?,
            "attack_reserve" | "reserve_fraction" => self.reserve_fraction = parse(key, v)?,
            "attack_depth_xi" => self.attack_depth_xi = parse(key, v)?,
            "pressure_share" => self.pressure_share = parse(key, v)?,
            "pipeline_margin_xi" => self.pipeline_margin_xi = parse(key, v)?,
            "rescue_depth" => self.rescue_depth = parse(key, v)?,
            "budget_to_mw" => self.budget_to_mw = parse(key, v)?,
            "retry_cap" => self.retry_cap = parse(key, v)?,
            "samples" | "n_samples" => self.samples = parse(key, v)?,
            "pu_present" => self.pu_present = parse(key, v)?,
            "fusion_threshold" => self.fusion_threshold = Some(parse(key, v)?),
            other => return Err(field_err(other, "unknown configuration key")),
        }
        Ok(())
    }

    /// Builds a config from a flat key-value file body.
    pub fn from_kv_text(text: &str) -> Result<Self, ExperimentError> {
        let mut config = Self::default();
        for (key, value) in parse_kv(text)? {
            config.apply(&key, &value)?;
        }
        Ok(config)
    }
}

fn parse<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, ExperimentError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| field_err(field, e))
}

/// Parses a flat `key = value` body: one assignment per line, `#`
/// comments, optional `[section]` headers (ignored).
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, ExperimentError> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ExperimentError::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        pairs.push((
            key.trim().to_string(),
            value.trim().trim_matches('"').to_string(),
        ));
    }
    Ok(pairs)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derives scenario `index`'s seed from a sweep's base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(1)))
}

/// Expands a grid file into a scenario list.
///
/// Keys holding comma-separated lists become sweep axes; the first list
/// key varies slowest. Every scenario's seed derives from the base seed
/// and its position in the expansion.
pub fn expand_grid(text: &str) -> Result<Vec<ScenarioConfig>, ExperimentError> {
    let pairs = parse_kv(text)?;
    let mut scalars = Vec::new();
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for (key, value) in pairs {
        if value.contains(',') {
            let values: Vec<String> =
                value.split(',').map(|v| v.trim().to_string()).collect();
            axes.push((key, values));
        } else {
            scalars.push((key, value));
        }
    }
    let mut base = ScenarioConfig::default();
    for (key, value) in &scalars {
        base.apply(key, value)?;
    }
    let count: usize = axes.iter().map(|(_, v)| v.len()).product();
    let mut out = Vec::with_capacity(count.max(1));
    let base_seed = base.seed;
    for index in 0..count.max(1) {
        let mut config = base.clone();
        let mut rest = index;
        // First axis varies slowest.
        for (key, values) in axes.iter().rev() {
            let pick = rest % values.len();
            rest /= values.len();
            config.apply(key, &values[pick])?;
        }
        config.seed = derive_seed(base_seed, index as u64);
        config.validate()?;
        out.push(config);
    }
    Ok(out)
}
