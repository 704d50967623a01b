//! Matched-filter spectrum detection math.
//!
//! Closed forms for the detector operating on the pilot-correlated test
//! statistic: detection / false-alarm probabilities, threshold inversion
//! anchored at either probability, ROC points for nonfluctuating and
//! Rayleigh-fluctuating primary users, and the effective report SNR once
//! attack and defense budgets are layered onto a link.
//!
//! Hypothesis semantics follow the conventional form: H0 is noise only,
//! H1 is signal plus noise. The complex channel gain enters only through
//! the received signal energy, so the closed-form path never touches
//! per-sample complex arithmetic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qfunc::{q, q_inv};

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("received and pilot vectors differ in length ({received} vs {pilot})")]
    LengthMismatch { received: usize, pilot: usize },
    #[error("signal energy must be positive for this operation (E = {0})")]
    ZeroEnergy(f64),
    #[error("target probability must lie strictly inside (0, 1), got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("SNR and process gain must be nonnegative ({0})")]
    NegativeInput(f64),
    #[error("denominator noise power plus attack must be positive, got {0}")]
    ZeroDenominator(f64),
    #[error("invalid detector parameters: {0}")]
    InvalidParams(String),
}

/// Primary-user signal model for ROC evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PuModel {
    /// Deterministic signal amplitude.
    Nonfluctuating,
    /// Rayleigh-fluctuating amplitude, single observation.
    FluctuatingRayleigh,
}

impl std::str::FromStr for PuModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nonfluct" | "nonfluctuating" => Ok(Self::Nonfluctuating),
            "fluct" | "fluctuating" | "rayleigh" => Ok(Self::FluctuatingRayleigh),
            other => Err(format!("unknown PU model '{other}'")),
        }
    }
}

/// Parameters of a single-node matched-filter detector.
#[derive(Debug, Clone)]
pub struct DetectorParams {
    /// Received signal energy E over the observation window.
    pub signal_energy: f64,
    /// Noise variance per sample.
    pub noise_variance: f64,
    /// Number of samples in the observation window.
    pub samples: usize,
    /// Known pilot sequence, one entry per sample.
    pub pilot: Vec<f64>,
}

impl DetectorParams {
    pub fn new(
        signal_energy: f64,
        noise_variance: f64,
        samples: usize,
        pilot: Vec<f64>,
    ) -> Result<Self, DetectorError> {
        if !(noise_variance > 0.0) {
            return Err(DetectorError::InvalidParams(format!(
                "noise variance must be > 0, got {noise_variance}"
            )));
        }
        if samples == 0 {
            return Err(DetectorError::InvalidParams("samples must be >= 1".into()));
        }
        if signal_energy < 0.0 {
            return Err(DetectorError::InvalidParams(format!(
                "signal energy must be >= 0, got {signal_energy}"
            )));
        }
        if pilot.len() != samples {
            return Err(DetectorError::InvalidParams(format!(
                "pilot length {} does not match samples {samples}",
                pilot.len()
            )));
        }
        Ok(Self {
            signal_energy,
            noise_variance,
            samples,
            pilot,
        })
    }
}

/// Which closed form a threshold is anchored to when inverting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdAnchor {
    /// Invert the false-alarm form: lambda = Q^-1(t) * sqrt(E sigma^2).
    FromPf,
    /// Invert the detection form: lambda = E + Q^-1(t) * sqrt(E sigma^2).
    FromPd,
}

/// Correlates the received vector with the pilot.
///
/// For real pilots the conjugation in the general form degenerates, so
/// this is a plain dot product.
pub fn mf_statistic(received: &[f64], pilot: &[f64]) -> Result<f64, DetectorError> {
    if received.len() != pilot.len() {
        return Err(DetectorError::LengthMismatch {
            received: received.len(),
            pilot: pilot.len(),
        });
    }
    Ok(received.iter().zip(pilot).map(|(y, x)| y * x).sum())
}

/// Probability that the statistic exceeds `threshold` under H1:
/// Q((lambda - E) / sqrt(E sigma^2)).
pub fn prob_detection(threshold: f64, params: &DetectorParams) -> Result<f64, DetectorError> {
    if params.signal_energy <= 0.0 {
        return Err(DetectorError::ZeroEnergy(params.signal_energy));
    }
    let scale = (params.signal_energy * params.noise_variance).sqrt();
    Ok(q((threshold - params.signal_energy) / scale))
}

/// Probability that the statistic exceeds `threshold` under H0:
/// Q(lambda / sqrt(E sigma^2)).
pub fn prob_false_alarm(threshold: f64, params: &DetectorParams) -> Result<f64, DetectorError> {
    if params.signal_energy <= 0.0 {
        return Err(DetectorError::ZeroEnergy(params.signal_energy));
    }
    let scale = (params.signal_energy * params.noise_variance).sqrt();
    Ok(q(threshold / scale))
}

/// Inverts either probability form back to a threshold.
pub fn threshold_for(
    target: f64,
    params: &DetectorParams,
    anchor: ThresholdAnchor,
) -> Result<f64, DetectorError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(DetectorError::ProbabilityOutOfRange(target));
    }
    if params.signal_energy <= 0.0 {
        return Err(DetectorError::ZeroEnergy(params.signal_energy));
    }
    let scale = (params.signal_energy * params.noise_variance).sqrt();
    Ok(match anchor {
        ThresholdAnchor::FromPf => q_inv(target) * scale,
        ThresholdAnchor::FromPd => params.signal_energy + q_inv(target) * scale,
    })
}

/// Detection probability at a fixed false-alarm rate and statistic SNR
/// gamma' = E / sigma^2.
///
/// Nonfluctuating: Pd = Q(Q^-1(pf) - sqrt(gamma')). Rayleigh-fluctuating:
/// Pd = pf^(1 / (1 + gamma')), the single-observation closed form.
pub fn roc_point(pf: f64, snr: f64, model: PuModel) -> Result<f64, DetectorError> {
    if !(pf > 0.0 && pf < 1.0) {
        return Err(DetectorError::ProbabilityOutOfRange(pf));
    }
    if snr < 0.0 {
        return Err(DetectorError::NegativeInput(snr));
    }
    if snr == 0.0 {
        // No signal: the detector is exactly chance level.
        return Ok(pf);
    }
    Ok(match model {
        PuModel::Nonfluctuating => q(q_inv(pf) - snr.sqrt()),
        PuModel::FluctuatingRayleigh => pf.powf(1.0 / (1.0 + snr)),
    })
}

/// Effective report SNR once both players' budgets act on the link:
/// gain * (signal + defense) / (noise + attack).
pub fn effective_snr(
    tx_power: f64,
    defense: f64,
    attack: f64,
    gain: f64,
    noise_power: f64,
) -> Result<f64, DetectorError> {
    let denom = noise_power + attack;
    if denom <= 0.0 {
        return Err(DetectorError::ZeroDenominator(denom));
    }
    Ok(gain * (tx_power + defense) / denom)
}

/// One (x, y) sample of an emitted curve.
pub type CurvePoint = (f64, f64);

/// Sweeps the ROC over a false-alarm grid at fixed statistic SNR.
pub fn roc_curve(pf_grid: &[f64], snr: f64, model: PuModel) -> Result<Vec<CurvePoint>, DetectorError> {
    pf_grid
        .iter()
        .map(|&pf| roc_point(pf, snr, model).map(|pd| (pf, pd)))
        .collect()
}

/// Sweeps Pd over an SNR grid (in dB) at a fixed false-alarm rate.
pub fn pd_vs_snr(
    snr_db_grid: &[f64],
    pf: f64,
    model: PuModel,
) -> Result<Vec<CurvePoint>, DetectorError> {
    snr_db_grid
        .iter()
        .map(|&db| {
            let lin = 10f64.powf(db / 10.0);
            roc_point(pf, lin, model).map(|pd| (db, pd))
        })
        .collect()
}
