//! Table and file emission: CSV / JSON-lines metric streams, detection
//! curves, and a provenance `meta.json` alongside every run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::detector::{roc_curve, PuModel};
use crate::energy::EnergyLedger;

use super::{ExperimentError, ExperimentReport};

/// On-disk format of the metric streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for EmitFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(EmitFormat::Csv),
            "jsonl" | "json" => Ok(EmitFormat::Jsonl),
            other => Err(format!("unknown format '{other}'")),
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn metrics_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("round,correct_packets,protected_fraction,fc_decision,energy_delta_J\n");
    for m in &report.per_round {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.round, m.correct_packets, m.protected_fraction, m.fc_decision, m.energy_delta_j
        ));
    }
    out
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable record"));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Meta<'a> {
    artifact: &'static str,
    version: &'static str,
    configs: Vec<&'a super::ScenarioConfig>,
    seeds: Vec<u64>,
}

/// Writes every report's tables under `out_dir`.
///
/// A single report lands directly in the directory; several reports get
/// one zero-padded subdirectory each. A `meta.json` capturing the full
/// configs, seeds and artifact version always accompanies the data.
pub fn emit_reports(
    reports: &[ExperimentReport],
    format: EmitFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    if reports.is_empty() {
        return Err(ExperimentError::NothingToEmit);
    }
    fs::create_dir_all(out_dir).map_err(|source| ExperimentError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();

    for (index, report) in reports.iter().enumerate() {
        let dir = if reports.len() == 1 {
            out_dir.to_path_buf()
        } else {
            let sub = out_dir.join(format!("scenario_{index:03}"));
            fs::create_dir_all(&sub).map_err(|source| ExperimentError::Io {
                path: sub.display().to_string(),
                source,
            })?;
            sub
        };
        let metrics_path = match format {
            EmitFormat::Csv => {
                let path = dir.join("metrics.csv");
                write(&path, &metrics_csv(report))?;
                path
            }
            EmitFormat::Jsonl => {
                let path = dir.join("metrics.jsonl");
                write(&path, &jsonl(&report.per_round))?;
                path
            }
        };
        written.push(metrics_path);

        let rounds_path = dir.join("rounds.jsonl");
        write(&rounds_path, &jsonl(&report.game_rounds))?;
        written.push(rounds_path);

        let ledger_path = dir.join("ledger.csv");
        let mut ledger_contents = String::from(EnergyLedger::CSV_HEADER);
        ledger_contents.push_str(&report.ledger_rows);
        write(&ledger_path, &ledger_contents)?;
        written.push(ledger_path);

        let summary_path = dir.join("summary.json");
        write(
            &summary_path,
            &serde_json::to_string_pretty(&report.summary).expect("serializable summary"),
        )?;
        written.push(summary_path);
    }

    let meta = Meta {
        artifact: "ssdf-arena",
        version: env!("CARGO_PKG_VERSION"),
        configs: reports.iter().map(|r| &r.config).collect(),
        seeds: reports.iter().map(|r| r.config.seed).collect(),
    };
    let meta_path = out_dir.join("meta.json");
    write(
        &meta_path,
        &serde_json::to_string_pretty(&meta).expect("serializable meta"),
    )?;
    written.push(meta_path);
    Ok(written)
}

/// ROC table over a false-alarm grid: `pf,pd_nonfluct,pd_fluct`.
pub fn write_roc_csv(
    pf_grid: &[f64],
    snr_linear: f64,
    path: &Path,
) -> Result<(), ExperimentError> {
    let nonfluct = roc_curve(pf_grid, snr_linear, PuModel::Nonfluctuating)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let fluct = roc_curve(pf_grid, snr_linear, PuModel::FluctuatingRayleigh)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut out = String::from("pf,pd_nonfluct,pd_fluct\n");
    for ((pf, pd_n), (_, pd_f)) in nonfluct.iter().zip(&fluct) {
        out.push_str(&format!("{pf},{pd_n},{pd_f}\n"));
    }
    write(path, &out)
}

/// Pd-vs-SNR table at a fixed false-alarm rate: `snr_db,pd`.
pub fn write_pd_snr_csv(
    snr_db_grid: &[f64],
    pf: f64,
    model: PuModel,
    path: &Path,
) -> Result<(), ExperimentError> {
    let points = crate::detector::pd_vs_snr(snr_db_grid, pf, model)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut out = String::from("snr_db,pd\n");
    for (db, pd) in points {
        out.push_str(&format!("{db},{pd}\n"));
    }
    write(path, &out)
}

/// Protection-per-round comparison of the three strategies:
/// `round,proposed,random,equal`.
pub fn protection_comparison_csv(
    proposed: &ExperimentReport,
    random: &ExperimentReport,
    equal: &ExperimentReport,
) -> String {
    let mut out = String::from("round,proposed,random,equal\n");
    for ((p, r), e) in proposed
        .per_round
        .iter()
        .zip(&random.per_round)
        .zip(&equal.per_round)
    {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.round, p.protected_fraction, r.protected_fraction, e.protected_fraction
        ));
    }
    out
}
