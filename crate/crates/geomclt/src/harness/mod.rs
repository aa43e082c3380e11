//! Monte Carlo experiment harness: replication-indexed runs of the
//! functionals over sampled point processes, with deterministic
//! aggregation into summary statistics.
//!
//! Stream discipline: every random draw belongs to a stream
//! `(block << 32) | replication` under the experiment's master seed.
//! Main replications use the schedule position as the block; auxiliary
//! estimates (per-level variance runs, limiting add-one-cost estimates,
//! the percolation gate) use disjoint high blocks. Replication results
//! are collected in index order, so summaries and records never depend
//! on the worker count.

mod experiments;
mod runner;

pub use experiments::*;
pub use runner::replicate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{moments, one_sample_ks, normal_cdf};

/// Block offsets for auxiliary stream ranges (see module docs).
pub(crate) const AUX_LEVEL_BLOCK: u64 = 1 << 16;
pub(crate) const AUX_DELTA_BLOCK: u64 = 1 << 17;

pub(crate) fn stream_of(block: u64, replication: u64) -> u64 {
    (block << 32) | replication
}

/// One Monte Carlo evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: u64,
    pub n: f64,
    pub value: f64,
    pub point_count: u64,
    /// Measured wall time of the evaluation. Surfaced only when timing
    /// output is requested; the CSV writer zeroes it otherwise so that
    /// data files stay byte-identical across reruns and worker counts.
    pub wall_ms: f64,
}

/// Per-`n` sample statistics. Shape statistics are absent for degenerate
/// (zero-variance) samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: f64,
    pub replications: u64,
    pub mean: f64,
    pub variance: f64,
    pub variance_per_n: f64,
    pub mean_point_count: f64,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_statistic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skewness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kurtosis_excess: Option<f64>,
}

/// Entry of the per-level homogeneous variance table used by the
/// variance-additivity prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub lambda: f64,
    pub functional: String,
    pub dimension: usize,
    pub level_volume: f64,
    pub replications: u64,
    pub sigma_hat_sq: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SllnEntry {
    pub n: f64,
    pub poisson_mean_per_n: f64,
    pub binomial_mean_per_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedVarianceTest {
    pub t_statistic: f64,
    pub p_value: f64,
}

/// Report of the thermodynamic-regime gate `r < Λ^{−1/d} r̂_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub r: f64,
    pub lambda_sup: f64,
    pub r_c_estimate: f64,
    pub threshold: f64,
    pub triggered: bool,
    /// In d = 2 the restriction is advisory only (no radius constraint is
    /// actually needed there), so a triggered gate warns instead of failing.
    pub advisory: bool,
}

/// Diagnostic of the polynomial growth of |H|: largest observed value and
/// the exponent `log max|H| / log(n + max count)` it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthDiagnostic {
    pub max_abs_value: f64,
    pub max_point_count: u64,
    pub implied_exponent: f64,
}

/// Summary of a CLT experiment. Optional sections are filled by the
/// experiments that compute them: paired runs add the binomial side and
/// the variance-gap analysis, density runs add the level table and the
/// additivity prediction, Betti runs add the SLLN table and the gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSummary {
    pub experiment: String,
    pub functional: String,
    pub dimension: usize,
    pub master_seed: u64,
    pub per_n: Vec<NSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_hat_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_hat_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_bar_std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_sigma_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_tau_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub level_table: Vec<LevelEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binomial_per_n: Option<Vec<NSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slln: Option<Vec<SllnEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paired_test: Option<PairedVarianceTest>,
    /// Poissonized minus binomial variance/n at the reference n.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_over_delta_bar_sq: Option<f64>,
    /// Variance/n of the Poissonization count itself (equals 1 in law).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count_variance_per_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub percolation_gate: Option<GateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthDiagnostic>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl CltSummary {
    pub(crate) fn new(
        experiment: &str,
        functional: String,
        dimension: usize,
        master_seed: u64,
    ) -> Self {
        CltSummary {
            experiment: experiment.to_string(),
            functional,
            dimension,
            master_seed,
            per_n: Vec::new(),
            sigma_hat_sq: None,
            tau_hat_sq: None,
            delta_bar: None,
            delta_bar_std_error: None,
            predicted_sigma_sq: None,
            predicted_tau_sq: None,
            level_table: Vec::new(),
            binomial_per_n: None,
            slln: None,
            paired_test: None,
            variance_gap: None,
            gap_over_delta_bar_sq: None,
            count_variance_per_n: None,
            percolation_gate: None,
            growth: None,
            flags: Vec::new(),
        }
    }
}

/// Pure fold of a record batch into per-`n` statistics. Values are
/// standardized by their own mean and standard deviation before the KS
/// comparison against the standard normal.
pub fn summarize_sample(n: f64, records: &[ReplicationRecord]) -> Result<NSummary> {
    if records.len() < 2 {
        return Err(Error::invalid("summaries need at least two replications"));
    }
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let m = moments(&values)?;
    let mean_count =
        records.iter().map(|r| r.point_count as f64).sum::<f64>() / records.len() as f64;
    let degenerate = !(m.variance > 0.0);
    let (ks_statistic, ks_p_value, skewness, kurtosis_excess) = if degenerate {
        (None, None, None, None)
    } else {
        let sd = m.variance.sqrt();
        let standardized: Vec<f64> = values.iter().map(|v| (v - m.mean) / sd).collect();
        let (d, p) = one_sample_ks(&standardized, normal_cdf)?;
        (Some(d), Some(p), Some(m.skewness), Some(m.kurtosis_excess))
    };
    Ok(NSummary {
        n,
        replications: records.len() as u64,
        mean: m.mean,
        variance: m.variance,
        variance_per_n: m.variance / n,
        mean_point_count: mean_count,
        degenerate,
        ks_statistic,
        ks_p_value,
        skewness,
        kurtosis_excess,
    })
}

/// Standard error of an unbiased sample variance via the fourth central
/// moment: `SE² = (m4 − s⁴(m−3)/(m−1)) / m`.
pub fn variance_std_error(values: &[f64]) -> f64 {
    let m = values.len() as f64;
    if m < 4.0 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / m;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in values {
        let d2 = (x - mean) * (x - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= m;
    m4 /= m;
    let s2 = m2 * m / (m - 1.0);
    ((m4 - s2 * s2 * (m - 3.0) / (m - 1.0)) / m).max(0.0).sqrt()
}

pub(crate) fn growth_of(records: &[&ReplicationRecord]) -> GrowthDiagnostic {
    let mut max_abs = 0.0f64;
    let mut max_count = 0u64;
    let mut max_n = 0.0f64;
    for r in records {
        max_abs = max_abs.max(r.value.abs());
        max_count = max_count.max(r.point_count);
        max_n = max_n.max(r.n);
    }
    let base = max_n + max_count as f64;
    let implied_exponent =
        if base > 1.0 && max_abs > 1.0 { max_abs.ln() / base.ln() } else { 0.0 };
    GrowthDiagnostic { max_abs_value: max_abs, max_point_count: max_count, implied_exponent }
}
