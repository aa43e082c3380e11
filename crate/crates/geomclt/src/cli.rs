//! Config files, output writers, and the run manifest behind the binary.
//!
//! Every experiment is described by one JSON file whose `experiment` tag
//! names the subcommand it belongs to. A run writes its data files plus
//! `canonical_config.json` (the effective config after overrides, in
//! canonical form) and `manifest.json` into the output directory. The
//! config hash is the SHA-256 of the canonical config bytes, so a
//! manifest pins the run exactly. Data files are byte-identical across
//! reruns and worker counts; only the manifest timestamps move.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functionals::FunctionalSpec;
use crate::harness::{
    run_betti, run_betti_clt, run_block_approximation, run_coupling_check, run_depoissonization,
    run_homogeneous_clt, run_inhomogeneous_clt, run_percolation, run_sample, run_stabilization,
    BettiConfig, BlockApproxConfig, CouplingConfig, HomogeneousCltConfig, InhomogeneousCltConfig,
    NSummary, PairedCltConfig, PercolationConfig, ReplicationRecord, SampleConfig,
    StabilizationConfig,
};
use crate::percolation::PercolationEstimate;
use crate::stabilization::StabilizationTrace;

/// Union of the per-subcommand configs, tagged by `experiment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Sample(SampleConfig),
    Betti(BettiConfig),
    CltHomogeneous(HomogeneousCltConfig),
    CltBlocks(BlockApproxConfig),
    CltPoisson(InhomogeneousCltConfig),
    CltBinomial(PairedCltConfig),
    Stabilization(StabilizationConfig),
    Percolation(PercolationConfig),
    CouplingCheck(CouplingConfig),
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn experiment_name(&self) -> &'static str {
        match self {
            ExperimentConfig::Sample(_) => "sample",
            ExperimentConfig::Betti(_) => "betti",
            ExperimentConfig::CltHomogeneous(_) => "clt-homogeneous",
            ExperimentConfig::CltBlocks(_) => "clt-blocks",
            ExperimentConfig::CltPoisson(_) => "clt-poisson",
            ExperimentConfig::CltBinomial(_) => "clt-binomial",
            ExperimentConfig::Stabilization(_) => "stabilization",
            ExperimentConfig::Percolation(_) => "percolation",
            ExperimentConfig::CouplingCheck(_) => "coupling-check",
        }
    }

    pub fn master_seed(&self) -> u64 {
        match self {
            ExperimentConfig::Sample(c) => c.master_seed,
            ExperimentConfig::Betti(c) => c.master_seed,
            ExperimentConfig::CltHomogeneous(c) => c.master_seed,
            ExperimentConfig::CltBlocks(c) => c.master_seed,
            ExperimentConfig::CltPoisson(c) => c.master_seed,
            ExperimentConfig::CltBinomial(c) => c.master_seed,
            ExperimentConfig::Stabilization(c) => c.master_seed,
            ExperimentConfig::Percolation(c) => c.master_seed,
            ExperimentConfig::CouplingCheck(c) => c.master_seed,
        }
    }

    pub fn set_master_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Sample(c) => c.master_seed = seed,
            ExperimentConfig::Betti(c) => c.master_seed = seed,
            ExperimentConfig::CltHomogeneous(c) => c.master_seed = seed,
            ExperimentConfig::CltBlocks(c) => c.master_seed = seed,
            ExperimentConfig::CltPoisson(c) => c.master_seed = seed,
            ExperimentConfig::CltBinomial(c) => c.master_seed = seed,
            ExperimentConfig::Stabilization(c) => c.master_seed = seed,
            ExperimentConfig::Percolation(c) => c.master_seed = seed,
            ExperimentConfig::CouplingCheck(c) => c.master_seed = seed,
        }
    }

    /// The canonical byte form: pretty JSON with struct field order, one
    /// trailing newline. Parsing and re-canonicalizing is the identity.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(format!("{}\n", serde_json::to_string_pretty(self)?))
    }

    pub fn config_hash(&self) -> Result<String> {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json()?.as_bytes());
        Ok(format!("{:x}", hasher.finalize()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub tool_version: String,
    /// Bumped whenever any CSV column layout changes.
    pub csv_format_version: u32,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

/// Current layout of every CSV emitted by `execute`.
pub const CSV_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config_path: PathBuf,
    pub seed_override: Option<u64>,
    /// Worker threads: 1 is sequential, 0 uses the library default.
    pub threads: usize,
    pub out_dir: PathBuf,
    /// Record measured wall times in records.csv. Off by default so data
    /// files stay byte-identical across reruns.
    pub timings: bool,
}

/// What a run leaves behind, plus the lines printed to the terminal.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub lines: Vec<String>,
}

pub fn records_csv(records: &[ReplicationRecord], timings: bool) -> String {
    let mut out = String::from("index,n,h,count,ms\n");
    for r in records {
        let ms = if timings { format!("{:.3}", r.wall_ms) } else { "0".to_string() };
        out.push_str(&format!("{},{},{},{},{}\n", r.index, r.n, r.value, r.point_count, ms));
    }
    out
}

pub fn traces_csv(traces: &[StabilizationTrace]) -> String {
    let mut out = String::from("trace,halfwidth,d0\n");
    for (i, t) in traces.iter().enumerate() {
        for (hw, d0) in t.halfwidths.iter().zip(&t.d0_values) {
            out.push_str(&format!("{i},{hw},{d0}\n"));
        }
    }
    out
}

pub fn spanning_curve_csv(estimate: &PercolationEstimate) -> String {
    let mut out = String::from("torus_side,r,spanning_fraction,std_error\n");
    for size in &estimate.per_size {
        for p in &size.curve {
            out.push_str(&format!(
                "{},{},{},{}\n",
                size.torus_side, p.r, p.spanning_fraction, p.std_error
            ));
        }
    }
    out
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(value)?))
}

struct OutputSink {
    dir: PathBuf,
    names: Vec<String>,
}

impl OutputSink {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputSink { dir: dir.to_path_buf(), names: Vec::new() })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.names.push(name.to_string());
        Ok(())
    }
}

fn per_n_line(s: &NSummary) -> String {
    match (s.ks_statistic, s.ks_p_value) {
        (Some(d), Some(p)) => format!(
            "n={}: mean={:.4} var/n={:.4} KS={:.4} (p={:.3})",
            s.n, s.mean, s.variance_per_n, d, p
        ),
        _ => format!("n={}: mean={:.4} var/n={:.4} (degenerate)", s.n, s.mean, s.variance_per_n),
    }
}

/// Loads the config, checks it matches the invoked subcommand, runs the
/// experiment, and writes data files, the canonical config, and the
/// manifest into the output directory.
pub fn execute(opts: &RunOptions, subcommand: &str) -> Result<RunReport> {
    let mut cfg = ExperimentConfig::from_path(&opts.config_path)?;
    if cfg.experiment_name() != subcommand {
        return Err(Error::config(format!(
            "config declares experiment '{}' but the subcommand is '{}'",
            cfg.experiment_name(),
            subcommand
        )));
    }
    if let Some(seed) = opts.seed_override {
        cfg.set_master_seed(seed);
    }
    let started = unix_now();
    let mut sink = OutputSink::new(&opts.out_dir)?;
    sink.write("canonical_config.json", &cfg.canonical_json()?)?;
    let mut lines = Vec::new();

    match &cfg {
        ExperimentConfig::Sample(c) => {
            let cloud = run_sample(c)?;
            sink.write("points.csv", &cloud.to_csv())?;
            lines.push(format!(
                "sampled {} points in dimension {}",
                cloud.len(),
                cloud.dimension
            ));
        }
        ExperimentConfig::Betti(c) => {
            let report = run_betti(c)?;
            sink.write("summary.json", &to_json(&report)?)?;
            let betti: Vec<String> = report.betti.iter().map(|b| b.to_string()).collect();
            lines.push(format!(
                "betti = ({}) over {} points, euler = {}",
                betti.join(", "),
                report.point_count,
                report.euler_characteristic
            ));
        }
        ExperimentConfig::CltHomogeneous(c) => {
            let (summary, records) = run_homogeneous_clt(c, opts.threads)?;
            sink.write("records.csv", &records_csv(&records, opts.timings))?;
            sink.write("summary.json", &to_json(&summary)?)?;
            lines.extend(summary.per_n.iter().map(per_n_line));
            if let Some(s) = summary.sigma_hat_sq {
                lines.push(format!("sigma_hat_sq = {s:.5}"));
            }
            lines.extend(summary.flags.iter().map(|f| format!("note: {f}")));
        }
        ExperimentConfig::CltBlocks(c) => {
            let (table, records) = run_block_approximation(c, opts.threads)?;
            sink.write("records.csv", &records_csv(&records, opts.timings))?;
            sink.write("summary.json", &to_json(&table)?)?;
            for row in &table.rows {
                lines.push(match row.variance {
                    Some(v) => format!(
                        "L={}: {} blocks, Var[(H - block sum)/sqrt(n)] = {:.5}",
                        row.l, row.block_count, v
                    ),
                    None => format!("L={}: skipped", row.l),
                });
            }
            lines.extend(table.flags.iter().map(|f| format!("note: {f}")));
        }
        ExperimentConfig::CltPoisson(c) => {
            let (summary, records) = run_inhomogeneous_clt(c, opts.threads)?;
            sink.write("records.csv", &records_csv(&records, opts.timings))?;
            sink.write("summary.json", &to_json(&summary)?)?;
            lines.extend(summary.per_n.iter().map(per_n_line));
            if let (Some(est), Some(pred)) = (summary.sigma_hat_sq, summary.predicted_sigma_sq) {
                lines.push(format!(
                    "sigma_hat_sq = {est:.5}, level-sum prediction = {pred:.5}"
                ));
            }
            lines.extend(summary.flags.iter().map(|f| format!("note: {f}")));
        }
        ExperimentConfig::CltBinomial(c) => {
            let betti_run = matches!(c.functional, FunctionalSpec::BettiK { .. });
            let (summary, poisson, binomial) = if betti_run {
                run_betti_clt(c, opts.threads)?
            } else {
                run_depoissonization(c, opts.threads)?
            };
            sink.write("records_poisson.csv", &records_csv(&poisson, opts.timings))?;
            sink.write("records_binomial.csv", &records_csv(&binomial, opts.timings))?;
            sink.write("summary.json", &to_json(&summary)?)?;
            lines.extend(summary.per_n.iter().map(|s| format!("poisson {}", per_n_line(s))));
            if let Some(bs) = &summary.binomial_per_n {
                lines.extend(bs.iter().map(|s| format!("binomial {}", per_n_line(s))));
            }
            if let (Some(sig), Some(tau)) = (summary.sigma_hat_sq, summary.tau_hat_sq) {
                lines.push(format!("sigma_hat_sq = {sig:.5}, tau_hat_sq = {tau:.5}"));
            }
            if let (Some(bar), Some(pred)) = (summary.delta_bar, summary.predicted_tau_sq) {
                lines.push(format!(
                    "delta_bar = {bar:.5}, predicted tau_sq = sigma_sq - delta_bar^2 = {pred:.5}"
                ));
            }
            if let Some(t) = &summary.paired_test {
                lines.push(format!(
                    "one-sided variance test (poisson > binomial): t = {:.3}, p = {:.4}",
                    t.t_statistic, t.p_value
                ));
            }
            if let Some(gate) = &summary.percolation_gate {
                lines.push(format!(
                    "percolation gate: r = {} vs threshold {:.4} ({})",
                    gate.r,
                    gate.threshold,
                    if gate.triggered { "TRIGGERED" } else { "clear" }
                ));
            }
            lines.extend(summary.flags.iter().map(|f| format!("note: {f}")));
        }
        ExperimentConfig::Stabilization(c) => {
            let (summary, traces) = run_stabilization(c, opts.threads)?;
            sink.write("traces.csv", &traces_csv(&traces))?;
            sink.write("summary.json", &to_json(&summary)?)?;
            lines.push(format!(
                "{}/{} traces settled; injection agreement {}/{}",
                summary.settled,
                summary.traces,
                summary.injection_agreements,
                summary.injection_checked
            ));
            if let Some(median) = summary.settle_radius_median {
                lines.push(format!("settle radius median = {median}"));
            }
            lines.extend(summary.flags.iter().map(|f| format!("note: {f}")));
        }
        ExperimentConfig::Percolation(c) => {
            let estimate = run_percolation(c)?;
            sink.write("curve.csv", &spanning_curve_csv(&estimate))?;
            sink.write("summary.json", &to_json(&estimate)?)?;
            for size in &estimate.per_size {
                lines.push(format!(
                    "side {}: r_hat = {:.4}, band = [{:.4}, {:.4}]",
                    size.torus_side, size.r_hat, size.band.0, size.band.1
                ));
            }
            lines.push(format!(
                "max relative drift across sizes = {:.4}",
                estimate.max_relative_drift
            ));
        }
        ExperimentConfig::CouplingCheck(c) => {
            let summary = run_coupling_check(c, opts.threads)?;
            sink.write("summary.json", &to_json(&summary)?)?;
            lines.push(format!(
                "identical in {}/{} trials ({:.4}); exp(-|f-g|_1) = {:.4}; {}",
                summary.identical,
                summary.trials,
                summary.observed_frequency,
                summary.expected_probability,
                if summary.within_three_sigma {
                    "within three sigma"
                } else {
                    "OUTSIDE three sigma"
                }
            ));
        }
    }

    let manifest = RunManifest {
        experiment: cfg.experiment_name().to_string(),
        config_hash: cfg.config_hash()?,
        master_seed: cfg.master_seed(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        csv_format_version: CSV_FORMAT_VERSION,
        started_unix: started,
        finished_unix: unix_now(),
        outputs: sink.names.clone(),
    };
    fs::write(sink.dir.join("manifest.json"), to_json(&manifest)?)?;
    Ok(RunReport { out_dir: sink.dir, manifest, lines })
}
