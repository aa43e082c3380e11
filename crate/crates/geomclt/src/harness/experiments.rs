//! The experiment drivers behind the CLI subcommands. Each takes a
//! validated config plus a worker count and returns a summary and the
//! per-replication records that back it.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{evaluate, FunctionalSpec};
use crate::geometry::Window;
use crate::percolation::{estimate_percolation_radius, PercolationEstimate, RadiusGrid};
use crate::point_process::{
    draw_density_points, sample_binomial, sample_coupled_pair, sample_homogeneous,
    sample_inhomogeneous, sample_poissonized, scale_cloud, DensityGrid, PointCloud, RngStream,
};
use crate::stabilization::{
    estimate_limit_delta, injection_probe, trace_add_one_cost, StabilizationTrace,
    DELTA_WINDOW_HALFWIDTH,
};
use crate::stats::paired_variance_gt;

use super::{
    growth_of, replicate, stream_of, summarize_sample, variance_std_error, CltSummary, GateReport,
    LevelEntry, PairedVarianceTest, ReplicationRecord, SllnEntry, AUX_DELTA_BLOCK,
    AUX_LEVEL_BLOCK,
};

/// Salt applied to the master seed for the auxiliary percolation gate run,
/// which builds its own stream space and would otherwise collide with the
/// main replication streams.
const GATE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn check_schedule<T: PartialOrd + Copy>(schedule: &[T], what: &str) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::config(format!("{what} must not be empty")));
    }
    if schedule.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::config(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

fn check_replications(m: u64) -> Result<()> {
    if m < 2 {
        return Err(Error::config("replications must be at least 2"));
    }
    Ok(())
}

/// Distinct nonzero density levels with the total volume each occupies.
fn density_levels(f: &DensityGrid) -> Vec<(f64, f64)> {
    let mut levels: Vec<f64> = f.values.iter().copied().filter(|&v| v > 0.0).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let cell_volume = f.cell_volume();
    levels
        .into_iter()
        .map(|level| {
            let cells = f.values.iter().filter(|&&v| v == level).count();
            (level, cells as f64 * cell_volume)
        })
        .collect()
}

// Homogeneous CLT ------------------------------------------------------

/// Replicated evaluation of a functional over homogeneous Poisson samples
/// on cubes `[0, n^{1/d})^d` for each `n` in the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousCltConfig {
    pub functional: FunctionalSpec,
    pub dimension: usize,
    pub lambda: f64,
    pub n_schedule: Vec<f64>,
    pub replications: u64,
    pub master_seed: u64,
}

impl HomogeneousCltConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::config("dimension must be 1, 2, or 3"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config("lambda must be nonnegative and finite"));
        }
        check_schedule(&self.n_schedule, "n_schedule")?;
        if self.n_schedule.iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
            return Err(Error::config("n_schedule entries must be positive and finite"));
        }
        check_replications(self.replications)?;
        self.functional.validate(self.dimension)
    }
}

pub fn run_homogeneous_clt(
    cfg: &HomogeneousCltConfig,
    workers: usize,
) -> Result<(CltSummary, Vec<ReplicationRecord>)> {
    cfg.validate()?;
    let mut summary = CltSummary::new(
        "clt-homogeneous",
        cfg.functional.label(),
        cfg.dimension,
        cfg.master_seed,
    );
    let mut records = Vec::new();
    for (ni, &n) in cfg.n_schedule.iter().enumerate() {
        let side = n.powf(1.0 / cfg.dimension as f64);
        let window = Window::cube(side, cfg.dimension)?;
        let batch = replicate(cfg.replications, workers, |rep| {
            let stream = RngStream::new(cfg.master_seed, stream_of(ni as u64, rep));
            let t0 = Instant::now();
            let cloud = sample_homogeneous(cfg.lambda, &window, stream)?;
            let value = evaluate(&cfg.functional, &cloud)?;
            Ok(ReplicationRecord {
                index: rep,
                n,
                value,
                point_count: cloud.len() as u64,
                wall_ms: t0.elapsed().as_secs_f64() * 1e3,
            })
        })?;
        let s = summarize_sample(n, &batch)?;
        if s.degenerate {
            summary.flags.push(format!("degenerate variance at n={n}"));
        }
        summary.per_n.push(s);
        records.extend(batch);
    }
    summary.sigma_hat_sq = summary.per_n.last().map(|s| s.variance_per_n);
    attach_growth(&mut summary, records.iter());
    Ok((summary, records))
}

fn attach_growth<'a>(summary: &mut CltSummary, records: impl Iterator<Item = &'a ReplicationRecord>) {
    let refs: Vec<&ReplicationRecord> = records.collect();
    let g = growth_of(&refs);
    if g.implied_exponent > 4.0 {
        summary.flags.push(format!(
            "growth diagnostic: |H| reached {:.3e}, implied exponent {:.2}",
            g.max_abs_value, g.implied_exponent
        ));
    }
    summary.growth = Some(g);
}

// Block approximation --------------------------------------------------

/// Compares the full-cube functional against sums over disjoint lattice
/// blocks of volume `L`, reporting `Var[(H(P_n) - Σ_blocks H)/√n]` per `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockApproxConfig {
    pub functional: FunctionalSpec,
    pub dimension: usize,
    pub lambda: f64,
    pub n: f64,
    pub l_schedule: Vec<f64>,
    pub replications: u64,
    pub master_seed: u64,
}

impl BlockApproxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::config("dimension must be 1, 2, or 3"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config("lambda must be nonnegative and finite"));
        }
        if !(self.n > 0.0) || !self.n.is_finite() {
            return Err(Error::config("n must be positive and finite"));
        }
        check_schedule(&self.l_schedule, "l_schedule")?;
        if self.l_schedule.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::config("l_schedule entries must be positive and finite"));
        }
        check_replications(self.replications)?;
        self.functional.validate(self.dimension)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub l: f64,
    pub blocks_per_axis: usize,
    pub block_count: u64,
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTable {
    pub experiment: String,
    pub functional: String,
    pub dimension: usize,
    pub master_seed: u64,
    pub n: f64,
    pub replications: u64,
    pub rows: Vec<BlockRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// Lower-corner lattice of `k^d` cubes of side `bs` inside `[0, side)^d`.
fn block_windows(dim: usize, k: usize, bs: f64) -> Result<Vec<Window>> {
    let mut out = Vec::with_capacity(k.pow(dim as u32));
    let mut idx = vec![0usize; dim];
    loop {
        let corner: Vec<f64> = idx.iter().map(|&i| i as f64 * bs).collect();
        out.push(Window::new(corner, vec![bs; dim])?);
        let mut axis = dim;
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < k {
                break;
            }
            idx[axis] = 0;
        }
    }
}

pub fn run_block_approximation(
    cfg: &BlockApproxConfig,
    workers: usize,
) -> Result<(BlockTable, Vec<ReplicationRecord>)> {
    cfg.validate()?;
    let d = cfg.dimension;
    let side = cfg.n.powf(1.0 / d as f64);
    let window = Window::cube(side, d)?;
    // Block layouts are fixed across replications: only fully contained
    // blocks count, so k = floor(side / L^{1/d}) per axis and L > n skips.
    let layouts: Vec<(f64, usize, Option<Vec<Window>>)> = cfg
        .l_schedule
        .iter()
        .map(|&l| {
            let bs = l.powf(1.0 / d as f64);
            let k = ((side / bs) + 1e-9).floor() as usize;
            if k == 0 {
                Ok((l, 0, None))
            } else {
                Ok((l, k, Some(block_windows(d, k, bs)?)))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let batch = replicate(cfg.replications, workers, |rep| {
        let stream = RngStream::new(cfg.master_seed, stream_of(0, rep));
        let t0 = Instant::now();
        let cloud = sample_homogeneous(cfg.lambda, &window, stream)?;
        let full = evaluate(&cfg.functional, &cloud)?;
        let mut diffs = Vec::with_capacity(layouts.len());
        for (_, _, blocks) in &layouts {
            match blocks {
                None => diffs.push(None),
                Some(ws) => {
                    let mut sum = 0.0;
                    for w in ws {
                        sum += evaluate(&cfg.functional, &cloud.restrict(w))?;
                    }
                    diffs.push(Some((full - sum) / cfg.n.sqrt()));
                }
            }
        }
        let record = ReplicationRecord {
            index: rep,
            n: cfg.n,
            value: full,
            point_count: cloud.len() as u64,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        };
        Ok((record, diffs))
    })?;

    let mut table = BlockTable {
        experiment: "clt-blocks".to_string(),
        functional: cfg.functional.label(),
        dimension: d,
        master_seed: cfg.master_seed,
        n: cfg.n,
        replications: cfg.replications,
        rows: Vec::new(),
        flags: Vec::new(),
    };
    for (li, (l, k, _)) in layouts.iter().enumerate() {
        if *k == 0 {
            table.flags.push(format!("block volume L={l} exceeds the box, row skipped"));
            table.rows.push(BlockRow {
                l: *l,
                blocks_per_axis: 0,
                block_count: 0,
                skipped: true,
                variance: None,
                std_error: None,
            });
            continue;
        }
        let diffs: Vec<f64> = batch.iter().map(|(_, ds)| ds[li].unwrap()).collect();
        let m = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / m;
        let variance = diffs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
        let se = variance_std_error(&diffs);
        table.rows.push(BlockRow {
            l: *l,
            blocks_per_axis: *k,
            block_count: (k.pow(d as u32)) as u64,
            skipped: false,
            variance: Some(variance),
            std_error: if se.is_finite() { Some(se) } else { None },
        });
    }
    let records = batch.into_iter().map(|(r, _)| r).collect();
    Ok((table, records))
}

// Inhomogeneous (Poissonized) CLT --------------------------------------

/// CLT run for the rescaled inhomogeneous process with intensity `n f`,
/// mapped back to volume `n` by the factor `n^{1/d}`. Includes the
/// per-level homogeneous variance table and the additivity prediction
/// `σ² = Σ_cells σ̂²(f_c) · cell_volume`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousCltConfig {
    pub functional: FunctionalSpec,
    pub density: DensityGrid,
    pub n_schedule: Vec<f64>,
    pub replications: u64,
    /// Volume of the homogeneous cube used for each per-level variance run.
    pub level_volume: f64,
    pub level_replications: u64,
    pub master_seed: u64,
}

impl InhomogeneousCltConfig {
    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        let d = self.density.dim();
        if !(1..=3).contains(&d) {
            return Err(Error::config("density dimension must be 1, 2, or 3"));
        }
        check_schedule(&self.n_schedule, "n_schedule")?;
        if self.n_schedule.iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
            return Err(Error::config("n_schedule entries must be positive and finite"));
        }
        check_replications(self.replications)?;
        check_replications(self.level_replications)?;
        if !(self.level_volume > 0.0) || !self.level_volume.is_finite() {
            return Err(Error::config("level_volume must be positive and finite"));
        }
        self.functional.validate(d)
    }
}

pub fn run_inhomogeneous_clt(
    cfg: &InhomogeneousCltConfig,
    workers: usize,
) -> Result<(CltSummary, Vec<ReplicationRecord>)> {
    cfg.validate()?;
    let d = cfg.density.dim();
    let mut summary =
        CltSummary::new("clt-poisson", cfg.functional.label(), d, cfg.master_seed);
    let mut records = Vec::new();
    for (ni, &n) in cfg.n_schedule.iter().enumerate() {
        let intensity = cfg.density.scaled(n)?;
        let factor = n.powf(1.0 / d as f64);
        let batch = replicate(cfg.replications, workers, |rep| {
            let stream = RngStream::new(cfg.master_seed, stream_of(ni as u64, rep));
            let t0 = Instant::now();
            let cloud = scale_cloud(&sample_inhomogeneous(&intensity, stream)?, factor)?;
            let value = evaluate(&cfg.functional, &cloud)?;
            Ok(ReplicationRecord {
                index: rep,
                n,
                value,
                point_count: cloud.len() as u64,
                wall_ms: t0.elapsed().as_secs_f64() * 1e3,
            })
        })?;
        let s = summarize_sample(n, &batch)?;
        if s.degenerate {
            summary.flags.push(format!("degenerate variance at n={n}"));
        }
        summary.per_n.push(s);
        records.extend(batch);
    }
    summary.sigma_hat_sq = summary.per_n.last().map(|s| s.variance_per_n);

    // Per-level variance runs; the zero level contributes nothing.
    let levels = density_levels(&cfg.density);
    let mut predicted = 0.0;
    for (li, &(level, volume)) in levels.iter().enumerate() {
        let side = cfg.level_volume.powf(1.0 / d as f64);
        let window = Window::cube(side, d)?;
        let batch = replicate(cfg.level_replications, workers, |rep| {
            let stream =
                RngStream::new(cfg.master_seed, stream_of(AUX_LEVEL_BLOCK + li as u64, rep));
            let cloud = sample_homogeneous(level, &window, stream)?;
            evaluate(&cfg.functional, &cloud)
        })?;
        let m = batch.len() as f64;
        let mean = batch.iter().sum::<f64>() / m;
        let var = batch.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
        let sigma_hat_sq = var / cfg.level_volume;
        let se = variance_std_error(&batch) / cfg.level_volume;
        predicted += sigma_hat_sq * volume;
        summary.level_table.push(LevelEntry {
            lambda: level,
            functional: cfg.functional.label(),
            dimension: d,
            level_volume: cfg.level_volume,
            replications: cfg.level_replications,
            sigma_hat_sq,
            std_error: se,
        });
    }
    summary.predicted_sigma_sq = Some(predicted);
    attach_growth(&mut summary, records.iter());
    Ok((summary, records))
}

// Paired Poissonized/binomial runs -------------------------------------

/// Limiting add-one-cost estimation settings for the de-Poissonization
/// variance identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaConfig {
    pub halfwidth: f64,
    pub replications: u64,
}

impl Default for DeltaConfig {
    fn default() -> Self {
        DeltaConfig { halfwidth: DELTA_WINDOW_HALFWIDTH, replications: 2000 }
    }
}

/// Percolation gate settings for Betti runs. Without a hint the critical
/// radius is estimated on small tori under a salted seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    #[serde(default)]
    pub r_c_hint: Option<f64>,
    #[serde(default = "GateConfig::default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub sizes: Option<Vec<f64>>,
}

impl GateConfig {
    fn default_replications() -> u64 {
        60
    }
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig { r_c_hint: None, replications: 60, sizes: None }
    }
}

/// Shared config of the paired experiments: the binomial process `X_n`
/// (exactly `n` i.i.d. points with density `f/∫f`) against its
/// Poissonization `P_n` (the first `N ~ Poisson(n)` points of the same
/// i.i.d. sequence), coupled through one stream per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedCltConfig {
    pub functional: FunctionalSpec,
    pub density: DensityGrid,
    pub n_schedule: Vec<u64>,
    pub replications: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub delta: Option<DeltaConfig>,
    #[serde(default)]
    pub gate: Option<GateConfig>,
}

impl PairedCltConfig {
    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        let d = self.density.dim();
        if !(1..=3).contains(&d) {
            return Err(Error::config("density dimension must be 1, 2, or 3"));
        }
        if !(self.density.total_mass() > 0.0) {
            return Err(Error::config("density must have positive total mass"));
        }
        check_schedule(&self.n_schedule, "n_schedule")?;
        if self.n_schedule.iter().any(|&n| n == 0) {
            return Err(Error::config("n_schedule entries must be positive"));
        }
        check_replications(self.replications)?;
        if let Some(delta) = &self.delta {
            if !(delta.halfwidth > 0.0) || !delta.halfwidth.is_finite() {
                return Err(Error::config("delta halfwidth must be positive and finite"));
            }
            check_replications(delta.replications)?;
        }
        self.functional.validate(d)
    }

    fn normalized_density(&self) -> Result<DensityGrid> {
        self.density.scaled(1.0 / self.density.total_mass())
    }
}

/// One coupled draw: `N ~ Poisson(n)`, then `max(n, N)` i.i.d. points; the
/// binomial cloud is the first `n`, the Poissonized cloud the first `N`,
/// both scaled by `n^{1/d}`.
fn paired_batch(
    q: &DensityGrid,
    spec: &FunctionalSpec,
    n: u64,
    ni: u64,
    replications: u64,
    master_seed: u64,
    workers: usize,
) -> Result<(Vec<ReplicationRecord>, Vec<ReplicationRecord>)> {
    let d = q.dim();
    let factor = (n as f64).powf(1.0 / d as f64);
    let batch = replicate(replications, workers, |rep| {
        let stream = RngStream::new(master_seed, stream_of(ni, rep));
        let mut rng = stream.rng();
        let count = crate::point_process::poisson_count(n as f64, &mut rng)?;
        let total = count.max(n) as usize;
        let points = draw_density_points(q, total, &mut rng)?;
        let scaled: Vec<crate::geometry::Point> = points
            .iter()
            .map(|p| crate::geometry::Point::new(p.coords.iter().map(|c| c * factor).collect()))
            .collect();
        let t0 = Instant::now();
        let poisson = PointCloud::new(d, scaled[..count as usize].to_vec())?;
        let value_p = evaluate(spec, &poisson)?;
        let ms_p = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let binomial = PointCloud::new(d, scaled[..n as usize].to_vec())?;
        let value_b = evaluate(spec, &binomial)?;
        let ms_b = t1.elapsed().as_secs_f64() * 1e3;
        Ok((
            ReplicationRecord {
                index: rep,
                n: n as f64,
                value: value_p,
                point_count: count,
                wall_ms: ms_p,
            },
            ReplicationRecord {
                index: rep,
                n: n as f64,
                value: value_b,
                point_count: n,
                wall_ms: ms_b,
            },
        ))
    })?;
    Ok(batch.into_iter().unzip())
}

/// Integral `Δ̄ = Σ_levels E[Δ(λ)] · λ · vol(λ)` of the limiting add-one
/// cost against the density, with the propagated standard error (cells of
/// one level share an estimate, so their contributions are fully
/// correlated).
fn delta_bar_of(
    q: &DensityGrid,
    spec: &FunctionalSpec,
    delta: &DeltaConfig,
    master_seed: u64,
) -> Result<(f64, f64)> {
    let d = q.dim();
    let mut bar = 0.0;
    let mut var = 0.0;
    for (li, (level, volume)) in density_levels(q).into_iter().enumerate() {
        let base = RngStream::new(master_seed, stream_of(AUX_DELTA_BLOCK + li as u64, 0));
        let (mean, se) =
            estimate_limit_delta(spec, level, d, delta.halfwidth, delta.replications, base)?;
        let mass = level * volume;
        bar += mean * mass;
        var += (se * mass) * (se * mass);
    }
    Ok((bar, var.sqrt()))
}

fn summarize_paired(
    summary: &mut CltSummary,
    poisson: &[Vec<ReplicationRecord>],
    binomial: &[Vec<ReplicationRecord>],
    schedule: &[u64],
) -> Result<()> {
    let mut binomial_summaries = Vec::new();
    for ((p, b), &n) in poisson.iter().zip(binomial).zip(schedule) {
        let sp = summarize_sample(n as f64, p)?;
        let sb = summarize_sample(n as f64, b)?;
        if sp.degenerate || sb.degenerate {
            summary.flags.push(format!("degenerate variance at n={n}"));
        }
        summary.per_n.push(sp);
        binomial_summaries.push(sb);
    }
    // Reference scale for the variance identity: the largest n.
    let last = schedule.len() - 1;
    let n_ref = schedule[last] as f64;
    let pv: Vec<f64> = poisson[last].iter().map(|r| r.value).collect();
    let bv: Vec<f64> = binomial[last].iter().map(|r| r.value).collect();
    let (t, p_value) = paired_variance_gt(&pv, &bv)?;
    summary.paired_test = Some(PairedVarianceTest { t_statistic: t, p_value });
    let var_p = summary.per_n[last].variance_per_n;
    let var_b = binomial_summaries[last].variance_per_n;
    summary.sigma_hat_sq = Some(var_p);
    summary.tau_hat_sq = Some(var_b);
    summary.variance_gap = Some(var_p - var_b);
    let counts: Vec<f64> = poisson[last].iter().map(|r| r.point_count as f64).collect();
    let m = counts.len() as f64;
    let mean_c = counts.iter().sum::<f64>() / m;
    let var_c = counts.iter().map(|c| (c - mean_c) * (c - mean_c)).sum::<f64>() / (m - 1.0);
    summary.count_variance_per_n = Some(var_c / n_ref);
    summary.binomial_per_n = Some(binomial_summaries);
    Ok(())
}

fn attach_delta_identity(summary: &mut CltSummary, delta_bar: f64, delta_se: f64) {
    summary.delta_bar = Some(delta_bar);
    summary.delta_bar_std_error = Some(delta_se);
    let sigma = summary.sigma_hat_sq.unwrap_or(0.0);
    let predicted = sigma - delta_bar * delta_bar;
    if predicted < 0.0 {
        summary.flags.push("predicted tau squared clamped to zero".to_string());
    }
    summary.predicted_tau_sq = Some(predicted.max(0.0));
    if let Some(gap) = summary.variance_gap {
        if delta_bar != 0.0 {
            summary.gap_over_delta_bar_sq = Some(gap / (delta_bar * delta_bar));
        }
    }
}

/// De-Poissonization experiment: paired runs of `X_n` and `P_n`, the
/// one-sided variance comparison, and the identity
/// `τ² = σ² − Δ̄²` checked against the direct binomial estimate.
pub fn run_depoissonization(
    cfg: &PairedCltConfig,
    workers: usize,
) -> Result<(CltSummary, Vec<ReplicationRecord>, Vec<ReplicationRecord>)> {
    cfg.validate()?;
    let q = cfg.normalized_density()?;
    let d = q.dim();
    let mut summary =
        CltSummary::new("clt-binomial", cfg.functional.label(), d, cfg.master_seed);
    let mut poisson = Vec::new();
    let mut binomial = Vec::new();
    for (ni, &n) in cfg.n_schedule.iter().enumerate() {
        let (p, b) = paired_batch(
            &q,
            &cfg.functional,
            n,
            ni as u64,
            cfg.replications,
            cfg.master_seed,
            workers,
        )?;
        poisson.push(p);
        binomial.push(b);
    }
    summarize_paired(&mut summary, &poisson, &binomial, &cfg.n_schedule)?;
    let delta = cfg.delta.clone().unwrap_or_default();
    let (delta_bar, delta_se) = delta_bar_of(&q, &cfg.functional, &delta, cfg.master_seed)?;
    attach_delta_identity(&mut summary, delta_bar, delta_se);
    attach_growth(&mut summary, poisson.iter().flatten().chain(binomial.iter().flatten()));
    let p_records = poisson.into_iter().flatten().collect();
    let b_records = binomial.into_iter().flatten().collect();
    Ok((summary, p_records, b_records))
}

/// Betti-number CLT for both the Poissonized and binomial processes, with
/// the SLLN table `β_k/n` and the thermodynamic-regime percolation gate.
pub fn run_betti_clt(
    cfg: &PairedCltConfig,
    workers: usize,
) -> Result<(CltSummary, Vec<ReplicationRecord>, Vec<ReplicationRecord>)> {
    cfg.validate()?;
    let (k, r) = match cfg.functional {
        FunctionalSpec::BettiK { k, r } => (k, r),
        _ => {
            return Err(Error::invalid(
                "the Betti CLT experiment needs a betti_k functional",
            ))
        }
    };
    let q = cfg.normalized_density()?;
    let d = q.dim();
    let mut summary = CltSummary::new("clt-binomial", cfg.functional.label(), d, cfg.master_seed);
    let mut poisson = Vec::new();
    let mut binomial = Vec::new();
    for (ni, &n) in cfg.n_schedule.iter().enumerate() {
        let (p, b) = paired_batch(
            &q,
            &cfg.functional,
            n,
            ni as u64,
            cfg.replications,
            cfg.master_seed,
            workers,
        )?;
        poisson.push(p);
        binomial.push(b);
    }
    summarize_paired(&mut summary, &poisson, &binomial, &cfg.n_schedule)?;
    summary.slln = Some(
        cfg.n_schedule
            .iter()
            .enumerate()
            .map(|(i, &n)| SllnEntry {
                n: n as f64,
                poisson_mean_per_n: summary.per_n[i].mean / n as f64,
                binomial_mean_per_n: summary.binomial_per_n.as_ref().unwrap()[i].mean / n as f64,
            })
            .collect(),
    );
    if let Some(delta) = &cfg.delta {
        let (delta_bar, delta_se) = delta_bar_of(&q, &cfg.functional, delta, cfg.master_seed)?;
        attach_delta_identity(&mut summary, delta_bar, delta_se);
    }

    let gate_cfg = cfg.gate.clone().unwrap_or_default();
    let r_c = match gate_cfg.r_c_hint {
        Some(hint) => hint,
        None => {
            let sizes = gate_cfg.sizes.clone().unwrap_or_else(|| {
                if d == 3 {
                    vec![6.0, 8.0]
                } else {
                    vec![10.0, 14.0]
                }
            });
            let grid = RadiusGrid::default_for_dim(d);
            let est = estimate_percolation_radius(
                d,
                &sizes,
                gate_cfg.replications,
                &grid,
                cfg.master_seed ^ GATE_SEED_SALT,
            )?;
            est.per_size.last().map(|s| s.r_hat).unwrap_or(f64::NAN)
        }
    };
    let lambda_sup = q.sup_value();
    let threshold = lambda_sup.powf(-1.0 / d as f64) * r_c;
    let triggered = r >= threshold;
    if triggered {
        summary.flags.push(format!(
            "radius {r} is at or beyond the estimated percolation threshold {threshold:.4}; \
             degree-{k} cycle counts may leave the thermodynamic regime"
        ));
    }
    summary.percolation_gate = Some(GateReport {
        r,
        lambda_sup,
        r_c_estimate: r_c,
        threshold,
        triggered,
        advisory: d == 2,
    });
    attach_growth(&mut summary, poisson.iter().flatten().chain(binomial.iter().flatten()));
    let p_records = poisson.into_iter().flatten().collect();
    let b_records = binomial.into_iter().flatten().collect();
    Ok((summary, p_records, b_records))
}

// Percolation ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationConfig {
    pub dimension: usize,
    pub sizes: Vec<f64>,
    pub replications: u64,
    #[serde(default)]
    pub grid: Option<RadiusGrid>,
    pub master_seed: u64,
}

pub fn run_percolation(cfg: &PercolationConfig) -> Result<PercolationEstimate> {
    let grid = cfg.grid.clone().unwrap_or_else(|| RadiusGrid::default_for_dim(cfg.dimension));
    estimate_percolation_radius(
        cfg.dimension,
        &cfg.sizes,
        cfg.replications,
        &grid,
        cfg.master_seed,
    )
}

// Stabilization --------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationConfig {
    pub functional: FunctionalSpec,
    pub dimension: usize,
    pub lambda: f64,
    pub max_halfwidth: f64,
    pub steps: usize,
    pub traces: u64,
    /// Points injected outside the settle radius per settled trace; zero
    /// disables the probe.
    #[serde(default = "StabilizationConfig::default_injection")]
    pub injection_points: usize,
    pub master_seed: u64,
}

impl StabilizationConfig {
    fn default_injection() -> usize {
        4
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::config("dimension must be 1, 2, or 3"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::config("lambda must be nonnegative and finite"));
        }
        if !(self.max_halfwidth > 0.0) || !self.max_halfwidth.is_finite() {
            return Err(Error::config("max_halfwidth must be positive and finite"));
        }
        if self.steps < 2 {
            return Err(Error::config("steps must be at least 2"));
        }
        if self.traces == 0 {
            return Err(Error::config("traces must be positive"));
        }
        self.functional.validate(self.dimension)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationSummary {
    pub experiment: String,
    pub functional: String,
    pub dimension: usize,
    pub lambda: f64,
    pub master_seed: u64,
    pub traces: u64,
    pub settled: u64,
    pub settled_fraction: f64,
    pub injection_checked: u64,
    pub injection_agreements: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injection_agreement_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settle_radius_median: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settle_radius_p90: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    Some(sorted[idx])
}

pub fn run_stabilization(
    cfg: &StabilizationConfig,
    workers: usize,
) -> Result<(StabilizationSummary, Vec<StabilizationTrace>)> {
    cfg.validate()?;
    let batch = replicate(cfg.traces, workers, |i| {
        let stream = RngStream::new(cfg.master_seed, stream_of(0, i));
        let (trace, master) = trace_add_one_cost(
            &cfg.functional,
            cfg.lambda,
            cfg.dimension,
            cfg.max_halfwidth,
            cfg.steps,
            stream,
        )?;
        let injection = match (trace.settle_radius, cfg.injection_points) {
            (Some(radius), count) if count > 0 => Some(injection_probe(
                &cfg.functional,
                &master,
                cfg.max_halfwidth,
                radius,
                count,
                RngStream::new(cfg.master_seed, stream_of(1, i)),
            )?),
            _ => None,
        };
        Ok((trace, injection))
    })?;

    let mut radii: Vec<f64> = batch.iter().filter_map(|(t, _)| t.settle_radius).collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let settled = radii.len() as u64;
    let checked = batch.iter().filter(|(_, inj)| inj.is_some()).count() as u64;
    let agreements = batch.iter().filter(|(_, inj)| *inj == Some(true)).count() as u64;
    let mut summary = StabilizationSummary {
        experiment: "stabilization".to_string(),
        functional: cfg.functional.label(),
        dimension: cfg.dimension,
        lambda: cfg.lambda,
        master_seed: cfg.master_seed,
        traces: cfg.traces,
        settled,
        settled_fraction: settled as f64 / cfg.traces as f64,
        injection_checked: checked,
        injection_agreements: agreements,
        injection_agreement_fraction: if checked > 0 {
            Some(agreements as f64 / checked as f64)
        } else {
            None
        },
        settle_radius_median: quantile(&radii, 0.5),
        settle_radius_p90: quantile(&radii, 0.9),
        flags: Vec::new(),
    };
    if settled < cfg.traces {
        summary.flags.push(format!(
            "{} of {} traces did not settle by halfwidth {}",
            cfg.traces - settled,
            cfg.traces,
            cfg.max_halfwidth
        ));
    }
    if checked > 0 && agreements < checked {
        summary
            .flags
            .push("injection outside the settle radius changed some add-one costs".to_string());
    }
    let traces = batch.into_iter().map(|(t, _)| t).collect();
    Ok((summary, traces))
}

// Coupling -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub f: DensityGrid,
    pub g: DensityGrid,
    pub trials: u64,
    pub master_seed: u64,
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        self.f.validate()?;
        self.g.validate()?;
        if self.f.support != self.g.support || self.f.cells_per_axis != self.g.cells_per_axis {
            return Err(Error::config("coupled densities must share support box and grid"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be positive"));
        }
        Ok(())
    }

    /// `∫ |f − g|` over the shared support.
    pub fn l1_distance(&self) -> f64 {
        let v = self.f.cell_volume();
        self.f
            .values
            .iter()
            .zip(&self.g.values)
            .map(|(a, b)| (a - b).abs() * v)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub experiment: String,
    pub master_seed: u64,
    pub trials: u64,
    pub identical: u64,
    pub observed_frequency: f64,
    pub l1_distance: f64,
    pub expected_probability: f64,
    pub std_error: f64,
    pub abs_deviation: f64,
    pub within_three_sigma: bool,
}

/// Runs the maximal-thinning coupling and compares the frequency of exact
/// agreement against `exp(−∫|f−g|)` at three binomial standard errors.
pub fn run_coupling_check(cfg: &CouplingConfig, workers: usize) -> Result<CouplingSummary> {
    cfg.validate()?;
    let matches = replicate(cfg.trials, workers, |t| {
        let stream = RngStream::new(cfg.master_seed, stream_of(0, t));
        let (a, b) = sample_coupled_pair(&cfg.f, &cfg.g, stream)?;
        Ok(u64::from(a == b))
    })?;
    let identical: u64 = matches.iter().sum();
    let observed = identical as f64 / cfg.trials as f64;
    let l1 = cfg.l1_distance();
    let expected = (-l1).exp();
    let std_error = (expected * (1.0 - expected) / cfg.trials as f64).sqrt();
    let abs_deviation = (observed - expected).abs();
    Ok(CouplingSummary {
        experiment: "coupling-check".to_string(),
        master_seed: cfg.master_seed,
        trials: cfg.trials,
        identical,
        observed_frequency: observed,
        l1_distance: l1,
        expected_probability: expected,
        std_error,
        abs_deviation,
        within_three_sigma: abs_deviation <= 3.0 * std_error,
    })
}

// Sampling and single-cloud Betti --------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum SampleProcess {
    /// Exactly `n` i.i.d. points with density `density/∫density`.
    Binomial { density: DensityGrid, n: usize },
    /// `N ~ Poisson(n)` points of the same i.i.d. law.
    Poissonized { density: DensityGrid, n: f64 },
    /// Homogeneous Poisson process on a window.
    Homogeneous { lambda: f64, window: Window },
    /// Poisson process whose intensity is the grid itself.
    Inhomogeneous { intensity: DensityGrid },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    #[serde(flatten)]
    pub process: SampleProcess,
    pub master_seed: u64,
}

pub fn run_sample(cfg: &SampleConfig) -> Result<PointCloud> {
    let stream = RngStream::new(cfg.master_seed, 0);
    match &cfg.process {
        SampleProcess::Binomial { density, n } => sample_binomial(density, *n, stream),
        SampleProcess::Poissonized { density, n } => sample_poissonized(density, *n, stream),
        SampleProcess::Homogeneous { lambda, window } => {
            sample_homogeneous(*lambda, window, stream)
        }
        SampleProcess::Inhomogeneous { intensity } => sample_inhomogeneous(intensity, stream),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BettiConfig {
    pub dimension: usize,
    pub r: f64,
    /// Highest simplex dimension built; defaults to the ambient dimension,
    /// which the nerve theorem makes sufficient.
    #[serde(default)]
    pub k_max: Option<usize>,
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BettiReport {
    pub experiment: String,
    pub dimension: usize,
    pub r: f64,
    pub k_max: usize,
    pub point_count: usize,
    pub simplex_counts: Vec<usize>,
    pub betti: Vec<usize>,
    pub euler_characteristic: i64,
    pub components: usize,
}

pub fn run_betti(cfg: &BettiConfig) -> Result<BettiReport> {
    if !(1..=3).contains(&cfg.dimension) {
        return Err(Error::config("dimension must be 1, 2, or 3"));
    }
    let points = cfg
        .points
        .iter()
        .map(|c| crate::geometry::Point::new(c.clone()))
        .collect::<Vec<_>>();
    let cloud = PointCloud::new(cfg.dimension, points)?;
    let k_max = cfg.k_max.unwrap_or(cfg.dimension).max(1);
    let complex = crate::cech::build_cech(&cloud, cfg.r, k_max)?;
    // Degrees up to k_max - 1 have their full boundary context available,
    // so every reported Betti number is exact.
    let betti = crate::homology::betti_numbers(&complex, k_max - 1)?;
    let components = crate::homology::betti0_unionfind(&complex);
    Ok(BettiReport {
        experiment: "betti".to_string(),
        dimension: cfg.dimension,
        r: cfg.r,
        k_max,
        point_count: cloud.len(),
        simplex_counts: (0..=k_max).map(|k| complex.simplex_count(k)).collect(),
        betti: betti.values,
        euler_characteristic: complex.euler_characteristic(),
        components,
    })
}
