//! Seeded samplers for binomial, Poissonized, homogeneous, inhomogeneous,
//! and coupled point processes over piecewise-constant densities.
//!
//! All randomness flows through [`RngStream`]: a (master seed, stream index)
//! pair mapped to an independent counter-based ChaCha stream. Replication
//! `i` of an experiment always draws from stream `i`, so results do not
//! depend on how replications are scheduled across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Window};

/// Piecewise-constant nonnegative density on a regular grid over a box.
///
/// `values` is row-major with the last axis varying fastest. Values carry
/// units of 1/length^d; the grid doubles as an intensity function when its
/// values are not normalized to total mass 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub support: Window,
    pub cells_per_axis: Vec<usize>,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(support: Window, cells_per_axis: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let grid = DensityGrid { support, cells_per_axis, values };
        grid.validate()?;
        Ok(grid)
    }

    pub fn uniform(support: Window, value: f64) -> Result<Self> {
        let d = support.dim();
        DensityGrid::new(support, vec![1; d], vec![value])
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells_per_axis.len() != self.support.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.support.dim(),
                got: self.cells_per_axis.len(),
            });
        }
        if self.cells_per_axis.iter().any(|&c| c == 0) {
            return Err(Error::invalid("cells_per_axis entries must be positive"));
        }
        let expected: usize = self.cells_per_axis.iter().product();
        if self.values.len() != expected {
            return Err(Error::invalid(format!(
                "expected {} cell values, got {}",
                expected,
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("density values must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.support.volume() / self.cell_count() as f64
    }

    /// Total mass `∫ f = Σ value · cell_volume`.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Essential supremum of the density (max over cells).
    pub fn sup_value(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Same grid with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<DensityGrid> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::invalid("scale factor must be nonnegative and finite"));
        }
        DensityGrid::new(
            self.support.clone(),
            self.cells_per_axis.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// Lower corner of cell `idx` (row-major, last axis fastest).
    fn cell_min_corner(&self, idx: usize) -> Vec<f64> {
        let d = self.dim();
        let mut rem = idx;
        let mut multi = vec![0usize; d];
        for a in (0..d).rev() {
            multi[a] = rem % self.cells_per_axis[a];
            rem /= self.cells_per_axis[a];
        }
        (0..d)
            .map(|a| {
                let side = self.support.side_lengths[a] / self.cells_per_axis[a] as f64;
                self.support.min_corner[a] + multi[a] as f64 * side
            })
            .collect()
    }

    /// Bounding window of cell `idx`.
    pub fn cell_window(&self, idx: usize) -> Result<Window> {
        if idx >= self.cell_count() {
            return Err(Error::invalid("cell index out of range"));
        }
        let d = self.dim();
        let sides: Vec<f64> = (0..d)
            .map(|a| self.support.side_lengths[a] / self.cells_per_axis[a] as f64)
            .collect();
        Window::new(self.cell_min_corner(idx), sides)
    }

    /// Per-cell masses `value · cell_volume`.
    pub fn cell_masses(&self) -> Vec<f64> {
        let v = self.cell_volume();
        self.values.iter().map(|x| x * v).collect()
    }
}

/// Finite point set with an explicit ambient dimension (meaningful even
/// when empty).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub dimension: usize,
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(dimension: usize, points: Vec<Point>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("cloud dimension must be at least 1"));
        }
        for p in &points {
            if p.dim() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: p.dim() });
            }
        }
        Ok(PointCloud { dimension, points })
    }

    pub fn empty(dimension: usize) -> Self {
        PointCloud { dimension, points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points falling inside `window` (half-open boxes), order preserved.
    pub fn restrict(&self, window: &Window) -> PointCloud {
        PointCloud {
            dimension: self.dimension,
            points: self.points.iter().filter(|p| window.contains(p)).cloned().collect(),
        }
    }

    pub fn translated(&self, shift: &[f64]) -> Result<PointCloud> {
        let points = self
            .points
            .iter()
            .map(|p| p.translated(shift))
            .collect::<Result<Vec<_>>>()?;
        PointCloud::new(self.dimension, points)
    }

    /// CSV with header `x0,...,x{d-1}`, one point per row, shortest
    /// round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.dimension).map(|a| format!("x{a}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for p in &self.points {
            let row: Vec<String> = p.coords.iter().map(|c| format!("{c}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Multiply every coordinate by `factor`.
pub fn scale_cloud(cloud: &PointCloud, factor: f64) -> Result<PointCloud> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::invalid("scale factor must be positive and finite"));
    }
    Ok(PointCloud {
        dimension: cloud.dimension,
        points: cloud
            .points
            .iter()
            .map(|p| Point::new(p.coords.iter().map(|c| c * factor).collect()))
            .collect(),
    })
}

/// Addressable slot in the deterministic RNG space: a master seed plus a
/// stream index. Equal pairs replay identical sequences; distinct indices
/// give independent streams of the same keyed cipher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream { master_seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Exact Poisson count. Delegates variate generation (inversion for small
/// means, transformed rejection for large) and handles the zero-mean case.
pub(crate) fn poisson_count(mean: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::invalid("Poisson mean must be nonnegative and finite"));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = rand_distr::Poisson::new(mean)
        .map_err(|e| Error::invalid(format!("Poisson mean rejected: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

fn uniform_in_window(window: &Window, rng: &mut ChaCha8Rng) -> Point {
    let coords = window
        .min_corner
        .iter()
        .zip(&window.side_lengths)
        .map(|(&lo, &s)| lo + rng.random::<f64>() * s)
        .collect();
    Point::new(coords)
}

/// Cumulative cell masses plus total; used for exact cell selection.
struct CellSampler {
    cumulative: Vec<f64>,
    total: f64,
}

impl CellSampler {
    fn new(f: &DensityGrid) -> Result<Self> {
        f.validate()?;
        let mut cumulative = Vec::with_capacity(f.cell_count());
        let mut acc = 0.0;
        for m in f.cell_masses() {
            acc += m;
            cumulative.push(acc);
        }
        Ok(CellSampler { cumulative, total: acc })
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> usize {
        let target = rng.random::<f64>() * self.total;
        let idx = self.cumulative.partition_point(|&c| c <= target);
        idx.min(self.cumulative.len() - 1)
    }
}

/// One point distributed as the normalized density `f/∫f`: cell chosen
/// with probability proportional to mass, then uniform within the cell.
pub(crate) fn draw_density_points(
    f: &DensityGrid,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Point>> {
    let sampler = CellSampler::new(f)?;
    if count == 0 {
        return Ok(Vec::new());
    }
    if sampler.total <= 0.0 {
        return Err(Error::invalid("density has zero total mass"));
    }
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let cell = sampler.pick(rng);
        let window = f.cell_window(cell)?;
        points.push(uniform_in_window(&window, rng));
    }
    Ok(points)
}

/// Exactly `n` i.i.d. points with density `f/∫f`.
pub fn sample_binomial(f: &DensityGrid, n: usize, stream: RngStream) -> Result<PointCloud> {
    let mut rng = stream.rng();
    let points = draw_density_points(f, n, &mut rng)?;
    PointCloud::new(f.dim(), points)
}

/// `N ~ Poisson(n)` followed by `N` i.i.d. points with density `f/∫f`;
/// equivalently a Poisson process with intensity `n · f/∫f`. A zero-mass
/// density is the zero intensity, so it yields the empty process.
pub fn sample_poissonized(f: &DensityGrid, n: f64, stream: RngStream) -> Result<PointCloud> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::invalid("Poissonization parameter must be nonnegative"));
    }
    f.validate()?;
    if f.total_mass() <= 0.0 {
        return Ok(PointCloud::empty(f.dim()));
    }
    let mut rng = stream.rng();
    let count = poisson_count(n, &mut rng)? as usize;
    let points = if count == 0 { Vec::new() } else { draw_density_points(f, count, &mut rng)? };
    PointCloud::new(f.dim(), points)
}

/// Homogeneous Poisson process with intensity `lambda` restricted to `window`.
pub fn sample_homogeneous(lambda: f64, window: &Window, stream: RngStream) -> Result<PointCloud> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("intensity must be nonnegative and finite"));
    }
    let mut rng = stream.rng();
    sample_homogeneous_with(lambda, window, &mut rng)
}

pub(crate) fn sample_homogeneous_with(
    lambda: f64,
    window: &Window,
    rng: &mut ChaCha8Rng,
) -> Result<PointCloud> {
    let count = poisson_count(lambda * window.volume(), rng)?;
    let points = (0..count).map(|_| uniform_in_window(window, rng)).collect();
    PointCloud::new(window.dim(), points)
}

/// Poisson process whose intensity function is the grid itself (per-cell
/// mean `value · cell_volume`). For the rescaled process with intensity
/// `n f`, pass `f.scaled(n)` and scale the result by `n^{1/d}`.
pub fn sample_inhomogeneous(intensity: &DensityGrid, stream: RngStream) -> Result<PointCloud> {
    let mut rng = stream.rng();
    sample_inhomogeneous_with(intensity, &mut rng)
}

pub(crate) fn sample_inhomogeneous_with(
    intensity: &DensityGrid,
    rng: &mut ChaCha8Rng,
) -> Result<PointCloud> {
    intensity.validate()?;
    let mut points = Vec::new();
    for (cell, mass) in intensity.cell_masses().into_iter().enumerate() {
        let count = poisson_count(mass, rng)?;
        if count == 0 {
            continue;
        }
        let window = intensity.cell_window(cell)?;
        for _ in 0..count {
            points.push(uniform_in_window(&window, rng));
        }
    }
    PointCloud::new(intensity.dim(), points)
}

/// Poisson processes `P(f)` and `P(g)` driven by one unit-rate process on
/// `support × [0, ∞)`: a generating point `(x, t)` enters the first cloud
/// iff `t < f(x)` and the second iff `t < g(x)`. Marginals are exact; the
/// clouds are identical precisely when no generating point lands in the
/// band between the two graphs, which happens with probability
/// `exp(−∫|f−g|)`.
pub fn sample_coupled_pair(
    f: &DensityGrid,
    g: &DensityGrid,
    stream: RngStream,
) -> Result<(PointCloud, PointCloud)> {
    f.validate()?;
    g.validate()?;
    if f.support != g.support || f.cells_per_axis != g.cells_per_axis {
        return Err(Error::invalid("coupled densities must share support box and grid"));
    }
    let mut rng = stream.rng();
    let cell_volume = f.cell_volume();
    let mut cloud_f = Vec::new();
    let mut cloud_g = Vec::new();
    for cell in 0..f.cell_count() {
        let fv = f.values[cell];
        let gv = g.values[cell];
        let top = fv.max(gv);
        if top == 0.0 {
            continue;
        }
        let count = poisson_count(top * cell_volume, &mut rng)?;
        if count == 0 {
            continue;
        }
        let window = f.cell_window(cell)?;
        for _ in 0..count {
            let p = uniform_in_window(&window, &mut rng);
            let t = rng.random::<f64>() * top;
            if t < fv {
                cloud_f.push(p.clone());
            }
            if t < gv {
                cloud_g.push(p);
            }
        }
    }
    Ok((PointCloud::new(f.dim(), cloud_f)?, PointCloud::new(g.dim(), cloud_g)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Window {
        Window::cube(1.0, 2).unwrap()
    }

    #[test]
    fn binomial_points_stay_in_support() {
        let f = DensityGrid::uniform(unit_square(), 1.0).unwrap();
        let cloud = sample_binomial(&f, 5, RngStream::new(11, 0)).unwrap();
        assert_eq!(cloud.len(), 5);
        assert!(cloud.points.iter().all(|p| unit_square().contains(p)));
    }

    #[test]
    fn binomial_respects_zero_mass_cells() {
        // Mass only in the left half: every x-coordinate lands below 0.5.
        let f = DensityGrid::new(unit_square(), vec![2, 1], vec![1.0, 0.0]).unwrap();
        let cloud = sample_binomial(&f, 100, RngStream::new(5, 3)).unwrap();
        assert!(cloud.points.iter().all(|p| p.coords[0] < 0.5));
    }

    #[test]
    fn binomial_cell_frequencies_match_masses() {
        // Two cells with masses 0.9/0.1; left count within 3 binomial sigma.
        let f = DensityGrid::new(unit_square(), vec![2, 1], vec![1.8, 0.2]).unwrap();
        let n = 10_000;
        let cloud = sample_binomial(&f, n, RngStream::new(42, 0)).unwrap();
        let left = cloud.points.iter().filter(|p| p.coords[0] < 0.5).count() as f64;
        let sigma = (n as f64 * 0.9 * 0.1).sqrt();
        assert!((left - 9000.0).abs() <= 3.0 * sigma, "left count {left}");
    }

    #[test]
    fn poissonized_zero_parameter_is_empty() {
        let f = DensityGrid::uniform(unit_square(), 1.0).unwrap();
        let cloud = sample_poissonized(&f, 0.0, RngStream::new(1, 0)).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn poissonized_mean_count() {
        let f = DensityGrid::uniform(unit_square(), 1.0).unwrap();
        let m = 2000;
        let total: f64 = (0..m)
            .map(|i| sample_poissonized(&f, 50.0, RngStream::new(7, i)).unwrap().len() as f64)
            .sum();
        let mean = total / m as f64;
        let band = 3.0 * (50.0 / m as f64).sqrt();
        assert!((mean - 50.0).abs() <= band, "mean {mean}");
    }

    #[test]
    fn homogeneous_zero_intensity_is_empty() {
        let w = Window::cube(5.0, 2).unwrap();
        assert!(sample_homogeneous(0.0, &w, RngStream::new(3, 0)).unwrap().is_empty());
    }

    #[test]
    fn homogeneous_mean_count() {
        let w = Window::new(vec![0.0, 0.0], vec![5.0, 5.0]).unwrap();
        let m = 2000;
        let total: f64 = (0..m)
            .map(|i| sample_homogeneous(2.0, &w, RngStream::new(9, i)).unwrap().len() as f64)
            .sum();
        let mean = total / m as f64;
        let band = 3.0 * (50.0 / m as f64).sqrt();
        assert!((mean - 50.0).abs() <= band, "mean {mean}");
    }

    #[test]
    fn coupled_pair_equal_densities_identical() {
        let f = DensityGrid::uniform(unit_square(), 1.3).unwrap();
        let (a, b) = sample_coupled_pair(&f, &f, RngStream::new(21, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coupled_pair_zero_density_side_is_empty() {
        let f = DensityGrid::uniform(unit_square(), 1.0).unwrap();
        let g = DensityGrid::uniform(unit_square(), 0.0).unwrap();
        let mut nonempty = 0;
        let m = 500;
        for i in 0..m {
            let (a, b) = sample_coupled_pair(&f, &g, RngStream::new(33, i)).unwrap();
            assert!(b.is_empty());
            if !a.is_empty() {
                nonempty += 1;
            }
        }
        // First margin nonempty with probability 1 − e^{−1} ≈ 0.632.
        let freq = nonempty as f64 / m as f64;
        let expect = 1.0 - (-1.0f64).exp();
        let band = 3.0 * (expect * (1.0 - expect) / m as f64).sqrt();
        assert!((freq - expect).abs() <= band, "freq {freq}");
    }

    #[test]
    fn inhomogeneous_region_counts() {
        // Levels 1 and 3 on halves: expected counts 0.5·n·level per half.
        let f = DensityGrid::new(unit_square(), vec![2, 1], vec![1.0, 3.0]).unwrap();
        let n = 200.0;
        let m = 500;
        let mut left = 0.0;
        let mut right = 0.0;
        for i in 0..m {
            let cloud = sample_inhomogeneous(&f.scaled(n).unwrap(), RngStream::new(14, i)).unwrap();
            for p in &cloud.points {
                if p.coords[0] < 0.5 {
                    left += 1.0;
                } else {
                    right += 1.0;
                }
            }
        }
        let mf = m as f64;
        let (expect_l, expect_r) = (n * 0.5, n * 1.5);
        assert!((left / mf - expect_l).abs() <= 3.0 * (expect_l / mf).sqrt());
        assert!((right / mf - expect_r).abs() <= 3.0 * (expect_r / mf).sqrt());
    }

    #[test]
    fn scale_cloud_identity_and_counts() {
        let f = DensityGrid::uniform(unit_square(), 2.0).unwrap();
        let cloud = sample_poissonized(&f, 30.0, RngStream::new(2, 2)).unwrap();
        let same = scale_cloud(&cloud, 1.0).unwrap();
        assert_eq!(cloud, same);
        let scaled = scale_cloud(&cloud, 4.0).unwrap();
        assert_eq!(scaled.len(), cloud.len());
    }

    #[test]
    fn streams_replay_and_differ() {
        let f = DensityGrid::uniform(unit_square(), 1.0).unwrap();
        let a = sample_binomial(&f, 20, RngStream::new(100, 7)).unwrap();
        let b = sample_binomial(&f, 20, RngStream::new(100, 7)).unwrap();
        let c = sample_binomial(&f, 20, RngStream::new(100, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_mass_density_is_rejected() {
        let f = DensityGrid::uniform(unit_square(), 0.0).unwrap();
        assert!(sample_binomial(&f, 3, RngStream::new(0, 0)).is_err());
    }
}
