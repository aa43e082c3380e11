//! Critical radius estimation for the occupied component of the ball
//! model on unit-intensity Poisson points, using toroidal boxes to
//! suppress boundary effects.
//!
//! A sample spans the torus when some component wraps around a coordinate
//! direction. Detection uses union-find with per-node integer displacement
//! vectors: an edge whose implied displacement disagrees with the stored
//! relative displacement of its endpoints closes a cycle through the
//! periodic wrap. Processing periodic edges in increasing length order
//! (Kruskal style) yields each sample's exact critical connection
//! distance, so the spanning curve over the whole radius grid is evaluated
//! from one pass per sample and is monotone in `r` by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Window, GEOM_TOL};
use crate::point_process::{sample_homogeneous_with, RngStream};
use crate::spatial::HashGrid;

/// Evaluation grid for the spanning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub steps: usize,
}

impl RadiusGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0) || !(self.r_max > self.r_min) || self.steps < 2 {
            return Err(Error::invalid("radius grid needs 0 < r_min < r_max and >= 2 steps"));
        }
        Ok(())
    }

    /// Default bracket around the d = 2 threshold; d = 3 sits lower
    /// because balls meet more neighbors per volume.
    pub fn default_for_dim(dim: usize) -> RadiusGrid {
        match dim {
            3 => RadiusGrid { r_min: 0.2, r_max: 0.6, steps: 17 },
            _ => RadiusGrid { r_min: 0.4, r_max: 0.8, steps: 17 },
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|i| {
                self.r_min + (self.r_max - self.r_min) * i as f64 / (self.steps - 1) as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanningCurvePoint {
    pub r: f64,
    pub spanning_fraction: f64,
    pub std_error: f64,
}

/// Estimate from one torus size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeEstimate {
    pub torus_side: f64,
    pub r_hat: f64,
    /// Radii where the curve crosses 0.5 ∓ 2·SE(0.5): a crude confidence
    /// band for the crossing point.
    pub band: (f64, f64),
    pub curve: Vec<SpanningCurvePoint>,
    /// Samples that never spanned below 2·r_max.
    pub censored: usize,
    /// Set when the 0.5 crossing fell outside the grid and `r_hat` was
    /// clamped to a grid endpoint.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationEstimate {
    pub dimension: usize,
    pub per_size: Vec<SizeEstimate>,
    /// Max over consecutive size pairs of |r̂_a − r̂_b| / r̂_b (b the
    /// larger size).
    pub max_relative_drift: f64,
}

/// Union-find whose nodes carry integer displacement vectors to their
/// parent (in units of the torus period). A redundant edge whose
/// displacement differs from the recorded one wraps around the torus.
struct WindingForest {
    parent: Vec<u32>,
    rank: Vec<u8>,
    offset: Vec<[i32; 3]>,
}

fn add3(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub3(a: [i32; 3], b: [i32; 3]) -> [i32; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

impl WindingForest {
    fn new(n: usize) -> Self {
        WindingForest {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            offset: vec![[0; 3]; n],
        }
    }

    /// Root of `x` and the accumulated displacement from `x` to the root;
    /// compresses the path.
    fn find(&mut self, x: u32) -> (u32, [i32; 3]) {
        let p = self.parent[x as usize];
        if p == x {
            return (x, [0; 3]);
        }
        let (root, parent_off) = self.find(p);
        let total = add3(self.offset[x as usize], parent_off);
        self.parent[x as usize] = root;
        self.offset[x as usize] = total;
        (root, total)
    }

    /// Apply edge `a ↔ b` whose geometric displacement crosses `shift`
    /// torus periods. Returns true when the edge closes a wrapping cycle.
    fn union_detect_winding(&mut self, a: u32, b: u32, shift: [i32; 3]) -> bool {
        let (ra, off_a) = self.find(a);
        let (rb, off_b) = self.find(b);
        // Consistency requires off(a) − off(b) = shift within one tree.
        let needed = sub3(add3(off_b, shift), off_a);
        if ra == rb {
            return needed != [0; 3];
        }
        // Attach rb under ra with offset chosen to satisfy the constraint:
        // off'(b) = off(b) + offset[rb] must equal off(a) − shift.
        let (hi, lo, lo_off) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb, sub3([0; 3], needed))
        } else {
            (rb, ra, needed)
        };
        self.parent[lo as usize] = hi;
        self.offset[lo as usize] = lo_off;
        if self.rank[ra as usize] == self.rank[rb as usize] {
            self.rank[hi as usize] += 1;
        }
        false
    }
}

/// Smallest connection distance at which the periodic graph wraps the
/// torus, or `None` if it never does within `cutoff`.
fn critical_span_distance(
    points: &[crate::geometry::Point],
    dim: usize,
    cutoff: f64,
    period: f64,
) -> Option<f64> {
    if points.is_empty() {
        return None;
    }
    let grid = HashGrid::build_periodic(points, dim, cutoff, period);
    let mut pairs = grid.pairs(GEOM_TOL);
    pairs.sort_by(|a, b| a.dist_sq.total_cmp(&b.dist_sq).then((a.i, a.j).cmp(&(b.i, b.j))));
    let mut forest = WindingForest::new(points.len());
    for pair in pairs {
        if forest.union_detect_winding(pair.i, pair.j, pair.shift) {
            return Some(pair.dist_sq.sqrt());
        }
    }
    None
}

fn interpolate_crossing(curve: &[SpanningCurvePoint], target: f64) -> (f64, bool) {
    if curve[0].spanning_fraction >= target {
        return (curve[0].r, true);
    }
    for w in curve.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        if hi.spanning_fraction >= target {
            let span = hi.spanning_fraction - lo.spanning_fraction;
            let t = if span > 0.0 { (target - lo.spanning_fraction) / span } else { 1.0 };
            return (lo.r + t * (hi.r - lo.r), false);
        }
    }
    (curve.last().unwrap().r, true)
}

/// Spanning curve and 0.5-crossing estimate of the critical radius for
/// unit-intensity Poisson points on tori of the given sizes. Requires
/// `2·r_max < side/2` per size so periodic distances are unambiguous.
pub fn estimate_percolation_radius(
    dim: usize,
    sizes: &[f64],
    replications: u64,
    grid: &RadiusGrid,
    master_seed: u64,
) -> Result<PercolationEstimate> {
    if !(2..=3).contains(&dim) {
        return Err(Error::invalid("percolation estimation supports d in {2, 3}"));
    }
    if sizes.is_empty() || replications < 2 {
        return Err(Error::invalid("need at least one size and two replications"));
    }
    grid.validate()?;
    let cutoff = 2.0 * grid.r_max;
    for &s in sizes {
        if !(cutoff < s / 2.0) {
            return Err(Error::invalid(format!(
                "torus side {s} too small for r_max {} (need 4·r_max < side)",
                grid.r_max
            )));
        }
    }
    let r_values = grid.values();
    let m = replications as f64;
    let mut per_size = Vec::with_capacity(sizes.len());
    for (size_idx, &side) in sizes.iter().enumerate() {
        let window = Window::cube(side, dim)?;
        // Per-sample critical distances; censored samples sit at infinity.
        let mut criticals = Vec::with_capacity(replications as usize);
        let mut censored = 0usize;
        for rep in 0..replications {
            let stream = RngStream::new(master_seed, (size_idx as u64) << 32 | rep);
            let mut rng = stream.rng();
            let cloud = sample_homogeneous_with(1.0, &window, &mut rng)?;
            match critical_span_distance(&cloud.points, dim, cutoff, side) {
                Some(d) => criticals.push(d),
                None => {
                    criticals.push(f64::INFINITY);
                    censored += 1;
                }
            }
        }
        criticals.sort_by(f64::total_cmp);
        let curve: Vec<SpanningCurvePoint> = r_values
            .iter()
            .map(|&r| {
                let limit = 2.0 * r + GEOM_TOL;
                let count = criticals.partition_point(|&d| d <= limit);
                let p = count as f64 / m;
                SpanningCurvePoint {
                    r,
                    spanning_fraction: p,
                    std_error: (p * (1.0 - p) / m).sqrt(),
                }
            })
            .collect();
        let (r_hat, clamped) = interpolate_crossing(&curve, 0.5);
        let half_se = 0.5 / m.sqrt();
        let (band_lo, _) = interpolate_crossing(&curve, (0.5 - 2.0 * half_se).max(0.0));
        let (band_hi, _) = interpolate_crossing(&curve, (0.5 + 2.0 * half_se).min(1.0));
        per_size.push(SizeEstimate {
            torus_side: side,
            r_hat,
            band: (band_lo, band_hi),
            curve,
            censored,
            clamped,
        });
    }
    let mut max_drift = 0.0f64;
    for w in per_size.windows(2) {
        let drift = (w[0].r_hat - w[1].r_hat).abs() / w[1].r_hat;
        max_drift = max_drift.max(drift);
    }
    Ok(PercolationEstimate { dimension: dim, per_size, max_relative_drift: max_drift })
}
