//! Uniform hash grid for near-neighbor queries.
//!
//! Cells have side equal to the query cutoff, so every pair within the
//! cutoff lies in the same or an adjacent cell and candidate enumeration
//! scans a 3^d block. Supports an optional periodic (torus) mode in which
//! distances are taken to the nearest image and each reported pair carries
//! the integer image shift of its second endpoint.

use std::collections::HashMap;

use crate::geometry::{dist_sq_unchecked, Point};

/// Neighbor pair `(i, j)` with `i < j`, squared distance, and for periodic
/// grids the per-axis image shift applied to point `j` (zeros otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPair {
    pub i: u32,
    pub j: u32,
    pub dist_sq: f64,
    pub shift: [i32; 3],
}

pub struct HashGrid<'a> {
    points: &'a [Point],
    dim: usize,
    cutoff: f64,
    cell_side: f64,
    /// Torus side length when periodic.
    period: Option<f64>,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

fn cell_key(coords: &[f64], cell_side: f64) -> [i64; 3] {
    let mut key = [0i64; 3];
    for (a, &c) in coords.iter().enumerate() {
        key[a] = (c / cell_side).floor() as i64;
    }
    key
}

impl<'a> HashGrid<'a> {
    /// Grid over points in free space; pairs are reported at Euclidean
    /// distance at most `cutoff` (closed, tolerance handled by callers).
    pub fn build(points: &'a [Point], dim: usize, cutoff: f64) -> Self {
        assert!(dim >= 1 && dim <= 3, "spatial grid supports dimensions 1..=3");
        assert!(cutoff > 0.0);
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (idx, p) in points.iter().enumerate() {
            cells.entry(cell_key(&p.coords, cutoff)).or_default().push(idx as u32);
        }
        HashGrid { points, dim, cutoff, cell_side: cutoff, period: None, cells }
    }

    /// Grid over points in the torus `[0, period)^d`. Requires
    /// `cutoff < period / 2` so the nearest image is unique; points are
    /// binned by their canonical representative.
    pub fn build_periodic(points: &'a [Point], dim: usize, cutoff: f64, period: f64) -> Self {
        assert!(dim >= 1 && dim <= 3);
        assert!(cutoff > 0.0 && cutoff < period / 2.0, "cutoff must stay below half the period");
        // Cell side chosen so an integer number of cells tiles the period;
        // neighbor offsets then wrap consistently.
        let cells_per_axis = (period / cutoff).floor().max(1.0);
        let cell_side = period / cells_per_axis;
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (idx, p) in points.iter().enumerate() {
            cells.entry(cell_key(&p.coords, cell_side)).or_default().push(idx as u32);
        }
        HashGrid { points, dim, cutoff, cell_side, period: Some(period), cells }
    }

    fn cells_per_axis(&self) -> i64 {
        match self.period {
            Some(p) => (p / self.cell_side).round() as i64,
            None => 0,
        }
    }

    /// All pairs within the cutoff (plus `tol`), each reported once with
    /// `i < j`, in deterministic order (sorted by `(i, j)`).
    pub fn pairs(&self, tol: f64) -> Vec<NeighborPair> {
        let cutoff_sq = {
            let c = self.cutoff + tol;
            c * c
        };
        let mut out = Vec::new();
        let nca = self.cells_per_axis();
        for (&key, members) in &self.cells {
            // Scan the 3^d neighborhood; visit each unordered cell pair once
            // by requiring a lexicographically nondecreasing raw offset key.
            let mut offsets = vec![[0i64; 3]];
            for a in 0..self.dim {
                let mut next = Vec::with_capacity(offsets.len() * 3);
                for base in &offsets {
                    for delta in -1i64..=1 {
                        let mut k = *base;
                        k[a] = delta;
                        next.push(k);
                    }
                }
                offsets = next;
            }
            for off in offsets {
                let raw: [i64; 3] = [key[0] + off[0], key[1] + off[1], key[2] + off[2]];
                if raw < key {
                    continue;
                }
                let (lookup, wrap) = match self.period {
                    None => (raw, [0i32; 3]),
                    Some(_) => {
                        let mut l = [0i64; 3];
                        let mut w = [0i32; 3];
                        for a in 0..self.dim {
                            let m = raw[a].rem_euclid(nca);
                            w[a] = ((raw[a] - m) / nca) as i32;
                            l[a] = m;
                        }
                        (l, w)
                    }
                };
                let Some(others) = self.cells.get(&lookup) else { continue };
                let same_cell = raw == key;
                for &i in members {
                    for &j in others {
                        if same_cell && j <= i {
                            continue;
                        }
                        let (d_sq, shift) = self.pair_dist_sq(i, j, wrap);
                        if d_sq <= cutoff_sq {
                            let (a, b, shift) = if i < j {
                                (i, j, shift)
                            } else {
                                (j, i, [-shift[0], -shift[1], -shift[2]])
                            };
                            out.push(NeighborPair { i: a, j: b, dist_sq: d_sq, shift });
                        }
                    }
                }
            }
        }
        out.sort_by(|p, q| (p.i, p.j, p.shift).cmp(&(q.i, q.j, q.shift)));
        out.dedup_by(|p, q| p.i == q.i && p.j == q.j && p.shift == q.shift);
        out
    }

    /// Distance from point `i` to the image of point `j` shifted by `wrap`
    /// periods (free space: the points themselves).
    fn pair_dist_sq(&self, i: u32, j: u32, wrap: [i32; 3]) -> (f64, [i32; 3]) {
        let a = &self.points[i as usize].coords;
        let b = &self.points[j as usize].coords;
        match self.period {
            None => (dist_sq_unchecked(a, b), [0; 3]),
            Some(period) => {
                let mut acc = 0.0;
                for axis in 0..self.dim {
                    let d = b[axis] + wrap[axis] as f64 * period - a[axis];
                    acc += d * d;
                }
                (acc, wrap)
            }
        }
    }

    /// Adjacency lists over the pair set (free-space grids); each list is
    /// sorted ascending.
    pub fn adjacency(&self, tol: f64) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.points.len()];
        for pair in self.pairs(tol) {
            adj[pair.i as usize].push(pair.j);
            adj[pair.j as usize].push(pair.i);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}
