//! Independent oracles for the integration suites: a candidate-enumeration
//! minimum enclosing ball, a subset-enumeration ball-complex builder, and
//! a dense mod-2 elimination Betti computation. All three avoid the
//! production algorithms (move-to-front recursion, facet-driven cliques,
//! sparse pivot-registry reduction) so agreement is evidence, not an echo.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use geomclt::cech::SimplicialComplex;
use geomclt::geometry::Point;
use geomclt::point_process::{PointCloud, RngStream};

/// Coverage slack for oracle candidate balls; far below any decision
/// tolerance used in the comparisons.
const COVER_SLACK: f64 = 1e-9;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Dense Gaussian elimination with partial pivoting; `None` when the
/// system is singular to working precision.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Circumcenter of the affinely independent support set, or `None` when
/// the set is degenerate: solve `2 (V^T V) x = (|v_i|^2)` for the affine
/// coordinates of the center relative to the first point.
fn circumcenter(support: &[&[f64]]) -> Option<Vec<f64>> {
    let p0 = support[0];
    let vs: Vec<Vec<f64>> = support[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let k = vs.len();
    if k == 0 {
        return Some(p0.to_vec());
    }
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| 2.0 * dot(&vs[i], &vs[j])).collect())
        .collect();
    let rhs: Vec<f64> = (0..k).map(|i| dot(&vs[i], &vs[i])).collect();
    let x = solve_dense(gram, rhs)?;
    let mut center = p0.to_vec();
    for (xi, v) in x.iter().zip(&vs) {
        for (c, vc) in center.iter_mut().zip(v) {
            *c += xi * vc;
        }
    }
    Some(center)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimum enclosing ball radius by exhausting candidate support subsets
/// of size at most d + 1.
pub fn oracle_min_ball_radius(points: &[Point]) -> f64 {
    assert!(!points.is_empty());
    let coords: Vec<&[f64]> = points.iter().map(|p| p.coords.as_slice()).collect();
    let d = coords[0].len();
    let n = coords.len();
    let mut best = f64::INFINITY;
    let max_support = (d + 1).min(n);
    let mut subset = Vec::new();
    enumerate_subsets(n, max_support, &mut subset, &mut |idxs: &[usize]| {
        let support: Vec<&[f64]> = idxs.iter().map(|&i| coords[i]).collect();
        let Some(center) = circumcenter(&support) else {
            return;
        };
        let radius = dist(&center, support[0]);
        if radius >= best {
            return;
        }
        if coords.iter().all(|p| dist(&center, p) <= radius + COVER_SLACK) {
            best = radius;
        }
    });
    assert!(best.is_finite(), "no covering candidate ball found");
    best
}

fn enumerate_subsets(
    n: usize,
    max_size: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if !current.is_empty() {
        visit(current);
    }
    if current.len() == max_size {
        return;
    }
    let start = current.last().map_or(0, |&l| l + 1);
    for i in start..n {
        current.push(i);
        enumerate_subsets(n, max_size, current, visit);
        current.pop();
    }
}

/// Ball complex by brute force: every nonempty subset whose oracle
/// miniball radius is at most `r` plus the production decision tolerance.
/// Only clouds small enough for full subset enumeration.
pub fn oracle_cech(cloud: &PointCloud, r: f64, k_max: usize) -> Vec<Vec<Vec<u32>>> {
    let n = cloud.len();
    assert!(n <= 16, "oracle enumerates all subsets");
    let mut dims: Vec<Vec<Vec<u32>>> = vec![Vec::new(); k_max + 1];
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size > k_max + 1 {
            continue;
        }
        let idxs: Vec<u32> = (0..n as u32).filter(|i| mask >> i & 1 == 1).collect();
        let pts: Vec<Point> =
            idxs.iter().map(|&i| cloud.points[i as usize].clone()).collect();
        if oracle_min_ball_radius(&pts) <= r + 1e-12 {
            dims[size - 1].push(idxs);
        }
    }
    for simplices in &mut dims {
        simplices.sort();
    }
    dims
}

/// Rank of a 0/1 matrix over GF(2) by dense forward elimination.
pub fn dense_rank_mod2(rows: usize, cols: usize, entries: &[(usize, usize)]) -> usize {
    let mut matrix = vec![vec![false; cols]; rows];
    for &(r, c) in entries {
        matrix[r][c] = true;
    }
    let mut rank = 0;
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(found) = (pivot_row..rows).find(|&r| matrix[r][col]) else {
            continue;
        };
        matrix.swap(pivot_row, found);
        for r in 0..rows {
            if r != pivot_row && matrix[r][col] {
                let (head, tail) = matrix.split_at_mut(r.max(pivot_row));
                let (a, b) = if r < pivot_row {
                    (&mut head[r], &tail[0])
                } else {
                    (&mut tail[0], &head[pivot_row])
                };
                for k in 0..cols {
                    a[k] ^= b[k];
                }
            }
        }
        rank += 1;
        pivot_row += 1;
        if pivot_row == rows {
            break;
        }
    }
    rank
}

/// Betti numbers via dense elimination: simplex indices from hash maps,
/// boundary entries by dropping one vertex at a time.
pub fn oracle_betti(complex: &SimplicialComplex, k_cap: usize) -> Vec<usize> {
    let cap = complex.dimension_cap;
    assert!(k_cap <= cap);
    let index: Vec<HashMap<&[u32], usize>> = (0..=cap)
        .map(|k| {
            complex.simplices[k]
                .iter()
                .enumerate()
                .map(|(i, s)| (s.as_slice(), i))
                .collect()
        })
        .collect();
    // ranks[k] = rank of the boundary map from dimension k to k - 1.
    let mut ranks = vec![0usize; cap + 2];
    for k in 1..=cap {
        let mut entries = Vec::new();
        for (col, simplex) in complex.simplices[k].iter().enumerate() {
            for drop in 0..simplex.len() {
                let mut face: Vec<u32> = simplex.clone();
                face.remove(drop);
                let row = *index[k - 1]
                    .get(face.as_slice())
                    .expect("complex is downward closed");
                entries.push((row, col));
            }
        }
        ranks[k] = dense_rank_mod2(
            complex.simplices[k - 1].len(),
            complex.simplices[k].len(),
            &entries,
        );
    }
    (0..=k_cap)
        .map(|k| complex.simplices[k].len() - ranks[k] - ranks[k + 1])
        .collect()
}

/// Deterministic uniform cloud in `[0, side)^d`.
pub fn random_cloud(n: usize, dim: usize, side: f64, seed: u64) -> PointCloud {
    let mut rng: ChaCha8Rng = RngStream::new(seed, 0).rng();
    let points = (0..n)
        .map(|_| Point::new((0..dim).map(|_| rng.random::<f64>() * side).collect()))
        .collect();
    PointCloud::new(dim, points).unwrap()
}

pub fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + rng.random::<f64>() * (hi - lo)
}

/// The shared small-cloud corpus of the oracle criteria: 200 clouds of at
/// most 10 points in dimension 2 or 3 with a random radius each.
pub fn oracle_corpus() -> Vec<(PointCloud, f64)> {
    (0..200u64)
        .map(|seed| {
            let mut rng: ChaCha8Rng = RngStream::new(0xC0FFEE + seed, 1).rng();
            let dim = 2 + (seed % 2) as usize;
            let n = 1 + (seed % 10) as usize;
            let points = (0..n)
                .map(|_| Point::new((0..dim).map(|_| rng.random::<f64>() * 2.0).collect()))
                .collect();
            let r = uniform_in(&mut rng, 0.1, 1.2);
            (PointCloud::new(dim, points).unwrap(), r)
        })
        .collect()
}
