//! Čech complex construction up to a dimension cap.
//!
//! Edges come from a hash grid with cell side equal to the connection
//! distance `2r`; higher simplices are grown facet-first: a candidate
//! `k`-simplex is formed by extending a `(k-1)`-simplex past its largest
//! vertex, pruned unless every facet is already present, and admitted only
//! if its minimum enclosing ball fits inside radius `r`. Each simplex is
//! generated exactly once (from its largest-vertex-removed facet), so the
//! per-dimension lists come out lexicographically sorted without dedup.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{simplex_in_cech, Point, GEOM_TOL};
use crate::point_process::PointCloud;
use crate::spatial::HashGrid;

/// Abstract simplicial complex: per dimension `k`, the sorted list of
/// strictly increasing `(k+1)`-tuples of vertex indices. `simplices[0]`
/// always lists every vertex `0..vertex_count` as a singleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplicialComplex {
    pub vertex_count: usize,
    pub dimension_cap: usize,
    pub simplices: Vec<Vec<Vec<u32>>>,
}

impl SimplicialComplex {
    /// Build from explicit per-dimension lists (missing trailing dimensions
    /// are treated as empty). Validates tuple shape, ordering, and that
    /// dimension 0 enumerates exactly the vertices.
    pub fn from_simplices(
        vertex_count: usize,
        dimension_cap: usize,
        mut simplices: Vec<Vec<Vec<u32>>>,
    ) -> Result<Self> {
        if simplices.len() > dimension_cap + 1 {
            return Err(Error::invalid("more simplex dimensions than the declared cap"));
        }
        simplices.resize(dimension_cap + 1, Vec::new());
        let expected: Vec<Vec<u32>> = (0..vertex_count as u32).map(|v| vec![v]).collect();
        if simplices[0] != expected {
            return Err(Error::invalid("dimension 0 must list every vertex exactly once"));
        }
        for (k, list) in simplices.iter().enumerate() {
            let mut prev: Option<&Vec<u32>> = None;
            for tuple in list {
                if tuple.len() != k + 1 {
                    return Err(Error::invalid(format!("dimension {k} holds a {}-tuple", tuple.len())));
                }
                if tuple.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid("simplex tuples must be strictly increasing"));
                }
                if tuple.iter().any(|&v| v as usize >= vertex_count) {
                    return Err(Error::invalid("vertex index out of range"));
                }
                if let Some(p) = prev {
                    if p >= tuple {
                        return Err(Error::invalid("simplex lists must be sorted without duplicates"));
                    }
                }
                prev = Some(tuple);
            }
        }
        Ok(SimplicialComplex { vertex_count, dimension_cap, simplices })
    }

    pub fn empty(dimension_cap: usize) -> Self {
        SimplicialComplex {
            vertex_count: 0,
            dimension_cap,
            simplices: vec![Vec::new(); dimension_cap + 1],
        }
    }

    pub fn simplex_count(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, |l| l.len())
    }

    /// True when every facet of every stored simplex is stored.
    pub fn is_downward_closed(&self) -> bool {
        for k in 1..=self.dimension_cap {
            let below: HashSet<&[u32]> =
                self.simplices[k - 1].iter().map(|t| t.as_slice()).collect();
            for tuple in &self.simplices[k] {
                let mut facet = Vec::with_capacity(k);
                for skip in 0..tuple.len() {
                    facet.clear();
                    facet.extend(tuple.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v));
                    if !below.contains(facet.as_slice()) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Alternating sum of simplex counts.
    pub fn euler_characteristic(&self) -> i64 {
        self.simplices
            .iter()
            .enumerate()
            .map(|(k, list)| {
                let c = list.len() as i64;
                if k % 2 == 0 { c } else { -c }
            })
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Alternating sum of simplex counts, `Σ_k (−1)^k s_k`. Use with a full
/// complex (cap at least `vertex_count − 1`) when cross-checking against
/// Betti numbers.
pub fn euler_characteristic(complex: &SimplicialComplex) -> i64 {
    complex.euler_characteristic()
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Čech complex of the cloud at radius `r`, with simplices up to dimension
/// `k_max`. An empty cloud yields the valid empty complex.
pub fn build_cech(cloud: &PointCloud, r: f64, k_max: usize) -> Result<SimplicialComplex> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("radius must be positive and finite"));
    }
    if k_max < 1 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let n = cloud.len();
    let dim = cloud.dimension;
    let mut simplices: Vec<Vec<Vec<u32>>> = vec![Vec::new(); k_max + 1];
    simplices[0] = (0..n as u32).map(|v| vec![v]).collect();
    if n >= 2 {
        let grid = HashGrid::build(&cloud.points, dim, 2.0 * r);
        let pairs = grid.pairs(GEOM_TOL);
        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
        for p in &pairs {
            adjacency[p.i as usize].push(p.j);
            adjacency[p.j as usize].push(p.i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        simplices[1] = pairs.iter().map(|p| vec![p.i, p.j]).collect();

        let mut scratch: Vec<Point> = Vec::new();
        for k in 2..=k_max {
            let (head, tail) = simplices.split_at_mut(k);
            let parents = &head[k - 1];
            let below: HashSet<&[u32]> = parents.iter().map(|t| t.as_slice()).collect();
            let out = &mut tail[0];
            for parent in parents {
                // Common neighbors of all parent vertices, above the
                // largest vertex so each simplex is generated once.
                let last = *parent.last().unwrap();
                let mut candidates = adjacency[parent[0] as usize].clone();
                for &v in &parent[1..] {
                    candidates = intersect_sorted(&candidates, &adjacency[v as usize]);
                    if candidates.is_empty() {
                        break;
                    }
                }
                for &c in candidates.iter().filter(|&&c| c > last) {
                    let mut tuple = parent.clone();
                    tuple.push(c);
                    // Facet pruning: dropping the last vertex gives the
                    // parent itself; every other facet must be present.
                    let mut facet = Vec::with_capacity(k);
                    let mut all_present = true;
                    for skip in 0..k {
                        facet.clear();
                        facet.extend(
                            tuple.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v),
                        );
                        if !below.contains(facet.as_slice()) {
                            all_present = false;
                            break;
                        }
                    }
                    if !all_present {
                        continue;
                    }
                    scratch.clear();
                    scratch.extend(tuple.iter().map(|&v| cloud.points[v as usize].clone()));
                    if simplex_in_cech(&scratch, r)? {
                        out.push(tuple);
                    }
                }
            }
        }
    }
    Ok(SimplicialComplex { vertex_count: n, dimension_cap: k_max, simplices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn cloud(points: Vec<Vec<f64>>) -> PointCloud {
        let dim = points[0].len();
        PointCloud::new(dim, points.into_iter().map(Point::new).collect()).unwrap()
    }

    fn square_corners() -> PointCloud {
        cloud(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]])
    }

    #[test]
    fn unit_square_corners_make_a_cycle() {
        // Sides have length 1 <= 1.2 but the diagonal (1.414) does not, and
        // corner triples need radius 0.7071, so no triangles at r = 0.6.
        let complex = build_cech(&square_corners(), 0.6, 2).unwrap();
        assert_eq!(complex.simplex_count(0), 4);
        assert_eq!(complex.simplex_count(1), 4);
        assert_eq!(complex.simplex_count(2), 0);
        assert_eq!(
            complex.simplices[1],
            vec![vec![0, 1], vec![0, 3], vec![1, 2], vec![2, 3]]
        );
    }

    #[test]
    fn single_point_complex() {
        let complex = build_cech(&cloud(vec![vec![2.0, 2.0]]), 1.0, 2).unwrap();
        assert_eq!(complex.simplex_count(0), 1);
        assert_eq!(complex.simplex_count(1), 0);
    }

    #[test]
    fn tight_triple_fills_in() {
        let complex = build_cech(
            &cloud(vec![vec![0.0, 0.0], vec![0.05, 0.0], vec![0.0, 0.08]]),
            1.0,
            2,
        )
        .unwrap();
        assert_eq!(complex.simplex_count(1), 3);
        assert_eq!(complex.simplices[2], vec![vec![0, 1, 2]]);
    }

    #[test]
    fn empty_cloud_builds_empty_complex() {
        let complex = build_cech(&PointCloud::empty(2), 0.5, 2).unwrap();
        assert_eq!(complex.vertex_count, 0);
        assert_eq!(complex.euler_characteristic(), 0);
    }

    #[test]
    fn euler_characteristic_cases() {
        // 4-cycle has the Euler characteristic of a circle.
        assert_eq!(build_cech(&square_corners(), 0.6, 2).unwrap().euler_characteristic(), 0);
        // Full simplex on 3 vertices is contractible.
        let tri = build_cech(
            &cloud(vec![vec![0.0, 0.0], vec![0.05, 0.0], vec![0.0, 0.08]]),
            1.0,
            2,
        )
        .unwrap();
        assert_eq!(tri.euler_characteristic(), 1);
        // Two far-apart vertices.
        let two = build_cech(&cloud(vec![vec![0.0, 0.0], vec![9.0, 0.0]]), 0.5, 2).unwrap();
        assert_eq!(two.euler_characteristic(), 2);
    }

    #[test]
    fn built_complexes_are_downward_closed() {
        let complex = build_cech(&square_corners(), 0.75, 3).unwrap();
        assert!(complex.is_downward_closed());
    }

    #[test]
    fn monotone_in_radius() {
        let pts = cloud(vec![
            vec![0.0, 0.0],
            vec![0.9, 0.1],
            vec![0.4, 0.8],
            vec![1.3, 0.9],
            vec![0.2, 1.6],
        ]);
        let small = build_cech(&pts, 0.45, 3).unwrap();
        let large = build_cech(&pts, 0.65, 3).unwrap();
        for k in 0..=3 {
            for s in &small.simplices[k] {
                assert!(large.simplices[k].binary_search(s).is_ok(), "lost simplex {s:?}");
            }
        }
    }

    #[test]
    fn from_simplices_validates() {
        assert!(SimplicialComplex::from_simplices(
            2,
            1,
            vec![vec![vec![0], vec![1]], vec![vec![1, 0]]],
        )
        .is_err());
        let ok = SimplicialComplex::from_simplices(
            2,
            1,
            vec![vec![vec![0], vec![1]], vec![vec![0, 1]]],
        )
        .unwrap();
        assert_eq!(ok.simplex_count(1), 1);
    }
}
