//! Betti numbers over the two-element field.
//!
//! `β_k = s_k − rank ∂_k − rank ∂_{k+1}` with ranks from left-to-right
//! column reduction using low-entry pivoting; columns are sorted index
//! lists merged by symmetric difference. The coefficient field is fixed to
//! GF(2); in the presence of torsion a different field could give different
//! `β_k`, and nothing here claims field independence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cech::SimplicialComplex;
use crate::error::{Error, Result};
use crate::union_find::UnionFind;

/// Betti numbers `β_0 ..= β_{k_cap}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiVector {
    pub values: Vec<usize>,
}

/// Sparse boundary matrix `∂_k`: one column per `k`-simplex holding the
/// sorted row indices of its `(k−1)`-dimensional facets. Over GF(2) the
/// alternating signs of the boundary operator vanish, and `∂_{k-1}∘∂_k = 0`
/// because each codimension-2 face appears in exactly two facets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix {
    pub rows: usize,
    pub columns: Vec<Vec<u32>>,
}

/// Boundary matrix of the complex in dimension `k ≥ 1`. Rows index the
/// `(k−1)`-simplex list, columns the `k`-simplex list, both in stored
/// (lexicographic) order.
pub fn boundary_matrix(complex: &SimplicialComplex, k: usize) -> Result<BoundaryMatrix> {
    if k == 0 || k > complex.dimension_cap {
        return Err(Error::invalid("boundary matrix defined for 1 <= k <= dimension_cap"));
    }
    let rows_list = &complex.simplices[k - 1];
    let cols_list = &complex.simplices[k];
    let mut columns = Vec::with_capacity(cols_list.len());
    let mut facet = Vec::with_capacity(k);
    for tuple in cols_list {
        let mut col = Vec::with_capacity(k + 1);
        for skip in 0..tuple.len() {
            facet.clear();
            facet.extend(tuple.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &v)| v));
            let row = rows_list
                .binary_search_by(|probe| probe.as_slice().cmp(facet.as_slice()))
                .map_err(|_| Error::invalid("complex is not downward closed"))?;
            col.push(row as u32);
        }
        col.sort_unstable();
        columns.push(col);
    }
    Ok(BoundaryMatrix { rows: rows_list.len(), columns })
}

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl BoundaryMatrix {
    /// Rank over GF(2). Each column is reduced against the registered
    /// pivot column sharing its lowest entry until it either empties out
    /// or claims a fresh pivot row.
    pub fn rank(&self) -> usize {
        let mut pivot_by_low: HashMap<u32, Vec<u32>> = HashMap::new();
        let mut rank = 0;
        for column in &self.columns {
            let mut col = column.clone();
            loop {
                let Some(&low) = col.last() else { break };
                match pivot_by_low.get(&low) {
                    Some(other) => col = symmetric_difference(&col, other),
                    None => {
                        pivot_by_low.insert(low, col);
                        rank += 1;
                        break;
                    }
                }
            }
        }
        rank
    }
}

/// Betti numbers `β_0 ..= β_{k_cap}` of the complex.
///
/// `rank ∂_0 = 0` by convention, and `∂_{k+1}` is taken as zero when `k`
/// equals the dimension cap. That is correct for a complex that genuinely
/// has no higher simplices, an undercount of `rank ∂_{k+1}` for one
/// truncated at the cap, which is why Čech callers build with
/// `k_max = k + 1`.
pub fn betti_numbers(complex: &SimplicialComplex, k_cap: usize) -> Result<BettiVector> {
    if complex.vertex_count == 0 {
        return Ok(BettiVector { values: vec![0; k_cap + 1] });
    }
    if k_cap > complex.dimension_cap {
        return Err(Error::invalid(format!(
            "k_cap {} exceeds complex dimension cap {}",
            k_cap, complex.dimension_cap
        )));
    }
    // ranks[k] = rank ∂_k for k = 0 ..= k_cap + 1.
    let mut ranks = vec![0usize; k_cap + 2];
    for k in 1..=(k_cap + 1).min(complex.dimension_cap) {
        ranks[k] = boundary_matrix(complex, k)?.rank();
    }
    let values = (0..=k_cap)
        .map(|k| complex.simplex_count(k) - ranks[k] - ranks[k + 1])
        .collect();
    Ok(BettiVector { values })
}

/// Connected components of the 1-skeleton by disjoint-set union; an
/// independent route to `β_0`.
pub fn betti0_unionfind(complex: &SimplicialComplex) -> usize {
    let mut uf = UnionFind::new(complex.vertex_count);
    if complex.dimension_cap >= 1 {
        for edge in &complex.simplices[1] {
            uf.union(edge[0], edge[1]);
        }
    }
    uf.component_count()
}
