//! Points, axis-aligned boxes, balls, and the minimum enclosing ball.
//!
//! All comparisons against radii use a fixed absolute tolerance so that
//! configurations at exact tangency (two points at distance exactly `2r`)
//! are classified as touching. The tolerance is additive and tiny relative
//! to every length scale used by the samplers, so it never flips a
//! non-degenerate decision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack for closed-ball membership and radius comparisons.
pub const GEOM_TOL: f64 = 1e-12;

/// A point in `R^d`, `d >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn origin(dim: usize) -> Self {
        Point { coords: vec![0.0; dim] }
    }

    /// Euclidean norm of the point viewed as a vector.
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Point> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: shift.len() });
        }
        Ok(Point::new(self.coords.iter().zip(shift).map(|(c, s)| c + s).collect()))
    }
}

/// Squared Euclidean distance without dimension checking; callers guarantee
/// equal dimensions.
#[inline]
pub(crate) fn dist_sq_unchecked(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

/// Euclidean distance between two points of equal dimension.
pub fn distance(a: &Point, b: &Point) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(dist_sq_unchecked(&a.coords, &b.coords).sqrt())
}

/// Axis-aligned box `[min, min + side)` per axis. Half-open on the upper
/// side so that translates of a box tile space without overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub min_corner: Vec<f64>,
    pub side_lengths: Vec<f64>,
}

impl Window {
    pub fn new(min_corner: Vec<f64>, side_lengths: Vec<f64>) -> Result<Self> {
        if min_corner.len() != side_lengths.len() {
            return Err(Error::DimensionMismatch {
                expected: min_corner.len(),
                got: side_lengths.len(),
            });
        }
        if min_corner.is_empty() {
            return Err(Error::invalid("window dimension must be at least 1"));
        }
        if side_lengths.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("window side lengths must be positive and finite"));
        }
        Ok(Window { min_corner, side_lengths })
    }

    /// Cube `[0, side)^d`.
    pub fn cube(side: f64, dim: usize) -> Result<Self> {
        Window::new(vec![0.0; dim], vec![side; dim])
    }

    /// Cube `[-halfwidth, halfwidth)^d` centered at the origin.
    pub fn centered_cube(halfwidth: f64, dim: usize) -> Result<Self> {
        Window::new(vec![-halfwidth; dim], vec![2.0 * halfwidth; dim])
    }

    pub fn dim(&self) -> usize {
        self.min_corner.len()
    }

    pub fn volume(&self) -> f64 {
        self.side_lengths.iter().product()
    }

    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.dim() {
            return false;
        }
        p.coords
            .iter()
            .zip(self.min_corner.iter().zip(&self.side_lengths))
            .all(|(&c, (&lo, &s))| c >= lo && c < lo + s)
    }
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    /// Closed-ball membership with the shared absolute tolerance.
    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.center.dim() {
            return false;
        }
        let r = self.radius + GEOM_TOL;
        dist_sq_unchecked(&p.coords, &self.center.coords) <= r * r
    }
}

/// Circumscribing ball of an affinely independent support set, or `None`
/// when the Gram system is singular (coincident or degenerate support).
///
/// With base point `p0` and offsets `v_i = p_i - p0`, the center solves
/// `G c = rhs` where `G_ij = v_i . v_j` and `rhs_i = |v_i|^2 / 2`; the
/// center is `p0 + sum c_i v_i`. The solve is a dense Gaussian elimination
/// with partial pivoting on a system of size at most `d`.
fn circumball(support: &[&Point]) -> Option<Ball> {
    match support.len() {
        0 => None,
        1 => Some(Ball { center: support[0].clone(), radius: 0.0 }),
        _ => {
            let p0 = support[0];
            let dim = p0.dim();
            let m = support.len() - 1;
            let vs: Vec<Vec<f64>> = support[1..]
                .iter()
                .map(|p| p.coords.iter().zip(&p0.coords).map(|(a, b)| a - b).collect())
                .collect();
            // Augmented [G | rhs].
            let mut a = vec![vec![0.0; m + 1]; m];
            for i in 0..m {
                for j in 0..m {
                    a[i][j] = vs[i].iter().zip(&vs[j]).map(|(x, y)| x * y).sum();
                }
                a[i][m] = 0.5 * a[i][i];
            }
            let scale = a
                .iter()
                .flat_map(|row| row[..m].iter())
                .fold(0.0f64, |acc, &x| acc.max(x.abs()))
                .max(1.0);
            // Forward elimination with partial pivoting.
            for col in 0..m {
                let (pivot_row, pivot_val) = (col..m)
                    .map(|r| (r, a[r][col].abs()))
                    .max_by(|x, y| x.1.total_cmp(&y.1))
                    .unwrap();
                if pivot_val <= GEOM_TOL * scale {
                    return None;
                }
                a.swap(col, pivot_row);
                for r in col + 1..m {
                    let f = a[r][col] / a[col][col];
                    for c in col..=m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
            let mut coef = vec![0.0; m];
            for col in (0..m).rev() {
                let mut acc = a[col][m];
                for c in col + 1..m {
                    acc -= a[col][c] * coef[c];
                }
                coef[col] = acc / a[col][col];
            }
            let mut center = p0.coords.clone();
            for i in 0..m {
                for c in 0..dim {
                    center[c] += coef[i] * vs[i][c];
                }
            }
            let radius = dist_sq_unchecked(&center, &p0.coords).sqrt();
            Some(Ball { center: Point::new(center), radius })
        }
    }
}

fn welzl<'a>(pts: &mut [&'a Point], n: usize, support: &mut Vec<&'a Point>, dim: usize) -> Option<Ball> {
    if n == 0 || support.len() == dim + 1 {
        return circumball(support);
    }
    let ball = welzl(pts, n - 1, support, dim);
    let p = pts[n - 1];
    if let Some(b) = &ball {
        if b.contains(p) {
            return ball;
        }
    }
    support.push(p);
    let result = welzl(pts, n - 1, support, dim);
    support.pop();
    // Move-to-front: points that forced a support update are retried early.
    pts[..n].rotate_right(1);
    result
}

/// Minimum enclosing ball of a nonempty point set (Welzl's algorithm with
/// move-to-front updates). Exact duplicates are removed up front so the
/// support-set Gram systems stay nonsingular; the multiset and set share
/// the same enclosing ball.
pub fn min_enclosing_ball(points: &[Point]) -> Result<Ball> {
    if points.is_empty() {
        return Err(Error::invalid("minimum enclosing ball of an empty set"));
    }
    let dim = points[0].dim();
    if dim == 0 {
        return Err(Error::invalid("points must have dimension at least 1"));
    }
    for p in points {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
        if p.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
    }
    let mut dedup: Vec<&Point> = Vec::with_capacity(points.len());
    for p in points {
        if !dedup.iter().any(|q| q.coords == p.coords) {
            dedup.push(p);
        }
    }
    let n = dedup.len();
    let mut support = Vec::with_capacity(dim + 1);
    let ball = welzl(&mut dedup, n, &mut support, dim)
        .ok_or_else(|| Error::Numerical("enclosing-ball support solve degenerated".into()))?;
    debug_assert!(points.iter().all(|p| ball.contains(p)));
    Ok(ball)
}

/// Whether the closed balls of radius `r` around the given points share a
/// common point, i.e. whether the minimum enclosing ball has radius at most
/// `r` (tangency counts as intersecting).
pub fn simplex_in_cech(points: &[Point], r: f64) -> Result<bool> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("radius must be positive and finite"));
    }
    let ball = min_enclosing_ball(points)?;
    Ok(ball.radius <= r + GEOM_TOL)
}
