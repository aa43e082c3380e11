//! Translation-invariant functionals of finite point sets: Betti numbers
//! of the Čech complex at a fixed radius, component counts, and edge
//! counts; plus the add-one cost of inserting a point.

use serde::{Deserialize, Serialize};

use crate::cech::build_cech;
use crate::error::{Error, Result};
use crate::geometry::{Point, Window, GEOM_TOL};
use crate::homology::{betti0_unionfind, betti_numbers};
use crate::point_process::PointCloud;
use crate::spatial::HashGrid;

/// Which functional to evaluate. `r` is the connection radius in the same
/// (scaled) coordinates as the cloud; two points interact iff their
/// distance is at most `2r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionalSpec {
    BettiK { k: usize, r: f64 },
    ComponentCount { r: f64 },
    EdgeCount { r: f64 },
}

impl FunctionalSpec {
    pub fn radius(&self) -> f64 {
        match *self {
            FunctionalSpec::BettiK { r, .. }
            | FunctionalSpec::ComponentCount { r }
            | FunctionalSpec::EdgeCount { r } => r,
        }
    }

    /// Validate against the ambient dimension: `r > 0`, and for Betti
    /// functionals `k ≤ d − 1` (higher Betti numbers vanish identically).
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.radius() > 0.0) || !self.radius().is_finite() {
            return Err(Error::invalid("functional radius must be positive and finite"));
        }
        if let FunctionalSpec::BettiK { k, .. } = *self {
            if k >= dim {
                return Err(Error::invalid(format!(
                    "betti_{k} vanishes identically in dimension {dim}"
                )));
            }
        }
        Ok(())
    }

    /// Short identifier used in summaries and level-table keys.
    pub fn label(&self) -> String {
        match *self {
            FunctionalSpec::BettiK { k, r } => format!("betti_{k}@r={r}"),
            FunctionalSpec::ComponentCount { r } => format!("component_count@r={r}"),
            FunctionalSpec::EdgeCount { r } => format!("edge_count@r={r}"),
        }
    }
}

/// Add-one cost `H(cloud ∩ window ∪ {location}) − H(cloud ∩ window)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddOneCostRecord {
    pub location: Point,
    pub window: Window,
    pub value: f64,
}

/// Evaluate the functional on the cloud.
pub fn evaluate(spec: &FunctionalSpec, cloud: &PointCloud) -> Result<f64> {
    spec.validate(cloud.dimension)?;
    match *spec {
        FunctionalSpec::BettiK { k, r } => {
            let complex = build_cech(cloud, r, k + 1)?;
            Ok(betti_numbers(&complex, k)?.values[k] as f64)
        }
        FunctionalSpec::ComponentCount { r } => {
            let complex = build_cech(cloud, r, 1)?;
            Ok(betti0_unionfind(&complex) as f64)
        }
        FunctionalSpec::EdgeCount { r } => {
            if cloud.len() < 2 {
                return Ok(0.0);
            }
            let grid = HashGrid::build(&cloud.points, cloud.dimension, 2.0 * r);
            Ok(grid.pairs(GEOM_TOL).len() as f64)
        }
    }
}

/// Add-one cost of inserting `x`, evaluated on the cloud restricted to the
/// window. Restriction happens before either evaluation so the two calls
/// see the same boundary.
pub fn add_one_cost(
    spec: &FunctionalSpec,
    cloud: &PointCloud,
    x: &Point,
    window: &Window,
) -> Result<AddOneCostRecord> {
    if x.dim() != cloud.dimension {
        return Err(Error::DimensionMismatch { expected: cloud.dimension, got: x.dim() });
    }
    if !window.contains(x) {
        return Err(Error::invalid("insertion location must lie inside the window"));
    }
    let restricted = cloud.restrict(window);
    let without = evaluate(spec, &restricted)?;
    let mut with_points = restricted.points;
    with_points.push(x.clone());
    let with_cloud = PointCloud::new(cloud.dimension, with_points)?;
    let with = evaluate(spec, &with_cloud)?;
    Ok(AddOneCostRecord { location: x.clone(), window: window.clone(), value: with - without })
}

/// Whether `H(cloud)` equals `H(cloud + shift)` exactly. Built-in
/// functionals are distance-based, so this holds up to floating-point
/// effects on the shifted coordinates.
pub fn translation_invariance_check(
    spec: &FunctionalSpec,
    cloud: &PointCloud,
    shift: &Point,
) -> Result<bool> {
    let base = evaluate(spec, cloud)?;
    let shifted = evaluate(spec, &cloud.translated(&shift.coords)?)?;
    Ok(base == shifted)
}
