//! Simulation and verification toolkit for limit theorems of geometric
//! functionals (Betti numbers, component counts, edge counts) evaluated on
//! random point clouds in low dimension.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: points, boxes, balls, minimum enclosing balls, and the
//!   intersection test that drives Čech complex membership.
//! * [`point_process`]: deterministic seeded samplers for binomial,
//!   Poissonized, homogeneous, inhomogeneous, and coupled point clouds over
//!   piecewise-constant densities.
//! * [`cech`] and [`homology`]: Čech complex construction and mod-2 Betti
//!   numbers.
//! * [`functionals`]: the translation-invariant set functionals under study
//!   and their add-one costs.
//! * [`stabilization`]: add-one-cost traces over growing windows, limiting
//!   add-one-cost estimation, and moment diagnostics.
//! * [`percolation`]: torus spanning probabilities and critical radius
//!   estimation for the occupied component of the ball model.
//! * [`stats`]: the small statistics kit used by the experiment harness.
//! * [`harness`]: Monte Carlo experiments (variance scaling, normality,
//!   block approximation, de-Poissonization) with replication-indexed RNG
//!   streams so results are identical for any worker count.
//! * [`cli`]: config file model, run manifests, and output writers backing
//!   the `geomclt` binary.

pub mod cech;
pub mod cli;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod harness;
pub mod homology;
pub mod percolation;
pub mod point_process;
pub mod spatial;
pub mod stabilization;
pub mod stats;
pub mod union_find;

pub use error::{Error, Result};
