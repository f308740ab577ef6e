//! Exact solution of total-variation (ROF) denoising for the indicator of two
//! disjoint planar balls, together with independent numerical oracles.
//!
//! The solution `u_λ` is assembled from its level sets `{u_λ >= s}`, each of
//! which minimizes the geometric functional
//! `F_{s,λ}(X) = P(X) + (s/λ)|X \ S| − ((1−s)/λ)|X ∩ S|`.
//! The [`solver`] picks the minimizer among the candidate regions built in
//! [`geometry`] and [`transversal`]; [`oracle_raster`] and [`oracle_tv`] check
//! the result by raster morphology and by a primal-dual TV solver.

pub mod energy;
pub mod geometry;
pub mod oracle_raster;
pub mod oracle_tv;
pub mod solver;
pub mod thresholds;
pub mod transversal;

pub use energy::EnergyParams;
pub use geometry::{Point, Region, RegionKind, TwoBallConfig};


pub use solver::{Field, Solution};
pub use thresholds::Thresholds;
