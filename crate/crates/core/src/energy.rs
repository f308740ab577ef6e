//! The level functional `F_{s,λ}(X) = P(X) + (s/λ)|X \ S| − ((1−s)/λ)|X ∩ S|`.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Ball, Region, RegionKind, TwoBallConfig};

/// Absolute tolerance for energy comparisons; values are O(1)–O(10) at unit
/// scale, and breakpoint equalities only hold up to rounding.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("level s must lie in [0, 1], got {0}")]
    InvalidLevel(f64),
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("ratio |X ∩ S| / P(X) is undefined for an empty region")]
    EmptyRegion,
    #[error("no candidates to compare")]
    EmptyCandidateList,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParams {
    s: f64,
    lambda: f64,
}

impl EnergyParams {
    pub fn new(s: f64, lambda: f64) -> Result<Self, EnergyError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(EnergyError::InvalidLevel(s));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(EnergyError::InvalidLambda(lambda));
        }
        Ok(EnergyParams { s, lambda })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Radius of boundary arcs inside S, `λ/(1−s)`; infinite at `s = 1`.
    pub fn r_in(&self) -> f64 {
        if self.s == 1.0 {
            f64::INFINITY
        } else {
            self.lambda / (1.0 - self.s)
        }
    }

    /// Radius of boundary arcs outside S, `λ/s`; infinite at `s = 0`.
    pub fn r_out(&self) -> f64 {
        if self.s == 0.0 {
            f64::INFINITY
        } else {
            self.lambda / self.s
        }
    }

    /// `F_{s,λ}` from raw measures.
    pub fn energy_of(&self, perimeter: f64, area_in: f64, area_out: f64) -> f64 {
        perimeter + self.s / self.lambda * area_out - (1.0 - self.s) / self.lambda * area_in
    }
}

pub fn region_energy(reg: &Region, p: &EnergyParams) -> f64 {
    if reg.is_empty() {
        return 0.0;
    }
    p.energy_of(reg.perimeter, reg.area_in, reg.area_out)
}

/// `ρ(X) = |X ∩ S| / P(X)`.
pub fn rho(reg: &Region) -> Result<f64, EnergyError> {
    if reg.is_empty() || reg.perimeter <= 0.0 {
        return Err(EnergyError::EmptyRegion);
    }
    Ok(reg.area_in / reg.perimeter)
}

/// Best of `{∅, S1, S2, S}`.  Each ball's energy is `2πr − (1−s)πr²/λ`, so
/// the comparison reduces to `(1−s)/λ` against `2/r`; ties go to the larger
/// set.
pub fn compare_base_sets(cfg: &TwoBallConfig, p: &EnergyParams) -> RegionKind {
    let k = (1.0 - p.s) / p.lambda;
    if k >= 2.0 / cfg.r2() {
        RegionKind::UnionBalls
    } else if k >= 2.0 / cfg.r1() {
        RegionKind::Ball1
    } else {
        RegionKind::Empty
    }
}

pub fn base_region(cfg: &TwoBallConfig, kind: RegionKind) -> Region {
    match kind {
        RegionKind::UnionBalls => cfg.union_region(),
        RegionKind::Ball1 => cfg.ball_region(Ball::One),
        RegionKind::Ball2 => cfg.ball_region(Ball::Two),
        _ => Region::empty(),
    }
}

/// Minimal-energy region; energies within [`ENERGY_TOL`] count as tied and
/// the tie goes to the larger area (maximal solution).
pub fn best_of(regions: &[Region], p: &EnergyParams) -> Result<(Region, f64), EnergyError> {
    let mut best: Option<(&Region, f64)> = None;
    for r in regions {
        let e = region_energy(r, p);
        best = match best {
            None => Some((r, e)),
            Some((b, be)) => {
                if e < be - ENERGY_TOL || ((e - be).abs() <= ENERGY_TOL && r.area() > b.area()) {
                    Some((r, e))
                } else {
                    Some((b, be))
                }
            }
        };
    }
    best.map(|(r, e)| (r.clone(), e)).ok_or(EnergyError::EmptyCandidateList)
}
