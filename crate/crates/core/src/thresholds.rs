//! Critical radii R_c, R1, R2 and the λ-breakpoints λ1 ≤ λ2 ≤ λ3 that split
//! the solution into regimes, plus the dual norm of χ_S.

use serde::Serialize;
use thiserror::Error;

use crate::energy::EnergyParams;
use crate::geometry::{RegionKind, TwoBallConfig};
use crate::transversal::gamma_region;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdsError {
    #[error("configuration is not interacting: P(S) <= P(co(S))")]
    NotInteracting,
    #[error("R2 is only defined when r1/2 < |S|/P(co(S))")]
    CaseNotApplicable,
}

/// Which of `ρ(S1) = r1/2` and `ρ(co(S)) = |S|/P(co(S))` is larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseFlag {
    RatioLt,
    RatioGe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub r_c: f64,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda3: f64,
    pub dual_norm: f64,
    pub interacting: bool,
    pub case_flag: CaseFlag,
    /// The fixed-point residual for λ2 (ratio_ge case) changed sign more
    /// than once on the scan.
    pub lambda2_multiple_roots: bool,
}

pub fn interaction_test(cfg: &TwoBallConfig) -> bool {
    cfg.perimeter_s() > cfg.hull_perimeter()
}

pub fn dual_norm(cfg: &TwoBallConfig) -> f64 {
    (0.5 * cfg.r1()).max(cfg.area_s() / cfg.hull_perimeter())
}

pub fn case_flag(cfg: &TwoBallConfig) -> CaseFlag {
    if 0.5 * cfg.r1() < cfg.area_s() / cfg.hull_perimeter() {
        CaseFlag::RatioLt
    } else {
        CaseFlag::RatioGe
    }
}

/// Bisection on a predicate that holds at `lo` and fails at `hi`; runs until
/// the bracket stops shrinking (at least 60 halvings).  Returns the last
/// point where the predicate holds.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, mut holds: impl FnMut(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Root `R >= lo` of `P(Close_R) + |Close_R \ S|/R = target`, the left side
/// decreasing from above `target` to `P(co(S)) < target`.
fn closing_balance_root(cfg: &TwoBallConfig, lo: f64, target: f64) -> f64 {
    let mut hi = lo.max(cfg.scale());
    while cfg.closing_balance(hi) > target {
        hi *= 2.0;
    }
    let r = bisect(lo, hi, |r| r <= lo || cfg.closing_balance(r) > target);
    // `r` is the last radius where the balance is still above target; the
    // neighbouring float on the other side is equally close.
    r
}

/// `P(Close_R1) + |Close_R1 \ S|/R1 = P(S)`; 0 when the balls touch.
pub fn solve_r1(cfg: &TwoBallConfig) -> Result<f64, ThresholdsError> {
    if !interaction_test(cfg) {
        return Err(ThresholdsError::NotInteracting);
    }
    if cfg.d() == 0.0 {
        return Ok(0.0);
    }
    Ok(closing_balance_root(cfg, cfg.connectivity_radius(), cfg.perimeter_s()))
}

/// `P(Close_R2) + |Close_R2 \ S|/R2 = (2/r1)|S|`.  For touching balls the
/// left side tends to P(S) as R → 0, which exceeds the target unless
/// r1 = r2, so R2 vanishes only for touching equal balls.
pub fn solve_r2(cfg: &TwoBallConfig) -> Result<f64, ThresholdsError> {
    if !interaction_test(cfg) {
        return Err(ThresholdsError::NotInteracting);
    }
    if case_flag(cfg) != CaseFlag::RatioLt {
        return Err(ThresholdsError::CaseNotApplicable);
    }
    let target = 2.0 * cfg.area_s() / cfg.r1();
    if cfg.d() == 0.0 && cfg.r1() == cfg.r2() {
        return Ok(0.0);
    }
    Ok(closing_balance_root(cfg, cfg.connectivity_radius(), target))
}

/// Residual of the R1 (`target = P(S)`) or R2 (`target = 2|S|/r1`) equation.
pub fn closing_balance_residual(cfg: &TwoBallConfig, r: f64, target: f64) -> f64 {
    cfg.closing_balance(r) - target
}

/// `g(λ) = λ(P(Γ_{0,λ}) − P(S1)) − |Γ_{0,λ} ∩ S2|`, whose first zero is λ2
/// when `ρ(S1) >= ρ(co(S))`.  Vanishes identically once Γ_{0,λ} = S1.
pub fn lambda2_fixed_point_residual(cfg: &TwoBallConfig, lambda: f64) -> f64 {
    let p = EnergyParams::new(0.0, lambda).expect("positive λ");
    let g = gamma_region(cfg, &p);
    let r1 = cfg.r1();
    let s1_area = std::f64::consts::PI * r1 * r1;
    match g.kind {
        RegionKind::Ball1 | RegionKind::Empty => 0.0,
        _ => lambda * (g.perimeter - std::f64::consts::TAU * r1) - (g.area_in - s1_area),
    }
}

const LAMBDA2_SCAN: usize = 1000;

/// λ2 in the `ratio_ge` case, and whether the residual has more than one
/// sign change on the scan.
fn lambda2_ge(cfg: &TwoBallConfig) -> (f64, bool) {
    let (r1, r2) = (cfg.r1(), cfg.r2());
    let (p_co, _) = cfg.hull_measures();
    let direct = std::f64::consts::PI * r2 * r2 / (p_co - std::f64::consts::TAU * r1);
    if direct <= r2 {
        return (direct, false);
    }
    let (lo, hi) = (0.5 * r2, 0.5 * r1);
    let xs: Vec<f64> = (0..=LAMBDA2_SCAN).map(|k| lo + (hi - lo) * k as f64 / LAMBDA2_SCAN as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&l| lambda2_fixed_point_residual(cfg, l)).collect();
    let mut changes = 0;
    let mut last_sign = 0.0;
    for &g in &gs {
        if g != 0.0 {
            let sg = g.signum();
            if last_sign != 0.0 && sg != last_sign {
                changes += 1;
            }
            last_sign = sg;
        }
    }
    let k = gs.iter().position(|&g| g >= 0.0).unwrap_or(LAMBDA2_SCAN);
    if k == 0 {
        return (lo, changes > 1);
    }
    let root = bisect(xs[k - 1], xs[k], |l| lambda2_fixed_point_residual(cfg, l) < 0.0);
    (root, changes > 1)
}

pub fn breakpoints(cfg: &TwoBallConfig) -> Thresholds {
    let r_c = cfg.connectivity_radius();
    let dual = dual_norm(cfg);
    let flag = case_flag(cfg);
    if !interaction_test(cfg) {
        return Thresholds {
            r_c,
            r1: None,
            r2: None,
            lambda1: None,
            lambda2: None,
            lambda3: dual,
            dual_norm: dual,
            interacting: false,
            case_flag: flag,
            lambda2_multiple_roots: false,
        };
    }
    let (r1, r2) = (cfg.r1(), cfg.r2());
    let big_r1 = solve_r1(cfg).expect("interacting");
    let lambda1 = big_r1 * 0.5 * r2 / (big_r1 + 0.5 * r2);
    let (big_r2, lambda2, multiple) = match flag {
        CaseFlag::RatioLt => {
            let big_r2 = solve_r2(cfg).expect("ratio_lt");
            (Some(big_r2), big_r2 * 0.5 * r1 / (big_r2 + 0.5 * r1), false)
        }
        CaseFlag::RatioGe => {
            let (l2, m) = lambda2_ge(cfg);
            (None, l2, m)
        }
    };
    Thresholds {
        r_c,
        r1: Some(big_r1),
        r2: big_r2,
        lambda1: Some(lambda1),
        lambda2: Some(lambda2.max(lambda1)),
        lambda3: dual,
        dual_norm: dual,
        interacting: true,
        case_flag: flag,
        lambda2_multiple_roots: multiple,
    }
}

/// `F(Close_{λ/s}(S)) − F(S)` along `s = 1 − 2λ/r2`; changes sign at λ1.
pub fn lambda1_gap(cfg: &TwoBallConfig, lambda: f64) -> f64 {
    let s = 1.0 - 2.0 * lambda / cfg.r2();
    closing_balance_residual(cfg, lambda / s, cfg.perimeter_s())
}

/// `F(Close_{λ/s}(S)) − F(S1)` along `s = 1 − 2λ/r1`; changes sign at λ2
/// (ratio_lt case).
pub fn lambda2_gap(cfg: &TwoBallConfig, lambda: f64) -> f64 {
    let s = 1.0 - 2.0 * lambda / cfg.r1();
    closing_balance_residual(cfg, lambda / s, 2.0 * cfg.area_s() / cfg.r1())
}
