//! The minimizer `C_{s,λ}` of every level functional, and the ROF solution
//! `u_λ(x) = sup{s : x ∈ C_{s,λ}}` assembled from them.

use std::io::{BufRead, Write};

use ndarray::parallel::prelude::*;
use ndarray::{Array2, Axis};
use serde::Serialize;
use thiserror::Error;

use crate::energy::{best_of, compare_base_sets, region_energy, EnergyError, EnergyParams};
use crate::geometry::{Ball, Point, Region, RegionKind, Shape, TwoBallConfig};
use crate::oracle_raster::{read_pgm_raw, Grid, RasterError};
use crate::thresholds::{bisect, CaseFlag, Thresholds};
use crate::transversal::{gamma_region, solve_transversal, transversal_region, GammaFamily};

/// λ-ties with a breakpoint go to the left-closed interval.
pub const LAMBDA_TOL: f64 = 1e-12;
const LEVEL_SCAN: usize = 1000;
const BISECTION_DEPTH: usize = 40;
const FAMILY_TABLE: usize = 2048;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{op} is not defined for λ = {lambda} (regime {regime:?})")]
    OutOfRegime { op: &'static str, lambda: f64, regime: Regime },
    #[error("configuration is interacting; the two-ball formula does not apply")]
    ConfigInteracting,
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("malformed field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The λ-intervals of the explicit solution; `Separate` is the
/// non-interacting case, where each ball evolves on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    A,
    B,
    C1,
    C2,
    D,
    Separate,
}

pub fn regime(th: &Thresholds, lambda: f64) -> Regime {
    if !th.interacting {
        return Regime::Separate;
    }
    let (l1, l2) = (th.lambda1.unwrap_or(0.0), th.lambda2.unwrap_or(0.0));
    if th.r1.is_some_and(|r| r > 0.0) && lambda <= l1 + LAMBDA_TOL {
        Regime::A
    } else if lambda <= l2 + LAMBDA_TOL {
        Regime::B
    } else if lambda <= th.lambda3 + LAMBDA_TOL {
        match th.case_flag {
            CaseFlag::RatioLt => Regime::C1,
            CaseFlag::RatioGe => Regime::C2,
        }
    } else {
        Regime::D
    }
}

/// Level breakpoints for one λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakpoints {
    pub s_a: Option<f64>,
    pub s_b: Option<f64>,
    pub s_c: Option<f64>,
    /// Width of a zero-energy plateau of the closing ending at `s_c`.
    pub s_c_plateau: Option<f64>,
    /// `1 − 2λ/r1`, where S1 vanishes.
    pub s_ball1: f64,
    /// `1 − 2λ/r2`, where S2 vanishes.
    pub s_ball2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelDecision {
    pub s: f64,
    pub lambda: f64,
    #[serde(skip)]
    pub region: Region,
    pub kind: RegionKind,
    pub energy: f64,
    pub regime: Regime,
    pub breakpoints: Breakpoints,
}

fn check_lambda(lambda: f64) -> Result<(), SolverError> {
    EnergyParams::new(0.0, lambda)?;
    Ok(())
}

/// `λ/R1`, the level up to which the closing beats S (regime A).
pub fn s_a(th: &Thresholds, lambda: f64) -> Result<f64, SolverError> {
    check_lambda(lambda)?;
    let reg = regime(th, lambda);
    match (reg, th.r1) {
        (Regime::A, Some(r1)) if r1 > 0.0 => Ok(lambda / r1),
        _ => Err(SolverError::OutOfRegime { op: "s_a", lambda, regime: reg }),
    }
}

/// First level at which S1 beats Γ_{s,λ}(S) (regime B).
pub fn s_b(cfg: &TwoBallConfig, th: &Thresholds, lambda: f64) -> Result<f64, SolverError> {
    check_lambda(lambda)?;
    let reg = regime(th, lambda);
    if reg != Regime::B {
        return Err(SolverError::OutOfRegime { op: "s_b", lambda, regime: reg });
    }
    let mut top = 1.0 - 2.0 * lambda / cfg.r1();
    if let Some(r1) = th.r1.filter(|&r| r > 0.0) {
        top = top.min(lambda / r1);
    }
    let top = top.max(0.0);
    let ball1 = cfg.ball_region(Ball::One);
    let gamma_wins = |s: f64| {
        let p = EnergyParams::new(s, lambda).expect("level in [0, 1]");
        region_energy(&gamma_region(cfg, &p), &p) <= region_energy(&ball1, &p)
    };
    Ok(last_true(0.0, top, gamma_wins, true))
}

/// Maximal level at which the closing still has non-positive energy
/// (regime C1), with the width of any zero-energy plateau below it.
pub fn s_c(cfg: &TwoBallConfig, th: &Thresholds, lambda: f64) -> Result<(f64, f64), SolverError> {
    check_lambda(lambda)?;
    let reg = regime(th, lambda);
    if reg != Regime::C1 {
        return Err(SolverError::OutOfRegime { op: "s_c", lambda, regime: reg });
    }
    let top = if th.r_c > 0.0 { (lambda / th.r_c).min(1.0) } else { 1.0 };
    let energy = |s: f64| {
        let p = EnergyParams::new(s, lambda).expect("level in [0, 1]");
        region_energy(&cfg.closing_region(p.r_out()).expect("positive radius"), &p)
    };
    let sc = last_true(0.0, top, |s| energy(s) <= 0.0, false);
    let start = bisect(0.0, sc, |s| s == 0.0 || energy(s) < -crate::energy::ENERGY_TOL);
    Ok((sc, sc - start))
}

/// Boundary of `{s : pred(s)}` on `[lo, hi]` with `pred(lo)` true, by a
/// uniform scan followed by bisection.  `first` picks the first failure,
/// otherwise the last success is refined.
fn last_true(lo: f64, hi: f64, pred: impl Fn(f64) -> bool, first: bool) -> f64 {
    if hi <= lo {
        return lo;
    }
    let at = |k: usize| lo + (hi - lo) * k as f64 / LEVEL_SCAN as f64;
    let flags: Vec<bool> = (0..=LEVEL_SCAN).map(|k| pred(at(k))).collect();
    let k = if first {
        match flags.iter().position(|&f| !f) {
            None => return hi,
            Some(0) => return lo,
            Some(k) => k - 1,
        }
    } else {
        match flags.iter().rposition(|&f| f) {
            None => return lo,
            Some(k) if k == LEVEL_SCAN => return hi,
            Some(k) => k,
        }
    };
    bisect(at(k), at(k + 1), pred)
}

/// Membership-only view of a level region.
enum LevelShape {
    Empty,
    Shape(Shape),
    Bridge(crate::geometry::Bridge),
}

/// Everything needed to produce `C_{s,λ}` and `u_λ` for one λ.
#[derive(Debug, Clone)]
pub struct Solution {
    cfg: TwoBallConfig,
    lambda: f64,
    regime: Regime,
    breakpoints: Breakpoints,
    s_top: f64,
    family: Option<GammaFamily>,
}

impl Solution {
    pub fn new(cfg: &TwoBallConfig, th: &Thresholds, lambda: f64) -> Result<Self, SolverError> {
        check_lambda(lambda)?;
        let reg = regime(th, lambda);
        let s_ball1 = 1.0 - 2.0 * lambda / cfg.r1();
        let s_ball2 = 1.0 - 2.0 * lambda / cfg.r2();
        let mut bp = Breakpoints { s_a: None, s_b: None, s_c: None, s_c_plateau: None, s_ball1, s_ball2 };
        let mut family = None;
        let s_top = match reg {
            Regime::A => {
                bp.s_a = Some(s_a(th, lambda)?);
                s_ball1
            }
            Regime::B => {
                let sb = s_b(cfg, th, lambda)?;
                bp.s_b = Some(sb);
                // Γ is transversal (or S1) where r2 < λ/(1−s) <= r1.
                let lo = (1.0 - lambda / cfg.r2()).max(0.0);
                let hi = sb.min(1.0 - lambda / cfg.r1());
                if hi > lo {
                    family = Some(GammaFamily::new(cfg, lambda, lo, hi, FAMILY_TABLE));
                }
                s_ball1
            }
            Regime::C1 => {
                let (sc, plateau) = s_c(cfg, th, lambda)?;
                bp.s_c = Some(sc);
                bp.s_c_plateau = Some(plateau);
                sc
            }
            Regime::C2 | Regime::Separate => s_ball1,
            Regime::D => -1.0,
        };
        Ok(Solution { cfg: *cfg, lambda, regime: reg, breakpoints: bp, s_top, family })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn breakpoints(&self) -> Breakpoints {
        self.breakpoints
    }

    /// Supremum of the levels with a non-empty minimizer (negative if none).
    pub fn s_top(&self) -> f64 {
        self.s_top
    }

    fn gamma_kind(&self, s: f64) -> GammaPiece {
        let ri = self.lambda / (1.0 - s);
        if ri <= self.cfg.r2() {
            GammaPiece::Closing
        } else if ri <= self.cfg.r1() {
            GammaPiece::Transversal
        } else {
            GammaPiece::Empty
        }
    }

    fn closing_radius(&self, s: f64) -> f64 {
        if s == 0.0 {
            f64::INFINITY
        } else {
            self.lambda / s
        }
    }

    /// Which candidate the theorem selects at level `s`.
    fn selection(&self, s: f64) -> Selection {
        let bp = &self.breakpoints;
        if !(0.0..=1.0).contains(&s) {
            return Selection::Empty;
        }
        match self.regime {
            Regime::A => {
                if s <= bp.s_a.unwrap_or(0.0) {
                    Selection::Closing
                } else if s <= bp.s_ball2 {
                    Selection::Union
                } else if s <= bp.s_ball1 {
                    Selection::Ball1
                } else {
                    Selection::Empty
                }
            }
            Regime::B => {
                if s <= bp.s_b.unwrap_or(0.0) {
                    match self.gamma_kind(s) {
                        GammaPiece::Closing => Selection::Closing,
                        GammaPiece::Transversal => Selection::Transversal,
                        GammaPiece::Empty => Selection::Empty,
                    }
                } else if s <= bp.s_ball1 {
                    Selection::Ball1
                } else {
                    Selection::Empty
                }
            }
            Regime::C1 => {
                if s <= bp.s_c.unwrap_or(-1.0) {
                    Selection::Closing
                } else {
                    Selection::Empty
                }
            }
            Regime::C2 => {
                if s <= bp.s_ball1 {
                    Selection::Ball1
                } else {
                    Selection::Empty
                }
            }
            Regime::D => Selection::Empty,
            Regime::Separate => {
                let p = EnergyParams::new(s, self.lambda).expect("level in [0, 1]");
                match compare_base_sets(&self.cfg, &p) {
                    RegionKind::UnionBalls => Selection::Union,
                    RegionKind::Ball1 => Selection::Ball1,
                    _ => Selection::Empty,
                }
            }
        }
    }

    pub fn region(&self, s: f64) -> Region {
        match self.selection(s) {
            Selection::Empty => Region::empty(),
            Selection::Ball1 => self.cfg.ball_region(Ball::One),
            Selection::Union => self.cfg.union_region(),
            Selection::Closing => self.cfg.closing_region(self.closing_radius(s)).expect("positive radius"),
            Selection::Transversal => self
                .family
                .as_ref()
                .and_then(|f| f.region(s))
                .unwrap_or_else(|| self.cfg.ball_region(Ball::One)),
        }
    }

    pub fn decision(&self, s: f64) -> Result<LevelDecision, SolverError> {
        let p = EnergyParams::new(s, self.lambda)?;
        let region = self.region(s);
        Ok(LevelDecision {
            s,
            lambda: self.lambda,
            kind: region.kind,
            energy: region_energy(&region, &p),
            region,
            regime: self.regime,
            breakpoints: self.breakpoints,
        })
    }

    fn level_shape(&self, s: f64) -> LevelShape {
        let cfg = &self.cfg;
        let ball1 = || LevelShape::Shape(Shape::Disks(vec![(cfg.center1(), cfg.r1())]));
        match self.selection(s) {
            Selection::Empty => LevelShape::Empty,
            Selection::Ball1 => ball1(),
            Selection::Union => LevelShape::Shape(Shape::Disks(vec![
                (cfg.center1(), cfg.r1()),
                (cfg.center2(), cfg.r2()),
            ])),
            Selection::Closing => match cfg.closing_bridge(self.closing_radius(s)) {
                Some(b) => LevelShape::Bridge(b),
                None => self.level_shape_union(),
            },
            Selection::Transversal => match self.family.as_ref().and_then(|f| f.bridge(s)) {
                Some(b) => LevelShape::Bridge(b),
                None => ball1(),
            },
        }
    }

    fn level_shape_union(&self) -> LevelShape {
        let cfg = &self.cfg;
        LevelShape::Shape(Shape::Disks(vec![(cfg.center1(), cfg.r1()), (cfg.center2(), cfg.r2())]))
    }

    /// `x ∈ C_{s,λ}` without building the boundary.
    pub fn contains(&self, x: Point, s: f64) -> bool {
        let eps = self.cfg.eps();
        match self.level_shape(s) {
            LevelShape::Empty => false,
            LevelShape::Shape(sh) => sh.contains(x, eps),
            LevelShape::Bridge(b) => b.contains(x, eps),
        }
    }

    /// `u_λ(x)`.
    pub fn u(&self, x: Point) -> f64 {
        if self.s_top < 0.0 {
            return 0.0;
        }
        if self.regime == Regime::Separate {
            return noninteracting_value(&self.cfg, self.lambda, x);
        }
        let eps = self.cfg.eps();
        if x.dist(self.cfg.center1()) <= self.cfg.r1() + eps {
            return self.s_top;
        }
        if !self.cfg.closing_bridge(f64::INFINITY).is_some_and(|b| b.contains(x, eps)) {
            return 0.0;
        }
        if !self.contains(x, 0.0) {
            return 0.0;
        }
        if self.contains(x, self.s_top) {
            return self.s_top;
        }
        let (mut lo, mut hi) = (0.0, self.s_top);
        for _ in 0..BISECTION_DEPTH {
            let mid = 0.5 * (lo + hi);
            if self.contains(x, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

#[derive(Clone, Copy)]
enum GammaPiece {
    Closing,
    Transversal,
    Empty,
}

#[derive(Clone, Copy)]
enum Selection {
    Empty,
    Ball1,
    Union,
    Closing,
    Transversal,
}

/// `C_{s,λ}` with its energy, regime and level breakpoints.
pub fn minimizer(cfg: &TwoBallConfig, th: &Thresholds, p: &EnergyParams) -> Result<LevelDecision, SolverError> {
    Solution::new(cfg, th, p.lambda())?.decision(p.s())
}

/// Every set the classification allows as a minimizer at `(s, λ)`:
/// ∅, S1, S2, S, the closing of radius λ/s, Γ_{s,λ}(S) and the
/// decreasing-type transversal set when one exists.
pub fn candidate_regions(cfg: &TwoBallConfig, p: &EnergyParams) -> Vec<Region> {
    let mut out = vec![Region::empty(), cfg.ball_region(Ball::One), cfg.ball_region(Ball::Two), cfg.union_region()];
    if let Ok(c) = cfg.closing_region(p.r_out()) {
        out.push(c);
    }
    out.push(gamma_region(cfg, p));
    if let Ok(Some(g)) = solve_transversal(cfg, p) {
        out.push(transversal_region(cfg, &g));
    }
    out
}

/// `F(C_{s,λ}) − min F` over [`candidate_regions`]; positive means some
/// candidate beats the selected set.
pub fn optimality_gap(cfg: &TwoBallConfig, sol: &Solution, s: f64) -> Result<f64, SolverError> {
    let p = EnergyParams::new(s, sol.lambda())?;
    let chosen = sol.decision(s)?.energy;
    let (_, best) = best_of(&candidate_regions(cfg, &p), &p)?;
    Ok(chosen - best)
}

pub fn evaluate_u(cfg: &TwoBallConfig, th: &Thresholds, lambda: f64, x: Point) -> Result<f64, SolverError> {
    Ok(Solution::new(cfg, th, lambda)?.u(x))
}

fn noninteracting_value(cfg: &TwoBallConfig, lambda: f64, x: Point) -> f64 {
    let eps = cfg.eps();
    [Ball::One, Ball::Two]
        .into_iter()
        .filter(|&b| x.dist(cfg.center(b)) <= cfg.radius(b) + eps)
        .map(|b| (1.0 - 2.0 * lambda / cfg.radius(b)).max(0.0))
        .fold(0.0, f64::max)
}

/// `(1 − 2λ/r1)⁺ χ_{S1} + (1 − 2λ/r2)⁺ χ_{S2}` for non-interacting balls.
pub fn noninteracting_u(cfg: &TwoBallConfig, lambda: f64, x: Point) -> Result<f64, SolverError> {
    if crate::thresholds::interaction_test(cfg) {
        return Err(SolverError::ConfigInteracting);
    }
    check_lambda(lambda)?;
    Ok(noninteracting_value(cfg, lambda, x))
}

/// Samples of a scalar function on a cell-centred grid, stored as
/// `values[[j, i]]` like [`crate::oracle_raster::Bitmap`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Array2<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field { grid, values: Array2::zeros((grid.ny, grid.nx)) }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64 + Sync) -> Self {
        let mut values = Array2::zeros((grid.ny, grid.nx));
        values.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(j, mut row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(grid.center(i, j));
            }
        });
        Field { grid, values }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// CSV: a `nx,ny,h,ox,oy` header and its values, then one line per grid
    /// row from the bottom (`j = 0`) up.  Floats carry 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> Result<(), SolverError> {
        let g = &self.grid;
        writeln!(w, "nx,ny,h,ox,oy")?;
        writeln!(w, "{},{},{:.16e},{:.16e},{:.16e}", g.nx, g.ny, g.h, g.ox, g.oy)?;
        let mut line = String::new();
        for row in self.values.rows() {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv(r: impl BufRead) -> Result<Field, SolverError> {
        let bad = |m: &str| SolverError::Format(m.to_string());
        let mut lines = r.lines();
        let mut next = || lines.next().transpose().map_err(SolverError::from)?.ok_or_else(|| bad("truncated"));
        if next()?.trim() != "nx,ny,h,ox,oy" {
            return Err(bad("missing header"));
        }
        let head = next()?;
        let f: Vec<&str> = head.trim().split(',').collect();
        if f.len() != 5 {
            return Err(bad("header values"));
        }
        let n = |s: &str| s.parse::<usize>().map_err(|_| bad("grid size"));
        let x = |s: &str| s.parse::<f64>().map_err(|_| bad("grid geometry"));
        let grid = Grid::new(x(f[3])?, x(f[4])?, x(f[2])?, n(f[0])?, n(f[1])?)?;
        let mut values = Array2::zeros((grid.ny, grid.nx));
        for j in 0..grid.ny {
            let line = next()?;
            let row: Vec<f64> = line.trim().split(',').map(x).collect::<Result<_, _>>()?;
            if row.len() != grid.nx {
                return Err(bad("row length"));
            }
            values.row_mut(j).assign(&ndarray::Array1::from(row));
        }
        Ok(Field { grid, values })
    }

    /// 16-bit binary PGM, sample = round(clamp(u, 0, 1)·65535), top row
    /// first, grid in a header comment.
    pub fn write_pgm16(&self, mut w: impl Write) -> Result<(), SolverError> {
        let g = &self.grid;
        write!(w, "P5\n# tvball-grid {:e} {:e} {:e}\n{} {}\n65535\n", g.ox, g.oy, g.h, g.nx, g.ny)?;
        let mut data = Vec::with_capacity(2 * g.len());
        for j in (0..g.ny).rev() {
            for &v in self.values.row(j) {
                data.extend_from_slice(&((v.clamp(0.0, 1.0) * 65535.0).round() as u16).to_be_bytes());
            }
        }
        w.write_all(&data)?;
        Ok(())
    }

    pub fn read_pgm16(r: impl BufRead) -> Result<Field, SolverError> {
        let (grid, maxval, data) = read_pgm_raw(r)?;
        if maxval != 65535 {
            return Err(SolverError::Format(format!("expected maxval 65535, got {maxval}")));
        }
        let mut values = Array2::zeros((grid.ny, grid.nx));
        for (k, px) in data.chunks_exact(2).enumerate() {
            let (row, i) = (k / grid.nx, k % grid.nx);
            values[[grid.ny - 1 - row, i]] = u16::from_be_bytes([px[0], px[1]]) as f64 / 65535.0;
        }
        Ok(Field { grid, values })
    }
}

/// `u_λ` at the pixel centres of `grid`, which must cover co(S).
pub fn rasterize_u(cfg: &TwoBallConfig, th: &Thresholds, lambda: f64, grid: Grid) -> Result<Field, SolverError> {
    grid.require_cover(cfg.hull_bbox())?;
    let sol = Solution::new(cfg, th, lambda)?;
    Ok(Field::from_fn(grid, |x| sol.u(x)))
}

/// Pixel averages of `u_λ`: a pixel whose four corners stay within 0.01 of
/// the centre takes the centre value (exact on plateaus, second order where
/// `u` is smooth), any other pixel the mean of `k×k` midpoint samples.
/// Comparable with a numerical solution computed from averaged data.
pub fn average_u(cfg: &TwoBallConfig, th: &Thresholds, lambda: f64, grid: Grid, k: usize) -> Result<Field, SolverError> {
    grid.require_cover(cfg.hull_bbox())?;
    let sol = Solution::new(cfg, th, lambda)?;
    let corners = Grid::new(grid.ox - 0.5 * grid.h, grid.oy - 0.5 * grid.h, grid.h, grid.nx + 1, grid.ny + 1)?;
    let c = Field::from_fn(corners, |x| sol.u(x)).values;
    let (h, k) = (grid.h, k.max(1));
    let mut values = Array2::zeros((grid.ny, grid.nx));
    values.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(j, mut row)| {
        for (i, v) in row.iter_mut().enumerate() {
            let x = grid.center(i, j);
            let mid = sol.u(x);
            let around = [c[[j, i]], c[[j, i + 1]], c[[j + 1, i]], c[[j + 1, i + 1]]];
            if around.iter().all(|a| (a - mid).abs() <= 1e-2) {
                *v = mid;
                continue;
            }
            let mut acc = 0.0;
            for a in 0..k {
                for b in 0..k {
                    let dx = ((a as f64 + 0.5) / k as f64 - 0.5) * h;
                    let dy = ((b as f64 + 0.5) / k as f64 - 0.5) * h;
                    acc += sol.u(Point::new(x.x + dx, x.y + dy));
                }
            }
            *v = acc / (k * k) as f64;
        }
    });
    Ok(Field { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::breakpoints;

    fn cfg(r1: f64, r2: f64, d: f64) -> TwoBallConfig {
        TwoBallConfig::new(r1, r2, d).unwrap()
    }

    fn fig() -> (TwoBallConfig, Thresholds) {
        let c = cfg(1.2, 1.0, 0.05);
        let t = breakpoints(&c);
        (c, t)
    }

    #[test]
    fn regimes_follow_breakpoints() {
        let (_, t) = fig();
        let (l1, l2, l3) = (t.lambda1.unwrap(), t.lambda2.unwrap(), t.lambda3);
        assert_eq!(regime(&t, 0.5 * l1), Regime::A);
        assert_eq!(regime(&t, l1), Regime::A);
        assert_eq!(regime(&t, 0.5 * (l1 + l2)), Regime::B);
        assert_eq!(regime(&t, l2), Regime::B);
        assert_eq!(regime(&t, 0.5 * (l2 + l3)), Regime::C1);
        assert_eq!(regime(&t, 1.01 * l3), Regime::D);
    }

    #[test]
    fn s_a_boundary_and_residual() {
        let (c, t) = fig();
        let l1 = t.lambda1.unwrap();
        let sa = s_a(&t, l1).unwrap();
        assert!((sa - (1.0 - 2.0 * l1 / c.r2())).abs() < 1e-12);
        let l = 0.5 * l1;
        let sa = s_a(&t, l).unwrap();
        let p = EnergyParams::new(sa, l).unwrap();
        let fc = region_energy(&c.closing_region(p.r_out()).unwrap(), &p);
        assert!((fc - region_energy(&c.union_region(), &p)).abs() < 1e-9);
        assert!(s_a(&t, 0.1).is_err());
    }

    #[test]
    fn s_b_at_lambda2_and_residual() {
        let (c, t) = fig();
        let l2 = t.lambda2.unwrap();
        let sb = s_b(&c, &t, l2).unwrap();
        assert!((sb - (1.0 - 2.0 * l2 / c.r1())).abs() < 1e-9, "{sb}");
        let l = 0.5 * (t.lambda1.unwrap() + l2);
        let sb = s_b(&c, &t, l).unwrap();
        let p = EnergyParams::new(sb, l).unwrap();
        let gap = region_energy(&gamma_region(&c, &p), &p) - region_energy(&c.ball_region(Ball::One), &p);
        assert!(gap.abs() < 1e-9, "{gap}");
    }

    #[test]
    fn s_c_at_lambda3_and_residual() {
        let (c, t) = fig();
        let (sc, _) = s_c(&c, &t, t.lambda3).unwrap();
        assert!(sc.abs() < 1e-9, "{sc}");
        let l = 0.5 * (t.lambda2.unwrap() + t.lambda3);
        let (sc, plateau) = s_c(&c, &t, l).unwrap();
        assert!(sc > 1.0 - 2.0 * l / c.r1());
        let p = EnergyParams::new(sc, l).unwrap();
        assert!(region_energy(&c.closing_region(p.r_out()).unwrap(), &p).abs() < 1e-9);
        assert!(plateau < 1e-6);
    }

    #[test]
    fn theorem_examples() {
        let (c, t) = fig();
        let l3 = t.lambda3;
        for s in [0.0, 0.3, 0.9] {
            let d = minimizer(&c, &t, &EnergyParams::new(s, 1.01 * l3).unwrap()).unwrap();
            assert_eq!(d.kind, RegionKind::Empty);
        }
        let l = 0.5 * t.lambda1.unwrap();
        let sol = Solution::new(&c, &t, l).unwrap();
        let bp = sol.breakpoints();
        let mid = 0.5 * (bp.s_a.unwrap() + bp.s_ball2);
        assert_eq!(sol.decision(mid).unwrap().kind, RegionKind::UnionBalls);
        assert!((sol.u(c.center1()) - (1.0 - 2.0 * l / c.r1())).abs() < 1e-15);
        let ge = cfg(1.0, 0.3, 0.02);
        let tg = breakpoints(&ge);
        let l = 0.5 * (tg.lambda2.unwrap() + tg.lambda3);
        assert_eq!(minimizer(&ge, &tg, &EnergyParams::new(0.0, l).unwrap()).unwrap().kind, RegionKind::Ball1);
    }

    #[test]
    fn selected_minimizer_beats_all_candidates() {
        for c in [cfg(1.2, 1.0, 0.05), cfg(1.0, 0.3, 0.02), cfg(1.0, 1.0, 0.1)] {
            let t = breakpoints(&c);
            for li in 1..=12 {
                let l = 1.1 * t.lambda3 * li as f64 / 12.0;
                let sol = Solution::new(&c, &t, l).unwrap();
                for si in 0..=12 {
                    let s = si as f64 / 12.0;
                    let gap = optimality_gap(&c, &sol, s).unwrap();
                    assert!(gap <= 1e-9, "{c:?} λ={l} s={s}: gap {gap}");
                }
            }
        }
    }

    #[test]
    fn fast_membership_matches_regions() {
        let (c, t) = fig();
        let l = 0.5 * (t.lambda1.unwrap() + t.lambda2.unwrap());
        let sol = Solution::new(&c, &t, l).unwrap();
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for k in 0..40 {
            let s = sol.s_top() * k as f64 / 40.0;
            let reg = sol.region(s);
            for _ in 0..500 {
                let x = Point::new(-1.3 + 4.8 * next(), -1.3 + 2.6 * next());
                assert_eq!(sol.contains(x, s), reg.contains(x), "s={s} x={x:?}");
            }
        }
    }

    #[test]
    fn u_values() {
        let (c, t) = fig();
        let sol = Solution::new(&c, &t, 0.5 * (t.lambda2.unwrap() + t.lambda3)).unwrap();
        assert_eq!(sol.u(Point::new(10.0, 0.0)), 0.0);
        let far = cfg(1.0, 0.5, 3.0);
        let tf = breakpoints(&far);
        assert!((evaluate_u(&far, &tf, 0.25, far.center1()).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(noninteracting_u(&far, 0.3, far.center2()).unwrap(), 0.0);
        assert_eq!(noninteracting_u(&far, 0.1, Point::new(1.5, 0.0)).unwrap(), 0.0);
        assert!(noninteracting_u(&c, 0.1, c.center1()).is_err());
    }

    #[test]
    fn field_round_trips() {
        let (c, t) = fig();
        let grid = Grid::around(&c, 1.0 / 16.0, 0.1).unwrap();
        let f = rasterize_u(&c, &t, 0.1, grid).unwrap();
        assert!(f.min() >= 0.0 && f.max() <= 1.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(Field::read_csv(&buf[..]).unwrap(), f);
        let mut buf = Vec::new();
        f.write_pgm16(&mut buf).unwrap();
        let g = Field::read_pgm16(&buf[..]).unwrap();
        assert_eq!(g.grid, f.grid);
        assert!(g.values.iter().zip(f.values.iter()).all(|(a, b)| (a - b).abs() <= 0.5 / 65535.0 + 1e-15));
        let small = Grid::new(0.0, 0.0, 0.1, 4, 4).unwrap();
        assert!(matches!(rasterize_u(&c, &t, 0.1, small), Err(SolverError::Raster(RasterError::BoxTooSmall { .. }))));
        assert!(rasterize_u(&c, &t, 1.01 * t.lambda3, grid).unwrap().max() == 0.0);
    }
}
