//! Transversal candidates: sets containing S1 whose boundary cuts through S2
//! along an inner arc of radius `r_in = λ/(1−s)` and leaves S through two outer
//! arcs of radius `r_out = λ/s` tangent to ∂S1.  Also the set `Γ_{s,λ}(S)`,
//! both in closed form and as the raster fixed point of alternating
//! openings and closings.
//!
//! The inner circle is parametrised by the offset `c` of its centre from c2
//! along the axis (negative = towards S1).  For each `c` the inner circle cuts
//! ∂S2 at `p`; continuing smoothly at `p` with an outer arc fixes the outer
//! centre, and tangency of that arc to ∂S1 is a scalar equation in `c`.

use std::f64::consts::{PI, TAU};

use serde::Serialize;
use thiserror::Error;

use crate::energy::EnergyParams;
use crate::geometry::{Arc, Ball, Bridge, Piece, Point, Region, RegionKind, Sector, Shape, TwoBallConfig};
use crate::oracle_raster::{morph, raster_datum, Bitmap, Grid, MorphOp, RasterError};

#[derive(Debug, Error)]
pub enum TransversalError {
    #[error("arcsin argument (r_in/r2)·sin t = {0} exceeds 1")]
    DomainError(f64),
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error("raster iteration did not reach a fixed point within {0} steps")]
    NoConvergence(usize),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Inner solutions (closer to S1) grow with λ, outer ones shrink; only the
/// outer, decreasing branch can minimize.  When `r_in <= r2` there is at most
/// one solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TransversalType {
    Increasing,
    Decreasing,
    Unique,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransversalGeometry {
    pub r_in: f64,
    pub r_out: f64,
    /// Half span of the inner arc.
    pub alpha: f64,
    /// Polar angle of the tangency point on ∂S1.
    pub theta: f64,
    /// Centre of the upper outer arc; `None` when `r_out = ∞` (straight
    /// segments).
    pub outer_center: Option<Point>,
    pub inner_center: Point,
    /// Offset of the inner centre from c2 (`inner_center.x − D`).
    pub offset: f64,
    /// Upper crossing point with ∂S2.
    pub cross_point: Point,
    /// Upper tangency point on ∂S1.
    pub tangent_point: Point,
    pub type_tag: TransversalType,
}

impl TransversalGeometry {
    /// Angular span of each outer arc (0 for straight segments).
    pub fn outer_span(&self) -> f64 {
        if self.outer_center.is_some() {
            self.alpha - self.theta
        } else {
            0.0
        }
    }
}

/// Points of the two centre curves at parameter `t`: `γ_l(t)` carries the
/// centres of `r_out`-circles tangent to ∂S1, `γ_r(t)` the centres of
/// `r_out`-circles continuing an inner arc of half span `t` smoothly where it
/// cuts ∂S2 (left branch).
pub fn tangent_curves(cfg: &TwoBallConfig, r_in: f64, r_out: f64, t: f64) -> Result<(Point, Point), TransversalError> {
    let arg = r_in / cfg.r2() * t.sin();
    if arg > 1.0 {
        return Err(TransversalError::DomainError(arg));
    }
    let gl = Point::polar(Point::ORIGIN, cfg.r1() + r_out, t);
    let c = -(r_in * t.cos() + cfg.r2() * arg.asin().cos());
    let gr = Point::new(cfg.center_dist() + c + (r_in + r_out) * t.cos(), (r_in + r_out) * t.sin());
    Ok((gl, gr))
}

/// Circle–circle intersection area for radii `a`, `b` and centre distance `e`.
pub fn lens_area(a: f64, b: f64, e: f64) -> f64 {
    if e >= a + b {
        return 0.0;
    }
    if e <= (a - b).abs() {
        return PI * a.min(b).powi(2);
    }
    let t1 = ((e * e + a * a - b * b) / (2.0 * e * a)).clamp(-1.0, 1.0).acos();
    let t2 = ((e * e + b * b - a * a) / (2.0 * e * b)).clamp(-1.0, 1.0).acos();
    let k = ((-e + a + b) * (e + a - b) * (e - a + b) * (e + a + b)).max(0.0).sqrt();
    a * a * t1 + b * b * t2 - 0.5 * k
}

struct Probe {
    u: Point,
    inner: Point,
    p: Point,
    g: f64,
}

/// Offset of the inner centre whose circle crosses ∂S2 at abscissa
/// `r2·cos ψ` (relative to c2).  The crossing abscissa is monotone in the
/// offset over the admissible range, so scanning in ψ spreads samples evenly
/// along ∂S2 even when the admissible offsets shrink to a sliver
/// (`r_in` just above `r2`).
fn offset_at(r2: f64, ri: f64, psi: f64) -> f64 {
    let px = r2 * psi.cos();
    px - (px * px + ri * ri - r2 * r2).max(0.0).sqrt()
}

/// Admissible crossing angles: the whole upper half of ∂S2 when
/// `r_in > r2`, otherwise only where a circle of radius `r_in` through the
/// crossing point can be centred on the axis.
fn angle_range(r2: f64, ri: f64) -> (f64, f64) {
    if ri > r2 {
        (0.0, PI)
    } else {
        ((-(1.0 - (ri / r2).powi(2)).sqrt()).acos(), PI)
    }
}

/// Admissible offsets: the inner circle must cut ∂S2 with the arc inside S2
/// bulging towards c2.
fn offset_range(r2: f64, ri: f64) -> (f64, f64) {
    let lo = -(r2 + ri);
    let hi = if ri > r2 { r2 - ri } else { -(r2 * r2 - ri * ri).sqrt() };
    (lo, hi)
}

fn probe(cfg: &TwoBallConfig, ri: f64, ro: f64, c: f64) -> Option<Probe> {
    let (r1, r2, dd) = (cfg.r1(), cfg.r2(), cfg.center_dist());
    let px = (c * c + r2 * r2 - ri * ri) / (2.0 * c);
    let py2 = r2 * r2 - px * px;
    if !(py2 > 0.0) {
        return None;
    }
    let py = py2.sqrt();
    let u = Point::new((px - c) / ri, py / ri);
    let xc = dd + c;
    let xu = xc * u.x;
    // Sign of |O| − (r1 + r_out) with O = inner + (r_in + r_out)u, rearranged
    // so that it stays finite and accurate as r_out → ∞.
    let tail = if ro.is_infinite() { 0.0 } else { (xc * xc + ri * ri - r1 * r1 + 2.0 * ri * xu) / (2.0 * ro) };
    Some(Probe { u, inner: Point::new(xc, 0.0), p: Point::new(dd + px, py), g: tail + xu + ri - r1 })
}

const SCAN: usize = 256;

/// All roots of the tangency equation, ascending in offset (bracket scan plus
/// bisection; local extrema of the residual are refined so that nearly
/// touching root pairs are not missed).
fn tangency_roots(cfg: &TwoBallConfig, ri: f64, ro: f64) -> Vec<f64> {
    let r2 = cfg.r2();
    let (lo, hi) = offset_range(r2, ri);
    if !(hi > lo) {
        return Vec::new();
    }
    let g = |c: f64| probe(cfg, ri, ro, c).map(|p| p.g);
    // Uniform in the offset (resolves the end where the crossing angle is
    // singular) and uniform in the crossing angle (resolves the other end).
    let (a0, a1) = angle_range(r2, ri);
    let interior = |k: usize| (k as f64 + 0.5) / SCAN as f64;
    let mut xs: Vec<f64> = (0..SCAN)
        .map(|k| lo + (hi - lo) * interior(k))
        .chain((0..SCAN).map(|k| offset_at(r2, ri, a0 + (a1 - a0) * interior(k))))
        .filter(|c| *c > lo && *c < hi)
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let n = xs.len();
    if n < 3 {
        return Vec::new();
    }
    let gs: Vec<Option<f64>> = xs.iter().map(|&c| g(c)).collect();
    let mut brackets = Vec::new();
    for k in 0..n - 1 {
        if let (Some(a), Some(b)) = (gs[k], gs[k + 1]) {
            if (a > 0.0) != (b > 0.0) {
                brackets.push((xs[k], xs[k + 1]));
            }
        }
        if k == 0 {
            continue;
        }
        if let (Some(a), Some(m), Some(b)) = (gs[k - 1], gs[k], gs[k + 1]) {
            let is_max = m >= a && m >= b && m < 0.0;
            let is_min = m <= a && m <= b && m > 0.0;
            if is_max || is_min {
                let sgn = if is_max { 1.0 } else { -1.0 };
                let (mut l, mut r) = (xs[k - 1], xs[k + 1]);
                for _ in 0..100 {
                    let m1 = l + (r - l) * 0.381_966_011_250_105;
                    let m2 = r - (r - l) * 0.381_966_011_250_105;
                    let f1 = g(m1).map_or(f64::NEG_INFINITY, |v| sgn * v);
                    let f2 = g(m2).map_or(f64::NEG_INFINITY, |v| sgn * v);
                    if f1 < f2 {
                        l = m1;
                    } else {
                        r = m2;
                    }
                }
                let xm = 0.5 * (l + r);
                if let Some(v) = g(xm) {
                    if sgn * v >= 0.0 {
                        brackets.push((xs[k - 1], xm));
                        brackets.push((xm, xs[k + 1]));
                    }
                }
            }
        }
    }
    let mut roots: Vec<f64> = brackets
        .into_iter()
        .filter_map(|(mut a, mut b)| {
            let ga = g(a)?;
            if (g(b)? > 0.0) == (ga > 0.0) {
                return None;
            }
            let neg_at_a = ga <= 0.0;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                match g(m) {
                    Some(v) if (v <= 0.0) == neg_at_a => a = m,
                    Some(_) => b = m,
                    None => break,
                }
            }
            Some(0.5 * (a + b))
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    roots
}

/// Geometry at a root offset, or `None` if the resulting boundary is not a
/// valid transversal set (outer arc leaving the upper half-plane, spanning
/// π or more, or re-entering S2).
fn build(cfg: &TwoBallConfig, ri: f64, ro: f64, c: f64, tag: TransversalType) -> Option<TransversalGeometry> {
    let pr = probe(cfg, ri, ro, c)?;
    let alpha = pr.u.angle();
    let c2 = cfg.center2();
    let r2 = cfg.r2();
    let (outer_center, tangent_point, theta) = if ro.is_infinite() {
        (None, pr.u * cfg.r1(), alpha)
    } else {
        let o = pr.inner + pr.u * (ri + ro);
        let theta = o.angle();
        (Some(o), o * (cfg.r1() / o.norm()), theta)
    };
    if !(tangent_point.y > 0.0) {
        return None;
    }
    match outer_center {
        Some(o) => {
            let span = alpha - theta;
            if !(span > 0.0 && span < PI) {
                return None;
            }
            if theta <= 0.5 * PI && alpha >= 0.5 * PI && o.y - ro < -1e-12 * cfg.scale() {
                return None;
            }
            // Second crossing of the outer circle with ∂S2: mirror of p in
            // the line through o and c2.  It must not lie on the arc.
            let axis = c2 - o;
            let n = axis * (1.0 / axis.norm());
            let w = pr.p - o;
            let q = o + n * (2.0 * w.dot(n)) - w;
            if q.dist(pr.p) > 1e-9 * r2 {
                let arc = Arc::new(o, ro, alpha - PI, theta - PI);
                let tq = (q - o).angle();
                let from_p = (arc.start - tq).rem_euclid(TAU);
                if arc.covers_angle(tq) && from_p > 1e-12 && from_p < arc.span() - 1e-12 {
                    return None;
                }
            }
        }
        None => {
            // Straight continuation: the tangent line must not re-enter S2
            // between p and the tangency point.
            let dir = tangent_point - pr.p;
            let len = dir.norm();
            let e = dir * (1.0 / len);
            let t_other = -2.0 * (pr.p - c2).dot(e);
            if t_other > 1e-12 && t_other < len - 1e-12 {
                return None;
            }
        }
    }
    Some(TransversalGeometry {
        r_in: ri,
        r_out: ro,
        alpha,
        theta,
        outer_center,
        inner_center: pr.inner,
        offset: c,
        cross_point: pr.p,
        tangent_point,
        type_tag: tag,
    })
}

fn check_level(cfg: &TwoBallConfig, p: &EnergyParams) -> Result<(f64, f64), TransversalError> {
    let _ = cfg;
    if p.s() >= 1.0 {
        return Err(TransversalError::InvalidLevel("s = 1 leaves no inner arc".into()));
    }
    Ok((p.r_in(), p.r_out()))
}

/// All admissible transversal sets at `(s, λ)`, ordered from inner to outer.
pub fn transversal_candidates(cfg: &TwoBallConfig, p: &EnergyParams) -> Result<Vec<TransversalGeometry>, TransversalError> {
    let (ri, ro) = check_level(cfg, p)?;
    let roots = tangency_roots(cfg, ri, ro);
    let n = roots.len();
    Ok(roots
        .iter()
        .enumerate()
        .filter_map(|(k, &c)| {
            let tag = if ri <= cfg.r2() {
                TransversalType::Unique
            } else if k + 1 == n {
                TransversalType::Decreasing
            } else {
                TransversalType::Increasing
            };
            build(cfg, ri, ro, c, tag)
        })
        .collect())
}

/// The transversal candidate at `(s, λ)`: the unique one when `r_in <= r2`,
/// otherwise the outer (decreasing-type) one.
pub fn solve_transversal(cfg: &TwoBallConfig, p: &EnergyParams) -> Result<Option<TransversalGeometry>, TransversalError> {
    let (ri, _) = check_level(cfg, p)?;
    let roots = tangency_roots(cfg, ri, p.r_out());
    let Some(&c) = roots.last() else {
        return Ok(None);
    };
    let tag = if ri <= cfg.r2() { TransversalType::Unique } else { TransversalType::Decreasing };
    Ok(build(cfg, ri, p.r_out(), c, tag))
}

/// Region bounded by ∂S1, the two outer arcs (or segments) and the inner arc.
pub fn transversal_region(cfg: &TwoBallConfig, g: &TransversalGeometry) -> Region {
    let (c1, r1) = (cfg.center1(), cfg.r1());
    let (ri, ro, alpha, theta) = (g.r_in, g.r_out, g.alpha, g.theta);
    let (p, t) = (g.cross_point, g.tangent_point);
    let (lower, upper, outer_len) = match g.outer_center {
        Some(o) => (
            Piece::Arc(Arc::new(o.mirror(), ro, PI - theta, PI - alpha)),
            Piece::Arc(Arc::new(o, ro, alpha - PI, theta - PI)),
            ro * (alpha - theta),
        ),
        None => (Piece::Segment(t.mirror(), p.mirror()), Piece::Segment(p, t), p.dist(t)),
    };
    let loops = vec![vec![
        Piece::Arc(Arc::new(c1, r1, theta, TAU - theta)),
        lower,
        Piece::Arc(Arc::new(g.inner_center, ri, -alpha, alpha)),
        upper,
    ]];
    let perimeter = r1 * (TAU - 2.0 * theta) + 2.0 * outer_len + 2.0 * ri * alpha;
    let area_in = PI * r1 * r1 + lens_area(cfg.r2(), ri, g.offset.abs());
    let area: f64 = 0.5 * loops.iter().flatten().map(Piece::green).sum::<f64>();
    Region {
        kind: RegionKind::Transversal { r_in: ri, r_out: ro },
        loops,
        perimeter,
        area_in,
        area_out: (area - area_in).max(0.0),
        shape: Shape::Bridged(transversal_bridge(cfg, g)),
        eps: 1e-12 * cfg.scale(),
    }
}

pub(crate) fn transversal_bridge(cfg: &TwoBallConfig, g: &TransversalGeometry) -> Bridge {
    Bridge {
        left: (cfg.center1(), cfg.r1()),
        right: Sector { center: g.inner_center, radius: g.r_in, half_angle: g.alpha },
        quad: [cfg.center1(), g.inner_center, g.cross_point, g.tangent_point],
        hole: g.outer_center.map(|o| (o, g.r_out)),
    }
}

/// Γ_{s,λ}(S) for fixed λ across a range of levels.  The outer tangency
/// root is tabulated once on a grid of levels; a query in between brackets
/// the root by the neighbouring table entries and refines it by regula
/// falsi, falling back to the full scan when the bracket fails.  Results
/// agree with [`solve_transversal`] to root precision.
#[derive(Debug, Clone)]
pub struct GammaFamily {
    cfg: TwoBallConfig,
    lambda: f64,
    levels: Vec<f64>,
    offsets: Vec<Option<f64>>,
}

impl GammaFamily {
    pub fn new(cfg: &TwoBallConfig, lambda: f64, s_lo: f64, s_hi: f64, n: usize) -> Self {
        let n = n.max(2);
        let levels: Vec<f64> = (0..n).map(|k| s_lo + (s_hi - s_lo) * k as f64 / (n - 1) as f64).collect();
        let offsets = levels
            .iter()
            .map(|&s| {
                let p = EnergyParams::new(s, lambda).ok()?;
                solve_transversal(cfg, &p).ok().flatten().map(|g| g.offset)
            })
            .collect();
        GammaFamily { cfg: *cfg, lambda, levels, offsets }
    }

    pub fn geometry(&self, s: f64) -> Option<TransversalGeometry> {
        let p = EnergyParams::new(s, self.lambda).ok()?;
        let (ri, ro) = (p.r_in(), p.r_out());
        let tag = if ri <= self.cfg.r2() { TransversalType::Unique } else { TransversalType::Decreasing };
        let k = self.levels.partition_point(|&l| l <= s);
        if k > 0 && k < self.levels.len() {
            if let (Some(a), Some(b)) = (self.offsets[k - 1], self.offsets[k]) {
                let r2 = self.cfg.r2();
                let ri_prev = self.lambda / (1.0 - self.levels[k - 1]);
                let ri_next = self.lambda / (1.0 - self.levels[k]);
                let (lo, hi) = offset_range(r2, ri);
                let same_side = (ri_prev > r2) == (ri_next > r2);
                if same_side && (a - b).abs() <= 0.05 * (hi - lo) {
                    if let Some(c) = refine_root(&self.cfg, ri, ro, a.min(b), a.max(b)) {
                        if outermost(&self.cfg, ri, ro, c) {
                            return build(&self.cfg, ri, ro, c, tag);
                        }
                    }
                }
            }
        }
        solve_transversal(&self.cfg, &p).ok().flatten()
    }

    pub fn region(&self, s: f64) -> Option<Region> {
        self.geometry(s).map(|g| transversal_region(&self.cfg, &g))
    }

    pub(crate) fn bridge(&self, s: f64) -> Option<Bridge> {
        self.geometry(s).map(|g| transversal_bridge(&self.cfg, &g))
    }
}

/// Whether no further root lies between `c` and the end of the admissible
/// offsets, judged on samples uniform both in offset and in crossing angle.
fn outermost(cfg: &TwoBallConfig, ri: f64, ro: f64, c: f64) -> bool {
    const N: usize = 24;
    let r2 = cfg.r2();
    let (_, hi) = offset_range(r2, ri);
    let (a0, _) = angle_range(r2, ri);
    let px = (c * c + r2 * r2 - ri * ri) / (2.0 * c);
    let psi_c = (px / r2).clamp(-1.0, 1.0).acos();
    let mut sign = None;
    let by_offset = (1..=N).map(|k| c + (hi - c) * k as f64 / (N + 1) as f64);
    // Offsets grow as the crossing angle shrinks.
    let by_angle = (1..=N).map(|k| offset_at(r2, ri, psi_c - (psi_c - a0) * k as f64 / (N + 1) as f64));
    let mut samples: Vec<f64> = by_offset.chain(by_angle).filter(|&x| x > c && x < hi).collect();
    samples.sort_by(f64::total_cmp);
    for x in samples {
        if let Some(q) = probe(cfg, ri, ro, x) {
            let sg = q.g > 0.0;
            if *sign.get_or_insert(sg) != sg {
                return false;
            }
        }
    }
    true
}

/// Root of the tangency residual in `[a, b]` by the Illinois variant of
/// regula falsi; `None` without a sign change.
fn refine_root(cfg: &TwoBallConfig, ri: f64, ro: f64, mut a: f64, mut b: f64) -> Option<f64> {
    let (lo, hi) = offset_range(cfg.r2(), ri);
    let pad = 1e-3 * (b - a).max(1e-9 * cfg.scale());
    a = (a - pad).max(lo + 1e-15 * cfg.scale());
    b = (b + pad).min(hi - 1e-15 * cfg.scale());
    let g = |c: f64| probe(cfg, ri, ro, c).map(|q| q.g);
    let (mut fa, mut fb) = (g(a)?, g(b)?);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    let mut side = 0;
    for _ in 0..200 {
        let mut m = (a * fb - b * fa) / (fb - fa);
        if !(m > a && m < b) {
            m = 0.5 * (a + b);
        }
        if m <= a || m >= b {
            break;
        }
        let fm = g(m)?;
        if fm == 0.0 {
            return Some(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = m;
            fb = fm;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(a.abs()) {
            break;
        }
    }
    Some(0.5 * (a + b))
}

/// `Γ_{s,λ}(S)` in closed form: the closing while `r_in <= r2`, a transversal
/// set or S1 while `r_in <= r1`, and ∅ beyond.
pub fn gamma_region(cfg: &TwoBallConfig, p: &EnergyParams) -> Region {
    let ri = p.r_in();
    if ri <= cfg.r2() {
        cfg.closing_region(p.r_out()).expect("positive closing radius")
    } else if ri <= cfg.r1() {
        match solve_transversal(cfg, p) {
            Ok(Some(g)) => transversal_region(cfg, &g),
            _ => cfg.ball_region(Ball::One),
        }
    } else {
        Region::empty()
    }
}

#[derive(Debug, Clone)]
pub struct GammaRaster {
    pub bitmap: Bitmap,
    pub iterations: usize,
}

/// Raster fixed point of `X^k = Open_{r_in}(Y^{k−1})`,
/// `Y^k = Close_{r_out}(X^k ∩ S)` from `Y^0 = Close_{r_out}(S)`.
pub fn gamma_iterative(
    cfg: &TwoBallConfig,
    p: &EnergyParams,
    h: f64,
    max_iter: usize,
) -> Result<GammaRaster, TransversalError> {
    let grid = Grid::around(cfg, h, 4.0 * h)?;
    gamma_iterative_on(cfg, p, grid, max_iter)
}

pub fn gamma_iterative_on(
    cfg: &TwoBallConfig,
    p: &EnergyParams,
    grid: Grid,
    max_iter: usize,
) -> Result<GammaRaster, TransversalError> {
    let s_bits = raster_datum(cfg, grid)?;
    let (ri, ro) = (p.r_in(), p.r_out());
    if ri.is_infinite() {
        return Ok(GammaRaster { bitmap: Bitmap::empty(grid), iterations: 0 });
    }
    let mut y = morph(&s_bits, MorphOp::Close, ro)?;
    for k in 1..=max_iter {
        let x = morph(&y, MorphOp::Open, ri)?;
        let next = morph(&x.and(&s_bits)?, MorphOp::Close, ro)?;
        if next == y {
            return Ok(GammaRaster { bitmap: y, iterations: k });
        }
        y = next;
    }
    Err(TransversalError::NoConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::region_energy;

    fn cfg(r1: f64, r2: f64, d: f64) -> TwoBallConfig {
        TwoBallConfig::new(r1, r2, d).unwrap()
    }

    fn params(s: f64, l: f64) -> EnergyParams {
        EnergyParams::new(s, l).unwrap()
    }

    #[test]
    fn lens_limits() {
        assert_eq!(lens_area(1.0, 0.5, 2.0), 0.0);
        assert!((lens_area(1.0, 0.5, 0.2) - PI * 0.25).abs() < 1e-15);
        // two unit circles at distance 1: 2π/3 − √3/2
        assert!((lens_area(1.0, 1.0, 1.0) - (2.0 * PI / 3.0 - 3f64.sqrt() / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn tangent_curves_geometry() {
        let c = cfg(1.0, 0.3, 0.02);
        let (ri, ro) = (0.25, 2.0);
        for t in [0.1, 0.5, 1.2] {
            let (gl, gr) = tangent_curves(&c, ri, ro, t).unwrap();
            assert!((gl.norm() - (c.r1() + ro)).abs() < 1e-14);
            // γ_r sits at distance r_in + r_out from an inner centre whose
            // circle meets ∂S2 in direction t.
            let cc = -(ri * t.cos() + (c.r2() * c.r2() - (ri * t.sin()).powi(2)).sqrt());
            let inner = Point::new(c.center_dist() + cc, 0.0);
            assert!((gr.dist(inner) - (ri + ro)).abs() < 1e-14);
            let pt = Point::polar(inner, ri, t);
            assert!((pt.dist(c.center2()) - c.r2()).abs() < 1e-14);
        }
        let (_, gr) = tangent_curves(&c, ri, ro, 1e-9).unwrap();
        assert!((gr.x - ro - (c.center_dist() - c.r2())).abs() < 1e-8);
        assert!(tangent_curves(&c, 0.3, ro, 0.5 * PI).is_ok());
        assert!(matches!(tangent_curves(&c, 0.4, ro, 1.4), Err(TransversalError::DomainError(_))));
    }

    #[test]
    fn brute_force_tangency_of_left_curve() {
        let c = cfg(1.2, 1.0, 0.05);
        let ro = 0.7;
        let (gl, _) = tangent_curves(&c, 0.5, ro, 0.8).unwrap();
        let n = 1_000_000;
        let dmin = (0..n)
            .map(|k| Point::polar(Point::ORIGIN, c.r1(), TAU * k as f64 / n as f64).dist(gl))
            .fold(f64::INFINITY, f64::min);
        assert!((dmin - ro).abs() < 1e-8);
    }

    // Reference values from an independent prototype (bracketing in the
    // half-span parameter, Green's area summed piece by piece).
    #[test]
    fn transversal_matches_reference() {
        let c = cfg(1.2, 1.0, 0.05);
        for (s, l, perim, area, area_in) in [
            (0.3, 0.5, 9.266423040380104, 5.977314619572508, 5.591117759521314),
            (0.1, 0.6, 8.556159924110178, 5.43996355766728, 5.0932250339087375),
            (0.0, 0.6, 8.067586243027074, 4.998880908139714, 4.776489464844121),
            (0.2, 0.2, 7.605656268681045, 4.561832303502326, 4.534579428386315),
        ] {
            let p = params(s, l);
            let g = solve_transversal(&c, &p).unwrap().expect("transversal set");
            let reg = transversal_region(&c, &g);
            assert!((reg.perimeter - perim).abs() < 1e-9, "{s} {l}: {}", reg.perimeter);
            assert!((reg.area() - area).abs() < 1e-9, "{s} {l}: {}", reg.area());
            assert!((reg.area_in - area_in).abs() < 1e-9, "{s} {l}: {}", reg.area_in);
            reg.check_closed().unwrap();
            assert!(reg.max_tangent_jump() < 1e-8, "{}", reg.max_tangent_jump());
            let (a, len) = reg.loop_measures();
            assert!((len - reg.perimeter).abs() < 1e-10 && (a - reg.area()).abs() < 1e-12);
            assert_eq!(g.outer_center.is_none(), s == 0.0);
        }
        assert!(solve_transversal(&c, &params(0.5, 0.55)).unwrap().is_none());
        assert!(solve_transversal(&c, &params(0.6, 0.3)).unwrap().is_none());
    }

    #[test]
    fn membership_routes_agree_on_transversal() {
        let c = cfg(1.2, 1.0, 0.05);
        for (s, l) in [(0.3, 0.5), (0.0, 0.6)] {
            let g = solve_transversal(&c, &params(s, l)).unwrap().unwrap();
            let reg = transversal_region(&c, &g);
            let mut state = 99u64;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            for _ in 0..20000 {
                let q = Point::new(-1.3 + 4.8 * next(), -1.3 + 2.6 * next());
                assert_eq!(reg.contains(q), reg.contains_by_loops(q).unwrap(), "{q:?}");
            }
        }
    }

    #[test]
    fn transversal_beats_ball1_when_it_should() {
        let c = cfg(1.0, 0.3, 0.02);
        // Γ at s = 0 just below the collapse level: a transversal set with
        // lower energy than S1.
        let p = params(0.0, 0.34);
        let g = gamma_region(&c, &p);
        assert!(matches!(g.kind, RegionKind::Transversal { .. }), "{:?}", g.kind);
        assert!(region_energy(&g, &p) < region_energy(&c.ball_region(Ball::One), &p));
    }

    #[test]
    fn raster_gamma_matches_transversal() {
        let c = cfg(1.2, 1.0, 0.05);
        let h = 1.0 / 128.0;
        let p = params(0.3, 0.5);
        let res = gamma_iterative(&c, &p, h, 50).unwrap();
        let exact = crate::oracle_raster::raster_region(&gamma_region(&c, &p), res.bitmap.grid).unwrap();
        let dh = crate::oracle_raster::boundary_hausdorff(&res.bitmap, &exact).unwrap();
        assert!(dh <= 3.0 * h, "{dh}");
    }

    #[test]
    fn family_agrees_with_direct_solve() {
        for (r1, r2, d, l) in [(1.2, 1.0, 0.05, 0.6), (1.0, 0.3, 0.02, 0.2), (2.0, 0.5, 0.05, 0.4)] {
            let c = cfg(r1, r2, d);
            let fam = GammaFamily::new(&c, l, 0.0, 0.9, 64);
            for k in 0..400 {
                let s = 0.9 * (k as f64 + 0.37) / 400.0;
                let direct = solve_transversal(&c, &params(s, l)).unwrap();
                let fast = fam.geometry(s);
                match (direct, fast) {
                    (None, None) => {}
                    (Some(a), Some(b)) => assert!((a.offset - b.offset).abs() < 1e-12, "{s}: {} {}", a.offset, b.offset),
                    (a, b) => panic!("{r1} {r2} {d} {l} s={s}: {a:?} vs {b:?}"),
                }
            }
        }
    }

    #[test]
    fn gamma_regimes() {
        let c = cfg(1.2, 1.0, 0.05);
        let p = params(0.5, 0.4); // r_in = 0.8 <= r2
        let g = gamma_region(&c, &p);
        let cl = c.closing_region(p.r_out()).unwrap();
        assert_eq!(g.perimeter, cl.perimeter);
        assert_eq!(g.area_out, cl.area_out);
        assert_eq!(gamma_region(&c, &params(0.5, 0.7)).kind, RegionKind::Empty);
        // no transversal in the figure configuration: Γ collapses to S1
        assert_eq!(gamma_region(&c, &params(0.5, 0.52)).kind, RegionKind::Ball1);
    }

    #[test]
    fn raster_gamma_collapses_to_ball1() {
        let c = cfg(1.2, 1.0, 0.05);
        let h = 1.0 / 128.0;
        let res = gamma_iterative(&c, &params(0.5, 0.52), h, 50).unwrap();
        let ball = crate::oracle_raster::raster_region(&c.ball_region(Ball::One), res.bitmap.grid).unwrap();
        assert!(crate::oracle_raster::boundary_hausdorff(&res.bitmap, &ball).unwrap() <= 2.0 * h);
        let none = gamma_iterative(&c, &params(0.5, 0.7), h, 50).unwrap();
        assert!(none.bitmap.is_empty());
    }

    #[test]
    fn raster_gamma_equals_closing_for_small_inner_radius() {
        let c = cfg(1.2, 1.0, 0.05);
        let h = 1.0 / 128.0;
        let p = params(0.25, 0.3);
        let res = gamma_iterative(&c, &p, h, 50).unwrap();
        assert!(res.iterations <= 3);
        let cl = crate::oracle_raster::raster_region(&c.closing_region(p.r_out()).unwrap(), res.bitmap.grid).unwrap();
        assert!(crate::oracle_raster::boundary_hausdorff(&res.bitmap, &cl).unwrap() <= 2.0 * h);
    }

    #[test]
    fn level_one_is_rejected() {
        let c = cfg(1.2, 1.0, 0.05);
        assert!(solve_transversal(&c, &params(1.0, 0.3)).is_err());
    }
}
