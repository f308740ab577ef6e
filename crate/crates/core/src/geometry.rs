//! The two-ball datum `S = S1 ∪ S2` and the arc-bounded regions that compete
//! as minimizers, with closed-form perimeter and area.
//!
//! Frame: `S1` is centred at the origin, `S2` at `(D, 0)` with
//! `D = r1 + d + r2`, and `r1 >= r2`.  Every region is symmetric about the
//! x-axis, which several constructions below exploit by working in the upper
//! half-plane only.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("radius must be positive and finite, got {0}")]
    NonPositiveRadius(f64),
    #[error("gap must be non-negative and finite, got {0}")]
    NegativeGap(f64),
    #[error("boundary loop {0} is not closed")]
    MalformedBoundary(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(center: Point, radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point::new(center.x + radius * c, center.y + radius * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Reflection in the x-axis.
    pub fn mirror(self) -> Self {
        Point::new(self.x, -self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// `x - sin x`, accurate for small `x` where the direct difference cancels.
pub(crate) fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    } else {
        x - x.sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Ccw,
    Cw,
}

/// Circular arc traversed from `start` to `end` (radians).  `end > start`
/// means counter-clockwise.  Boundary loops keep the region on their left,
/// so a clockwise arc is a concave piece of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arc {
    pub center: Point,
    pub radius: f64,
    pub start: f64,
    pub end: f64,
}

impl Arc {
    pub fn new(center: Point, radius: f64, start: f64, end: f64) -> Self {
        Arc { center, radius, start, end }
    }

    pub fn orientation(&self) -> Orientation {
        if self.end >= self.start {
            Orientation::Ccw
        } else {
            Orientation::Cw
        }
    }

    pub fn span(&self) -> f64 {
        (self.end - self.start).abs()
    }

    pub fn point_at(&self, t: f64) -> Point {
        Point::polar(self.center, self.radius, t)
    }

    /// Whether direction `t` (around the centre) lies on the arc.
    pub fn covers_angle(&self, t: f64) -> bool {
        let off = match self.orientation() {
            Orientation::Ccw => (t - self.start).rem_euclid(TAU),
            Orientation::Cw => (self.start - t).rem_euclid(TAU),
        };
        off <= self.span() || self.span() >= TAU
    }

    fn distance_to(&self, p: Point) -> f64 {
        let v = p - self.center;
        if v.norm() > 0.0 && self.covers_angle(v.angle()) {
            (v.norm() - self.radius).abs()
        } else {
            p.dist(self.point_at(self.start)).min(p.dist(self.point_at(self.end)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Piece {
    Arc(Arc),
    Segment(Point, Point),
}

impl Piece {
    pub fn start(&self) -> Point {
        match self {
            Piece::Arc(a) => a.point_at(a.start),
            Piece::Segment(p, _) => *p,
        }
    }

    pub fn end(&self) -> Point {
        match self {
            Piece::Arc(a) => a.point_at(a.end),
            Piece::Segment(_, q) => *q,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Piece::Arc(a) => a.radius * a.span(),
            Piece::Segment(p, q) => p.dist(*q),
        }
    }

    /// `∫ x dy − y dx` along the piece: the chord's contribution plus the signed
    /// circular segment, which stays accurate for huge radii.
    pub fn green(&self) -> f64 {
        let chord = self.start().cross(self.end());
        match self {
            Piece::Arc(a) => chord + a.radius * a.radius * x_minus_sin(a.end - a.start),
            Piece::Segment(..) => chord,
        }
    }

    /// Unit tangent in the direction of travel at the start / end.
    pub fn tangents(&self) -> (Point, Point) {
        match self {
            Piece::Arc(a) => {
                let sgn = if a.orientation() == Orientation::Ccw { 1.0 } else { -1.0 };
                let t = |th: f64| Point::new(-th.sin() * sgn, th.cos() * sgn);
                (t(a.start), t(a.end))
            }
            Piece::Segment(p, q) => {
                let v = *q - *p;
                let u = v * (1.0 / v.norm());
                (u, u)
            }
        }
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        match self {
            Piece::Arc(a) => a.distance_to(p),
            Piece::Segment(a, b) => segment_distance(p, *a, *b),
        }
    }

    /// Number of crossings of the ray `o + t·dir`, `t > 0`.
    fn ray_crossings(&self, o: Point, dir: Point) -> usize {
        match self {
            Piece::Segment(a, b) => {
                let e = *b - *a;
                let den = dir.cross(e);
                if den == 0.0 {
                    return 0;
                }
                let w = *a - o;
                let t = w.cross(e) / den;
                let u = w.cross(dir) / den;
                usize::from(t > 0.0 && (0.0..1.0).contains(&u))
            }
            Piece::Arc(arc) => {
                let w = o - arc.center;
                let b = w.dot(dir);
                let c = w.dot(w) - arc.radius * arc.radius;
                let disc = b * b - c;
                if disc <= 0.0 {
                    return 0;
                }
                let sq = disc.sqrt();
                [-b - sq, -b + sq]
                    .into_iter()
                    .filter(|&t| t > 0.0)
                    .filter(|&t| {
                        let q = o + dir * t - arc.center;
                        arc.covers_angle(q.angle())
                    })
                    .count()
            }
        }
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let e = b - a;
    let l2 = e.dot(e);
    let t = if l2 > 0.0 { ((p - a).dot(e) / l2).clamp(0.0, 1.0) } else { 0.0 };
    p.dist(a + e * t)
}

/// Simple polygon membership with boundary points counted as inside.
fn in_polygon(p: Point, poly: &[Point], eps: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if segment_distance(p, a, b) <= eps {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x > p.x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Which ball of the datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Ball {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoBallConfig {
    r1: f64,
    r2: f64,
    d: f64,
}

/// Tangent-circle construction of the closing neck (upper half).  For
/// `radius = ∞` this degenerates to the external tangent of the hull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neck {
    pub radius: f64,
    /// Centre of the upper neck circle (unused when `radius` is infinite).
    pub center: Point,
    /// Polar angle of the tangency point on ∂S1, around c1.
    pub theta1: f64,
    /// Polar angle of the tangency point on ∂S2, around c2.
    pub phi2: f64,
    /// Angular span of each neck arc.
    pub beta: f64,
    pub t1: Point,
    pub t2: Point,
}

impl TwoBallConfig {
    /// Validates and brings the datum into the canonical frame (`r1 >= r2`).
    pub fn new(r1: f64, r2: f64, d: f64) -> Result<Self, GeometryError> {
        for r in [r1, r2] {
            if !(r.is_finite() && r > 0.0) {
                return Err(GeometryError::NonPositiveRadius(r));
            }
        }
        if !(d.is_finite() && d >= 0.0) {
            return Err(GeometryError::NegativeGap(d));
        }
        let (r1, r2) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
        Ok(TwoBallConfig { r1, r2, d })
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Distance between the centres.
    pub fn center_dist(&self) -> f64 {
        self.r1 + self.d + self.r2
    }

    pub fn center1(&self) -> Point {
        Point::ORIGIN
    }

    pub fn center2(&self) -> Point {
        Point::new(self.center_dist(), 0.0)
    }

    pub fn radius(&self, which: Ball) -> f64 {
        match which {
            Ball::One => self.r1,
            Ball::Two => self.r2,
        }
    }

    pub fn center(&self, which: Ball) -> Point {
        match which {
            Ball::One => self.center1(),
            Ball::Two => self.center2(),
        }
    }

    /// (perimeter, area) of one ball.
    pub fn ball_measures(&self, which: Ball) -> (f64, f64) {
        let r = self.radius(which);
        (TAU * r, PI * r * r)
    }

    pub fn perimeter_s(&self) -> f64 {
        TAU * (self.r1 + self.r2)
    }

    pub fn area_s(&self) -> f64 {
        PI * (self.r1 * self.r1 + self.r2 * self.r2)
    }

    pub fn in_s(&self, p: Point) -> bool {
        p.dist(self.center1()) <= self.r1 || p.dist(self.center2()) <= self.r2
    }

    /// Length scale used for geometric tolerances.
    pub fn scale(&self) -> f64 {
        self.center_dist() + self.r1 + self.r2
    }

    /// Bounding box `(xmin, ymin, xmax, ymax)` of the convex hull.
    pub fn hull_bbox(&self) -> (f64, f64, f64, f64) {
        (-self.r1, -self.r1, self.center_dist() + self.r2, self.r1)
    }

    pub fn neck(&self, radius: f64) -> Neck {
        let (r1, r2, dd) = (self.r1, self.r2, self.center_dist());
        if radius.is_infinite() {
            let phi = (dd * dd - (r1 - r2).powi(2)).sqrt().atan2(r1 - r2);
            let u = Point::polar(Point::ORIGIN, 1.0, phi);
            return Neck {
                radius,
                center: Point::new(f64::NAN, f64::NAN),
                theta1: phi,
                phi2: phi,
                beta: 0.0,
                t1: u * r1,
                t2: self.center2() + u * r2,
            };
        }
        let a = r1 + radius;
        let b = r2 + radius;
        // Triangle (c1, c2, P) with sides a, b, D; the difference a² − b² is
        // expanded to avoid cancellation for large radii.  The height comes
        // from Heron's formula, whose factors s − a = r2 + d/2,
        // s − b = r1 + d/2 and s − D = radius − d/2 are exact even when the
        // radius is far below r1 (nearly touching balls).
        let xp = ((r1 - r2) * (a + b) + dd * dd) / (2.0 * dd);
        let half_d = 0.5 * self.d;
        let heron = (r1 + r2 + radius + half_d) * (r2 + half_d) * (r1 + half_d) * (radius - half_d).max(0.0);
        let yp = 2.0 * heron.sqrt() / dd;
        let theta1 = yp.atan2(xp);
        let phi2 = yp.atan2(xp - dd);
        let beta = (dd * yp).atan2(yp * yp - xp * (dd - xp));
        Neck {
            radius,
            center: Point::new(xp, yp),
            theta1,
            phi2,
            beta,
            t1: Point::new(xp, yp) * (r1 / a),
            t2: self.center2() + Point::new(xp - dd, yp) * (r2 / b),
        }
    }

    /// Whether `Close_r(S)` is a single component.
    pub fn closing_connected(&self, r: f64) -> bool {
        if self.d == 0.0 || r.is_infinite() {
            return true;
        }
        if r <= 0.5 * self.d {
            return false;
        }
        let n = self.neck(r);
        // Once the neck centre has moved past c2 the tangent circle can no
        // longer reach the gap.
        n.center.x > self.center_dist() || n.center.y >= r
    }

    /// Smallest radius for which the closing is connected (`R_c`).
    pub fn connectivity_radius(&self) -> f64 {
        if self.d == 0.0 {
            return 0.0;
        }
        let mut lo = 0.5 * self.d;
        let mut hi = self.d.max(1e-300);
        while !self.closing_connected(hi) {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-12 * hi.max(1e-300) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.closing_connected(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// (perimeter, |co(S)|) of the convex hull.
    pub fn hull_measures(&self) -> (f64, f64) {
        let h = self.closing_measures(f64::INFINITY);
        (h.0, self.area_s() + h.1)
    }

    pub fn hull_perimeter(&self) -> f64 {
        self.hull_measures().0
    }

    pub fn hull_area(&self) -> f64 {
        self.hull_measures().1
    }

    /// (perimeter, area outside S) of the connected closing of radius `r`
    /// (`r = ∞` gives the hull).  Only meaningful when the closing is
    /// connected.
    pub fn closing_measures(&self, r: f64) -> (f64, f64) {
        let n = self.neck(r);
        let (r1, r2, dd) = (self.r1, self.r2, self.center_dist());
        let (arc_len, segment) = if r.is_infinite() {
            (n.t1.dist(n.t2), 0.0)
        } else {
            (r * n.beta, 0.5 * r * r * x_minus_sin(n.beta))
        };
        let perimeter = r1 * (TAU - 2.0 * n.theta1) + 2.0 * r2 * n.phi2 + 2.0 * arc_len;
        let quad = 0.5 * (dd * n.t2.y + n.t2.x * n.t1.y - n.t1.x * n.t2.y);
        // π − φ2 taken directly: φ2 is within rounding of π when the balls
        // nearly touch and the neck is tiny
        let psi2 = if r.is_infinite() { PI - n.phi2 } else { n.center.y.atan2(dd - n.center.x) };
        let half = quad - 0.5 * r1 * r1 * n.theta1 - 0.5 * r2 * r2 * psi2 - segment;
        (perimeter, 2.0 * half.max(0.0))
    }

    /// `P(Close_r) + |Close_r \ S| / r`, the closing's share of the energy
    /// balance that defines R1 and R2 (equals `P(co(S))` at `r = ∞`).
    pub fn closing_balance(&self, r: f64) -> f64 {
        let (p, out) = self.closing_measures(r);
        if r.is_infinite() {
            p
        } else {
            p + out / r
        }
    }

    pub fn ball_region(&self, which: Ball) -> Region {
        let (c, r) = (self.center(which), self.radius(which));
        let (p, a) = self.ball_measures(which);
        Region {
            kind: match which {
                Ball::One => RegionKind::Ball1,
                Ball::Two => RegionKind::Ball2,
            },
            loops: vec![vec![Piece::Arc(Arc::new(c, r, 0.0, TAU))]],
            perimeter: p,
            area_in: a,
            area_out: 0.0,
            shape: Shape::Disks(vec![(c, r)]),
            eps: self.eps(),
        }
    }

    pub fn union_region(&self) -> Region {
        let mut loops = Vec::new();
        let mut disks = Vec::new();
        for b in [Ball::One, Ball::Two] {
            let (c, r) = (self.center(b), self.radius(b));
            loops.push(vec![Piece::Arc(Arc::new(c, r, 0.0, TAU))]);
            disks.push((c, r));
        }
        Region {
            kind: RegionKind::UnionBalls,
            loops,
            perimeter: self.perimeter_s(),
            area_in: self.area_s(),
            area_out: 0.0,
            shape: Shape::Disks(disks),
            eps: self.eps(),
        }
    }

    pub fn empty_region(&self) -> Region {
        Region::empty()
    }

    /// `Close_r(S)`; `r = ∞` yields the convex hull.  Below the connectivity
    /// radius the two balls are returned unchanged (the small fillets a
    /// disconnected closing adds near the axis are not represented).
    pub fn closing_region(&self, r: f64) -> Result<Region, GeometryError> {
        if r.is_nan() || r <= 0.0 {
            return Err(GeometryError::NonPositiveRadius(r));
        }
        if !self.closing_connected(r) {
            return Ok(self.union_region());
        }
        let n = self.neck(r);
        let (c1, c2) = (self.center1(), self.center2());
        let (r1, r2) = (self.r1, self.r2);
        let (lower, upper) = if r.is_infinite() {
            (
                Piece::Segment(n.t1.mirror(), n.t2.mirror()),
                Piece::Segment(n.t2, n.t1),
            )
        } else {
            let pc = n.center;
            (
                Piece::Arc(Arc::new(pc.mirror(), r, PI - n.theta1, PI - n.phi2)),
                Piece::Arc(Arc::new(pc, r, n.phi2 - PI, n.theta1 - PI)),
            )
        };
        let loops = vec![vec![
            Piece::Arc(Arc::new(c1, r1, n.theta1, TAU - n.theta1)),
            lower,
            Piece::Arc(Arc::new(c2, r2, -n.phi2, n.phi2)),
            upper,
        ]];
        let (perimeter, area_out) = self.closing_measures(r);
        Ok(Region {
            kind: RegionKind::Closing { radius: r },
            loops,
            perimeter,
            area_in: self.area_s(),
            area_out,
            shape: Shape::Bridged(self.neck_bridge(&n)),
            eps: self.eps(),
        })
    }

    fn neck_bridge(&self, n: &Neck) -> Bridge {
        Bridge {
            left: (self.center1(), self.r1),
            right: Sector { center: self.center2(), radius: self.r2, half_angle: PI },
            quad: [self.center1(), self.center2(), n.t2, n.t1],
            hole: n.radius.is_finite().then_some((n.center, n.radius)),
        }
    }

    /// Membership in `Close_r(S)` without building the boundary (`None`
    /// below the connectivity radius, where the closing is taken to be S).
    pub(crate) fn closing_bridge(&self, r: f64) -> Option<Bridge> {
        self.closing_connected(r).then(|| self.neck_bridge(&self.neck(r)))
    }

    pub(crate) fn eps(&self) -> f64 {
        1e-12 * self.scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum RegionKind {
    Empty,
    Ball1,
    Ball2,
    UnionBalls,
    Closing { radius: f64 },
    Transversal { r_in: f64, r_out: f64 },
}

impl RegionKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegionKind::Empty => "empty",
            RegionKind::Ball1 => "ball1",
            RegionKind::Ball2 => "ball2",
            RegionKind::UnionBalls => "union",
            RegionKind::Closing { .. } => "closing",
            RegionKind::Transversal { .. } => "transversal",
        }
    }
}

/// Disk sector `{|x − c| <= radius, |arg(x − c)| <= half_angle}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Sector {
    pub center: Point,
    pub radius: f64,
    pub half_angle: f64,
}

/// A left disk and a right sector joined through the upper quadrilateral
/// `quad` (and its mirror image) minus an excluded disk.  Covers closings,
/// the hull and transversal sets.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Bridge {
    pub left: (Point, f64),
    pub right: Sector,
    pub quad: [Point; 4],
    pub hole: Option<(Point, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Shape {
    Disks(Vec<(Point, f64)>),
    Bridged(Bridge),
}

impl Bridge {
    pub(crate) fn contains(&self, p: Point, eps: f64) -> bool {
        if p.dist(self.left.0) <= self.left.1 + eps {
            return true;
        }
        let s = &self.right;
        let v = p - s.center;
        if v.norm() <= s.radius + eps && (v.y.abs().atan2(v.x) <= s.half_angle + 1e-12 || v.norm() <= eps) {
            return true;
        }
        let q = Point::new(p.x, p.y.abs());
        in_polygon(q, &self.quad, eps) && self.hole.is_none_or(|(c, r)| q.dist(c) >= r - eps)
    }
}

impl Shape {
    pub(crate) fn contains(&self, p: Point, eps: f64) -> bool {
        match self {
            Shape::Disks(ds) => ds.iter().any(|&(c, r)| p.dist(c) <= r + eps),
            Shape::Bridged(b) => b.contains(p, eps),
        }
    }
}

/// A candidate minimizer: closed set bounded by arc/segment loops (outer
/// loops counter-clockwise), with exact measures split along S.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub kind: RegionKind,
    pub loops: Vec<Vec<Piece>>,
    pub perimeter: f64,
    /// `|X ∩ S|`
    pub area_in: f64,
    /// `|X \ S|`
    pub area_out: f64,
    pub(crate) shape: Shape,
    pub(crate) eps: f64,
}

impl Region {
    pub fn empty() -> Self {
        Region {
            kind: RegionKind::Empty,
            loops: Vec::new(),
            perimeter: 0.0,
            area_in: 0.0,
            area_out: 0.0,
            shape: Shape::Disks(Vec::new()),
            eps: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.kind == RegionKind::Empty
    }

    pub fn area(&self) -> f64 {
        self.area_in + self.area_out
    }

    /// Exact membership of the closed region.
    pub fn contains(&self, p: Point) -> bool {
        self.shape.contains(p, self.eps)
    }

    /// Membership from the boundary loops alone (ray crossing parity), as an
    /// independent route to [`Region::contains`].  Boundary points count as
    /// inside.
    pub fn contains_by_loops(&self, p: Point) -> Result<bool, GeometryError> {
        self.check_closed()?;
        let tol = self.eps.max(1e-12);
        if self.loops.iter().flatten().any(|pc| pc.distance_to(p) <= tol) {
            return Ok(true);
        }
        // An irrational direction keeps the ray off vertices and tangencies
        // for all but a null set of query points.
        let dir = Point::polar(Point::ORIGIN, 1.0, 0.618_033_988_749_894_9);
        let n: usize = self.loops.iter().flatten().map(|pc| pc.ray_crossings(p, dir)).sum();
        Ok(n % 2 == 1)
    }

    pub fn check_closed(&self) -> Result<(), GeometryError> {
        let tol = 1e3 * self.eps.max(1e-12);
        for (i, lp) in self.loops.iter().enumerate() {
            for k in 0..lp.len() {
                let next = &lp[(k + 1) % lp.len()];
                if lp[k].end().dist(next.start()) > tol {
                    return Err(GeometryError::MalformedBoundary(i));
                }
            }
        }
        Ok(())
    }

    /// Largest angle between consecutive unit tangents over all junctions;
    /// zero for a C¹ boundary.
    pub fn max_tangent_jump(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for lp in &self.loops {
            for k in 0..lp.len() {
                let out = lp[k].tangents().1;
                let inn = lp[(k + 1) % lp.len()].tangents().0;
                worst = worst.max(out.cross(inn).atan2(out.dot(inn)).abs());
            }
        }
        worst
    }

    /// Area and length recomputed from the boundary loops.
    pub fn loop_measures(&self) -> (f64, f64) {
        let pieces = self.loops.iter().flatten();
        let area = 0.5 * pieces.clone().map(Piece::green).sum::<f64>();
        let length = pieces.map(Piece::length).sum();
        (area, length)
    }

    /// Bounding box `(xmin, ymin, xmax, ymax)`; `None` for the empty region.
    pub fn bbox(&self) -> Option<(f64, f64, f64, f64)> {
        let mut pts = Vec::new();
        for pc in self.loops.iter().flatten() {
            pts.push(pc.start());
            pts.push(pc.end());
            if let Piece::Arc(a) = pc {
                for k in 0..4 {
                    let t = k as f64 * 0.5 * PI;
                    if a.covers_angle(t) {
                        pts.push(a.point_at(t));
                    }
                }
            }
        }
        let first = pts.first()?;
        Some(pts.iter().fold((first.x, first.y, first.x, first.y), |(a, b, c, d), p| {
            (a.min(p.x), b.min(p.y), c.max(p.x), d.max(p.y))
        }))
    }

    pub fn arcs(&self) -> impl Iterator<Item = &Arc> {
        self.loops.iter().flatten().filter_map(|p| match p {
            Piece::Arc(a) => Some(a),
            Piece::Segment(..) => None,
        })
    }
}
