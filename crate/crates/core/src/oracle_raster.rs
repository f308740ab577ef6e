//! Raster oracle: bitmaps, exact-EDT morphology with disk structuring
//! elements, Cauchy–Crofton perimeter estimates and brute-force energies.
//!
//! Grids are cell-centred: pixel `(i, j)` has centre
//! `(ox + (i + ½)h, oy + (j + ½)h)` and is stored at `bits[[j, i]]`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use ndarray::Array2;
use ndarray::parallel::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::energy::EnergyParams;
use crate::geometry::{Point, Region, TwoBallConfig};

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("grid box [{xmin}, {xmax}] x [{ymin}, {ymax}] does not cover the shape")]
    BoxTooSmall { xmin: f64, ymin: f64, xmax: f64, ymax: f64 },
    #[error("structuring element radius {r} is below the grid step {h}")]
    StructuringElementTooSmall { r: f64, h: f64 },
    #[error("bitmaps live on different grids")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("malformed image: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub ox: f64,
    pub oy: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(ox: f64, oy: f64, h: f64, nx: usize, ny: usize) -> Result<Self, RasterError> {
        if !(h.is_finite() && h > 0.0) || !ox.is_finite() || !oy.is_finite() {
            return Err(RasterError::InvalidGrid(format!("h={h}, origin=({ox}, {oy})")));
        }
        if nx == 0 || ny == 0 {
            return Err(RasterError::InvalidGrid(format!("{nx} x {ny} pixels")));
        }
        Ok(Grid { ox, oy, h, nx, ny })
    }

    /// Smallest grid with step `h` whose box starts at `(xmin, ymin)` and
    /// covers `(xmax, ymax)`.
    pub fn covering(xmin: f64, ymin: f64, xmax: f64, ymax: f64, h: f64) -> Result<Self, RasterError> {
        let nx = ((xmax - xmin) / h - 1e-9).ceil().max(1.0) as usize;
        let ny = ((ymax - ymin) / h - 1e-9).ceil().max(1.0) as usize;
        Grid::new(xmin, ymin, h, nx, ny)
    }

    /// Grid over the hull of the datum padded by `pad`, snapped so that the
    /// symmetry axis falls on pixel edges.
    pub fn around(cfg: &TwoBallConfig, h: f64, pad: f64) -> Result<Self, RasterError> {
        let (x0, _, x1, y1) = cfg.hull_bbox();
        let half = ((y1 + pad) / h).ceil();
        let x0 = ((x0 - pad) / h).floor() * h;
        let nx = ((x1 + pad - x0) / h).ceil() as usize;
        Grid::new(x0, -half * h, h, nx, 2 * half as usize)
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(self.ox + (i as f64 + 0.5) * self.h, self.oy + (j as f64 + 0.5) * self.h)
    }

    pub fn xmax(&self) -> f64 {
        self.ox + self.nx as f64 * self.h
    }

    pub fn ymax(&self) -> f64 {
        self.oy + self.ny as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixel_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn covers(&self, xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> bool {
        let tol = 1e-9 * self.h;
        self.ox <= xmin + tol && self.oy <= ymin + tol && self.xmax() >= xmax - tol && self.ymax() >= ymax - tol
    }

    pub fn require_cover(&self, bbox: (f64, f64, f64, f64)) -> Result<(), RasterError> {
        let (xmin, ymin, xmax, ymax) = bbox;
        if self.covers(xmin, ymin, xmax, ymax) {
            Ok(())
        } else {
            Err(RasterError::BoxTooSmall { xmin: self.ox, ymin: self.oy, xmax: self.xmax(), ymax: self.ymax() })
        }
    }

    /// The same grid refined by `k` in each direction.
    pub fn refined(&self, k: usize) -> Grid {
        Grid { h: self.h / k as f64, nx: self.nx * k, ny: self.ny * k, ..*self }
    }

    fn padded(&self, k: usize) -> Grid {
        Grid {
            ox: self.ox - k as f64 * self.h,
            oy: self.oy - k as f64 * self.h,
            nx: self.nx + 2 * k,
            ny: self.ny + 2 * k,
            ..*self
        }
    }

    fn same_as(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (self.ox - other.ox).abs() <= 1e-9 * self.h
            && (self.oy - other.oy).abs() <= 1e-9 * self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bitmap {
    pub grid: Grid,
    pub bits: Array2<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Dilate,
    Erode,
    Open,
    Close,
}

impl Bitmap {
    pub fn empty(grid: Grid) -> Self {
        Bitmap { grid, bits: Array2::from_elem((grid.ny, grid.nx), false) }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> bool + Sync) -> Self {
        let mut bits = Array2::from_elem((grid.ny, grid.nx), false);
        bits.axis_iter_mut(ndarray::Axis(0)).into_par_iter().enumerate().for_each(|(j, mut row)| {
            for (i, b) in row.iter_mut().enumerate() {
                *b = f(grid.center(i, j));
            }
        });
        Bitmap { grid, bits }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.pixel_area()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    fn zip_with(&self, other: &Bitmap, f: impl Fn(bool, bool) -> bool) -> Result<Bitmap, RasterError> {
        if !self.grid.same_as(&other.grid) {
            return Err(RasterError::GridMismatch);
        }
        let mut bits = self.bits.clone();
        ndarray::Zip::from(&mut bits).and(&other.bits).for_each(|a, &b| *a = f(*a, b));
        Ok(Bitmap { grid: self.grid, bits })
    }

    pub fn and(&self, other: &Bitmap) -> Result<Bitmap, RasterError> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Bitmap) -> Result<Bitmap, RasterError> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn xor(&self, other: &Bitmap) -> Result<Bitmap, RasterError> {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn minus(&self, other: &Bitmap) -> Result<Bitmap, RasterError> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Bitmap {
        Bitmap { grid: self.grid, bits: self.bits.mapv(|b| !b) }
    }

    pub fn is_subset_of(&self, other: &Bitmap) -> Result<bool, RasterError> {
        Ok(self.minus(other)?.is_empty())
    }

    /// Area of the symmetric difference.
    pub fn symmetric_difference_area(&self, other: &Bitmap) -> Result<f64, RasterError> {
        Ok(self.xor(other)?.area())
    }

    /// Set pixels with an unset 4-neighbour (pixels beyond the grid count as
    /// unset).
    pub fn boundary(&self) -> Bitmap {
        let (ny, nx) = self.bits.dim();
        let b = &self.bits;
        let get = |j: isize, i: isize| j >= 0 && i >= 0 && (j as usize) < ny && (i as usize) < nx && b[[j as usize, i as usize]];
        let mut out = Array2::from_elem((ny, nx), false);
        for j in 0..ny {
            for i in 0..nx {
                if b[[j, i]] {
                    let (ji, ii) = (j as isize, i as isize);
                    out[[j, i]] = !(get(ji - 1, ii) && get(ji + 1, ii) && get(ji, ii - 1) && get(ji, ii + 1));
                }
            }
        }
        Bitmap { grid: self.grid, bits: out }
    }

    /// Number of 4-connected components of the set.
    pub fn components(&self) -> usize {
        let (ny, nx) = self.bits.dim();
        let mut seen = Array2::from_elem((ny, nx), false);
        let mut stack = Vec::new();
        let mut n = 0;
        for j in 0..ny {
            for i in 0..nx {
                if !self.bits[[j, i]] || seen[[j, i]] {
                    continue;
                }
                n += 1;
                seen[[j, i]] = true;
                stack.push((j, i));
                while let Some((a, b)) = stack.pop() {
                    let nbrs = [(a.wrapping_sub(1), b), (a + 1, b), (a, b.wrapping_sub(1)), (a, b + 1)];
                    for (c, d) in nbrs {
                        if c < ny && d < nx && self.bits[[c, d]] && !seen[[c, d]] {
                            seen[[c, d]] = true;
                            stack.push((c, d));
                        }
                    }
                }
            }
        }
        n
    }

    fn pad(&self, k: usize, fill: bool) -> Bitmap {
        let grid = self.grid.padded(k);
        let mut bits = Array2::from_elem((grid.ny, grid.nx), fill);
        bits.slice_mut(ndarray::s![k..k + self.grid.ny, k..k + self.grid.nx]).assign(&self.bits);
        Bitmap { grid, bits }
    }

    fn crop(&self, k: usize) -> Bitmap {
        let grid = Grid {
            ox: self.grid.ox + k as f64 * self.grid.h,
            oy: self.grid.oy + k as f64 * self.grid.h,
            nx: self.grid.nx - 2 * k,
            ny: self.grid.ny - 2 * k,
            h: self.grid.h,
        };
        let bits = self.bits.slice(ndarray::s![k..k + grid.ny, k..k + grid.nx]).to_owned();
        Bitmap { grid, bits }
    }

    /// Binary PGM (P5, maxval 255, set = 255), top row first.  The grid is
    /// kept in a header comment so that the image can be read back.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<(), RasterError> {
        let g = &self.grid;
        write!(w, "P5\n# tvball-grid {:e} {:e} {:e}\n{} {}\n255\n", g.ox, g.oy, g.h, g.nx, g.ny)?;
        let mut data = Vec::with_capacity(g.len());
        for j in (0..g.ny).rev() {
            data.extend(self.bits.row(j).iter().map(|&b| if b { 255u8 } else { 0 }));
        }
        w.write_all(&data)?;
        Ok(())
    }

    pub fn read_pgm(r: impl BufRead) -> Result<Bitmap, RasterError> {
        let (grid, maxval, data) = read_pgm_raw(r)?;
        if maxval != 255 {
            return Err(RasterError::Format(format!("expected maxval 255, got {maxval}")));
        }
        let mut bits = Array2::from_elem((grid.ny, grid.nx), false);
        for (k, &v) in data.iter().enumerate() {
            let (row, i) = (k / grid.nx, k % grid.nx);
            bits[[grid.ny - 1 - row, i]] = v >= 128;
        }
        Ok(Bitmap { grid, bits })
    }
}

/// Parses a P5 image carrying a `tvball-grid` comment.  Returns the raw
/// sample bytes (big-endian pairs when maxval > 255).
pub(crate) fn read_pgm_raw(mut r: impl BufRead) -> Result<(Grid, u32, Vec<u8>), RasterError> {
    let fmt = |m: &str| RasterError::Format(m.to_string());
    let mut tokens: Vec<String> = Vec::new();
    let mut geo: Option<(f64, f64, f64)> = None;
    while tokens.len() < 4 {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(fmt("truncated header"));
        }
        if let Some(c) = line.trim().strip_prefix('#') {
            let f: Vec<&str> = c.split_whitespace().collect();
            if f.len() == 4 && f[0] == "tvball-grid" {
                let p = |s: &str| s.parse::<f64>().map_err(|_| fmt("bad grid comment"));
                geo = Some((p(f[1])?, p(f[2])?, p(f[3])?));
            }
            continue;
        }
        tokens.extend(line.split_whitespace().map(str::to_string));
    }
    if tokens[0] != "P5" {
        return Err(fmt("not a binary PGM"));
    }
    let n = |s: &str| s.parse::<usize>().map_err(|_| fmt("bad header number"));
    let (nx, ny, maxval) = (n(&tokens[1])?, n(&tokens[2])?, n(&tokens[3])? as u32);
    let (ox, oy, h) = geo.ok_or_else(|| fmt("missing tvball-grid comment"))?;
    let grid = Grid::new(ox, oy, h, nx, ny)?;
    let bytes = if maxval > 255 { 2 } else { 1 };
    let mut data = vec![0u8; nx * ny * bytes];
    r.read_exact(&mut data)?;
    Ok((grid, maxval, data))
}

/// Pixel-centre sampling of a region.
pub fn raster_region(reg: &Region, grid: Grid) -> Result<Bitmap, RasterError> {
    if let Some(bb) = reg.bbox() {
        grid.require_cover(bb)?;
    }
    Ok(Bitmap::from_fn(grid, |p| reg.contains(p)))
}

/// Pixel-centre sampling of the datum S.
pub fn raster_datum(cfg: &TwoBallConfig, grid: Grid) -> Result<Bitmap, RasterError> {
    raster_region(&cfg.union_region(), grid)
}

const EDT_INF: f64 = 1e30;

/// Felzenszwalb–Huttenlocher lower envelope: squared distance transform of
/// the sampled function `f` along one line (`EDT_INF` marks "no site").
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if fq >= EDT_INF {
            continue;
        }
        while let Some(&p) = v.last() {
            let s = ((fq + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= *z.last().expect("paired with v") {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
        if v.is_empty() {
            v.push(q);
            z.push(f64::NEG_INFINITY);
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = EDT_INF);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance (in pixels) from every pixel to the nearest
/// set pixel.
pub fn squared_edt(bits: &Array2<bool>) -> Array2<f64> {
    let (ny, nx) = bits.dim();
    // along x
    let mut rows = Array2::<f64>::zeros((ny, nx));
    rows.axis_iter_mut(ndarray::Axis(0)).into_par_iter().enumerate().for_each(|(j, mut row)| {
        let f: Vec<f64> = bits.row(j).iter().map(|&b| if b { 0.0 } else { EDT_INF }).collect();
        let (mut v, mut z) = (Vec::with_capacity(nx), Vec::with_capacity(nx));
        let out = row.as_slice_mut().expect("standard layout");
        edt_1d(&f, out, &mut v, &mut z);
    });
    // along y, on the transpose so that lines are contiguous
    let mut cols = Array2::<f64>::zeros((nx, ny));
    cols.axis_iter_mut(ndarray::Axis(0)).into_par_iter().enumerate().for_each(|(i, mut col)| {
        let f: Vec<f64> = rows.column(i).to_vec();
        let (mut v, mut z) = (Vec::with_capacity(ny), Vec::with_capacity(ny));
        let out = col.as_slice_mut().expect("standard layout");
        edt_1d(&f, out, &mut v, &mut z);
    });
    cols.reversed_axes().as_standard_layout().to_owned()
}

fn dilate_bits(bits: &Array2<bool>, r_px: f64) -> Array2<bool> {
    let thr = r_px * r_px * (1.0 + 1e-12);
    squared_edt(bits).mapv(|d| d <= thr)
}

fn erode_bits(bits: &Array2<bool>, r_px: f64) -> Array2<bool> {
    let comp = bits.mapv(|b| !b);
    dilate_bits(&comp, r_px).mapv(|b| !b)
}

/// Morphology with the discrete disk `{pixels whose centre is within r}`.
/// Everything outside the grid counts as background; the bitmap is padded by
/// `ceil(r/h) + 2` pixels while operating so nothing is clipped.
pub fn morph(b: &Bitmap, op: MorphOp, r: f64) -> Result<Bitmap, RasterError> {
    let h = b.grid.h;
    if !(r >= h) {
        return Err(RasterError::StructuringElementTooSmall { r, h });
    }
    if r.is_infinite() {
        return Ok(match op {
            MorphOp::Close => hull_fill(b),
            MorphOp::Open | MorphOp::Erode => Bitmap::empty(b.grid),
            MorphOp::Dilate if b.is_empty() => b.clone(),
            MorphOp::Dilate => Bitmap { grid: b.grid, bits: Array2::from_elem(b.bits.dim(), true) },
        });
    }
    let k = (r / h).ceil() as usize + 2;
    let r_px = r / h;
    let p = b.pad(k, false);
    let bits = match op {
        MorphOp::Dilate => dilate_bits(&p.bits, r_px),
        MorphOp::Erode => erode_bits(&p.bits, r_px),
        MorphOp::Open => dilate_bits(&erode_bits(&p.bits, r_px), r_px),
        MorphOp::Close => erode_bits(&dilate_bits(&p.bits, r_px), r_px),
    };
    Ok(Bitmap { grid: p.grid, bits }.crop(k))
}

/// Convex hull (counter-clockwise, no collinear points) by the monotone chain.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point, a: Point, b: Point| (a - o).cross(b - o);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

pub fn polygon_perimeter(poly: &[Point]) -> f64 {
    (0..poly.len()).map(|i| poly[i].dist(poly[(i + 1) % poly.len()])).sum()
}

/// Pixels whose centre lies in the convex hull of the set pixel centres.
pub fn hull_fill(b: &Bitmap) -> Bitmap {
    let g = b.grid;
    let pts: Vec<Point> = b
        .boundary()
        .bits
        .indexed_iter()
        .filter(|(_, &v)| v)
        .map(|((j, i), _)| g.center(i, j))
        .collect();
    let hull = convex_hull(&pts);
    if hull.len() < 3 {
        return b.clone();
    }
    let eps = 1e-9 * g.h;
    Bitmap::from_fn(g, |p| {
        (0..hull.len()).all(|k| (hull[(k + 1) % hull.len()] - hull[k]).cross(p - hull[k]) >= -eps * hull[k].dist(hull[(k + 1) % hull.len()]))
    })
}

/// Lattice directions for the Cauchy–Crofton sum, sorted by angle in [0, π).
const CROFTON_DIRS: [(i64, i64); 16] = [
    (1, 0),
    (3, 1),
    (2, 1),
    (3, 2),
    (1, 1),
    (2, 3),
    (1, 2),
    (1, 3),
    (0, 1),
    (-1, 3),
    (-1, 2),
    (-2, 3),
    (-1, 1),
    (-3, 2),
    (-2, 1),
    (-3, 1),
];

/// Cauchy–Crofton perimeter estimate: for each lattice direction `v`, count
/// set/unset transitions between pixels `p` and `p + v` (lines spaced
/// `h/|v|` apart) and combine with Voronoi weights over angle.
pub fn crofton_perimeter(b: &Bitmap) -> f64 {
    let p = b.pad(4, false);
    let (ny, nx) = p.bits.dim();
    let angles: Vec<f64> = CROFTON_DIRS.iter().map(|&(a, c)| (c as f64).atan2(a as f64)).collect();
    let n = angles.len();
    let mut total = 0.0;
    for (k, &(vx, vy)) in CROFTON_DIRS.iter().enumerate() {
        let prev = if k == 0 { angles[n - 1] - PI } else { angles[k - 1] };
        let next = if k == n - 1 { angles[0] + PI } else { angles[k + 1] };
        let w = 0.5 * (next - prev);
        let (x0, x1) = (vx.min(0).unsigned_abs() as usize, nx - vx.max(0) as usize);
        let (y1, vyu) = (ny - vy as usize, vy as usize);
        let count: usize = (0..y1)
            .into_par_iter()
            .map(|j| {
                let mut c = 0;
                for i in x0..x1 {
                    let q = (i as i64 + vx) as usize;
                    if p.bits[[j, i]] != p.bits[[j + vyu, q]] {
                        c += 1;
                    }
                }
                c
            })
            .sum();
        let len = ((vx * vx + vy * vy) as f64).sqrt();
        total += w * count as f64 * b.grid.h / len;
    }
    0.5 * total
}

/// (Cauchy–Crofton perimeter, pixel-count area).
pub fn raster_measures(b: &Bitmap) -> (f64, f64) {
    (crofton_perimeter(b), b.area())
}

/// `F_{s,λ}` of a bitmap against the rasterized datum.
pub fn raster_energy(b: &Bitmap, s_bits: &Bitmap, p: &EnergyParams) -> Result<f64, RasterError> {
    let inside = b.and(s_bits)?.area();
    let outside = b.minus(s_bits)?.area();
    if b.is_empty() {
        return Ok(0.0);
    }
    Ok(p.energy_of(crofton_perimeter(b), inside, outside))
}

/// Hausdorff distance between the boundary pixel sets of two bitmaps.
pub fn boundary_hausdorff(a: &Bitmap, b: &Bitmap) -> Result<f64, RasterError> {
    if !a.grid.same_as(&b.grid) {
        return Err(RasterError::GridMismatch);
    }
    let (ba, bb) = (a.boundary(), b.boundary());
    match (ba.is_empty(), bb.is_empty()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(f64::INFINITY),
        _ => {}
    }
    let one_sided = |from: &Bitmap, to: &Bitmap| {
        let d = squared_edt(&to.bits);
        ndarray::Zip::from(&from.bits).and(&d).fold(0.0f64, |m, &f, &v| if f { m.max(v) } else { m })
    };
    let d2 = one_sided(&ba, &bb).max(one_sided(&bb, &ba));
    Ok(d2.sqrt() * a.grid.h)
}
