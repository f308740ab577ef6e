//! Numerical ROF oracle: minimizes `TV(u) + (1/2λ)Σ(u − f)²` on a grid with
//! the accelerated primal–dual scheme of Chambolle and Pock, warm-started
//! from coarser grids.
//!
//! Two discretizations of the total variation are available: the isotropic
//! forward-difference one, and the upwind one of Chambolle, Levine and
//! Lucier, which keeps edges sharp in every direction (the forward one
//! smears edges running along the anti-diagonal over a couple of pixels).

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, TwoBallConfig};
use crate::oracle_raster::{Bitmap, Grid, RasterError};
use crate::oracle_raster::raster_region;
use crate::solver::{average_u, Field, Solution, SolverError};
use crate::thresholds::Thresholds;

#[derive(Debug, Error)]
pub enum TvError {
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("datum has non-finite samples")]
    NonFinite,
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// `|∇u|` with `∇u = (u[i+1] − u[i], u[j+1] − u[j]) / h`.
    Forward,
    /// `|((u − u[i±1])⁺, (u − u[j±1])⁺)| / h`, four one-sided differences.
    Upwind,
}

impl Stencil {
    fn components(self) -> usize {
        match self {
            Stencil::Forward => 2,
            Stencil::Upwind => 4,
        }
    }

    /// Operator norm bound of the difference operator times `h`.
    fn norm(self) -> f64 {
        match self {
            Stencil::Forward => 8f64.sqrt(),
            Stencil::Upwind => 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverSettings {
    pub max_iters: usize,
    /// Relative change of u between checkpoints below which we stop.
    pub tol: f64,
    pub check_every: usize,
    /// Initial primal step as a fraction of `1/L` (`L` the norm of the
    /// difference operator); the dual step is chosen so that `τσL² = 1`.
    pub tau0: f64,
    /// Acceleration uses strong convexity `gamma·(1/λ)`, `gamma ∈ [0, 1]`;
    /// zero keeps the steps fixed.
    pub gamma: f64,
    /// Warm start from a 2× coarser grid while both sides stay even and at
    /// least `coarsest` pixels; each coarser level may take twice the
    /// iterations of the one above.
    pub multilevel: bool,
    pub coarsest: usize,
    pub stencil: Stencil,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iters: 200_000,
            tol: 1e-7,
            check_every: 50,
            tau0: 5.0,
            gamma: 0.1,
            multilevel: true,
            coarsest: 48,
            stencil: Stencil::Forward,
        }
    }
}

impl SolverSettings {
    fn validate(&self) -> Result<(), TvError> {
        let bad = |m: String| Err(TvError::InvalidSettings(m));
        if !(self.tol > 0.0) {
            return bad(format!("tol = {}", self.tol));
        }
        if self.check_every == 0 || self.max_iters == 0 {
            return bad("zero iteration counts".into());
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return bad(format!("tau0 = {}", self.tau0));
        }
        if !(self.gamma >= 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma = {} outside [0, 1]", self.gamma));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RofOutput {
    /// Lowest-energy iterate seen at a checkpoint.
    pub u: Field,
    /// Flux across the edge to the right / upper neighbour, paired with `u`
    /// so that `u − λ div z ≈ f` (backward-difference divergence).
    pub zx: Array2<f64>,
    pub zy: Array2<f64>,
    /// Largest pointwise norm of the scheme's dual variable (≤ 1).
    pub dual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Discrete energy `h²(TV(u) + (1/2λ)Σ(u − f)²)`, TV per the stencil.
    pub energy: f64,
}

struct Dims {
    nx: usize,
    ny: usize,
    h: f64,
    stencil: Stencil,
}

impl Dims {
    fn n(&self) -> usize {
        self.nx * self.ny
    }

    fn m(&self) -> usize {
        self.stencil.components()
    }

    /// The difference components at pixel `k`, times `h` (zero where a
    /// neighbour is missing).
    fn diffs(&self, u: &[f64], k: usize) -> [f64; 4] {
        let nx = self.nx;
        let (i, j) = (k % nx, k / nx);
        let right = if i + 1 < nx { u[k + 1] - u[k] } else { 0.0 };
        let up = if j + 1 < self.ny { u[k + nx] - u[k] } else { 0.0 };
        match self.stencil {
            Stencil::Forward => [right, up, 0.0, 0.0],
            Stencil::Upwind => {
                let left = if i > 0 { u[k] - u[k - 1] } else { 0.0 };
                let down = if j > 0 { u[k] - u[k - nx] } else { 0.0 };
                [-right, left, -up, down]
            }
        }
    }

    fn tv_at(&self, u: &[f64], k: usize) -> f64 {
        let d = self.diffs(u, k);
        let t = match self.stencil {
            Stencil::Forward => d[0].hypot(d[1]),
            Stencil::Upwind => d.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt(),
        };
        t / self.h
    }

    /// Flux form of the dual variable `p` (pixel-major, `m` per pixel).
    fn flux(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, nx) = (self.n(), self.nx);
        match self.stencil {
            Stencil::Forward => ((0..n).map(|k| p[2 * k]).collect(), (0..n).map(|k| p[2 * k + 1]).collect()),
            Stencil::Upwind => {
                let mut zx = vec![0.0; n];
                let mut zy = vec![0.0; n];
                for k in 0..n {
                    if k % nx + 1 < nx {
                        zx[k] = p[4 * (k + 1) + 1] - p[4 * k];
                    }
                    if k / nx + 1 < self.ny {
                        zy[k] = p[4 * (k + nx) + 3] - p[4 * k + 2];
                    }
                }
                (zx, zy)
            }
        }
    }

    fn dual_sup(&self, p: &[f64]) -> f64 {
        p.chunks(self.m()).map(|q| q.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    fn energy(&self, u: &[f64], f: &[f64], lambda: f64) -> f64 {
        let nx = self.nx;
        let (tv, fid) = (0..self.ny)
            .into_par_iter()
            .map(|j| {
                let (mut tv, mut fid) = (0.0, 0.0);
                for k in j * nx..(j + 1) * nx {
                    tv += self.tv_at(u, k);
                    fid += (u[k] - f[k]).powi(2);
                }
                (tv, fid)
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        tv + fid / (2.0 * lambda)
    }

    /// `p ← proj(p + σKū)`: unit ball per pixel, intersected with the
    /// positive orthant for the upwind stencil.  Components whose
    /// neighbour is missing are pinned to zero.
    fn dual_step(&self, ubar: &[f64], p: &mut [f64], sigma: f64) {
        let (nx, ny, m) = (self.nx, self.ny, self.m());
        let s = sigma / self.h;
        let stencil = self.stencil;
        p.par_chunks_mut(nx * m).enumerate().for_each(|(j, row)| {
            let at = |i: usize| j * nx + i;
            let (bottom, top) = (j == 0, j + 1 == ny);
            match stencil {
                Stencil::Forward => {
                    let edge = |i: usize, q: &mut [f64]| {
                        let k = at(i);
                        let gx = if i + 1 < nx { q[0] + s * (ubar[k + 1] - ubar[k]) } else { 0.0 };
                        let gy = if top { 0.0 } else { q[1] + s * (ubar[k + nx] - ubar[k]) };
                        let norm = (gx * gx + gy * gy).sqrt().max(1.0);
                        q[0] = gx / norm;
                        q[1] = gy / norm;
                    };
                    if top || nx < 2 {
                        for i in 0..nx {
                            edge(i, &mut row[2 * i..2 * i + 2]);
                        }
                        return;
                    }
                    let (inner, last) = row.split_at_mut(2 * (nx - 1));
                    for (i, q) in inner.chunks_exact_mut(2).enumerate() {
                        let k = at(i);
                        let gx = q[0] + s * (ubar[k + 1] - ubar[k]);
                        let gy = q[1] + s * (ubar[k + nx] - ubar[k]);
                        let norm = (gx * gx + gy * gy).sqrt().max(1.0);
                        q[0] = gx / norm;
                        q[1] = gy / norm;
                    }
                    edge(nx - 1, last);
                }
                Stencil::Upwind => {
                    let edge = |i: usize, q: &mut [f64]| {
                        let k = at(i);
                        let a = if i + 1 < nx { (q[0] - s * (ubar[k + 1] - ubar[k])).max(0.0) } else { 0.0 };
                        let b = if i > 0 { (q[1] + s * (ubar[k] - ubar[k - 1])).max(0.0) } else { 0.0 };
                        let c = if top { 0.0 } else { (q[2] - s * (ubar[k + nx] - ubar[k])).max(0.0) };
                        let d = if bottom { 0.0 } else { (q[3] + s * (ubar[k] - ubar[k - nx])).max(0.0) };
                        let norm = (a * a + b * b + c * c + d * d).sqrt().max(1.0);
                        q.copy_from_slice(&[a / norm, b / norm, c / norm, d / norm]);
                    };
                    if top || bottom || nx < 3 {
                        for i in 0..nx {
                            edge(i, &mut row[4 * i..4 * i + 4]);
                        }
                        return;
                    }
                    edge(0, &mut row[..4]);
                    edge(nx - 1, &mut row[4 * (nx - 1)..]);
                    let base = at(0);
                    let (uc, ul, ur) = (&ubar[base + 1..base + nx - 1], &ubar[base..base + nx - 2], &ubar[base + 2..base + nx]);
                    let (uu, ud) = (&ubar[base + nx + 1..base + 2 * nx - 1], &ubar[base - nx + 1..base - 1]);
                    for (t, q) in row[4..4 * (nx - 1)].chunks_exact_mut(4).enumerate() {
                        let c0 = uc[t];
                        let a = (q[0] + s * (c0 - ur[t])).max(0.0);
                        let b = (q[1] + s * (c0 - ul[t])).max(0.0);
                        let c = (q[2] + s * (c0 - uu[t])).max(0.0);
                        let d = (q[3] + s * (c0 - ud[t])).max(0.0);
                        let norm = (a * a + b * b + c * c + d * d).sqrt().max(1.0);
                        let inv = 1.0 / norm;
                        q[0] = a * inv;
                        q[1] = b * inv;
                        q[2] = c * inv;
                        q[3] = d * inv;
                    }
                }
            }
        });
    }

    /// Proximal step of `(1/2λ)|u − f|²` at the interior pixels, plus
    /// extrapolation into `ubar`; the outer ring stays at zero.
    #[allow(clippy::too_many_arguments)]
    fn primal_step(&self, f: &[f64], p: &[f64], u: &mut [f64], ubar: &mut [f64], lambda: f64, tau: f64, theta: f64) {
        let (nx, ny) = (self.nx, self.ny);
        let t = tau / self.h;
        let (wl, wf) = (lambda / (lambda + tau), tau / (lambda + tau));
        let stencil = self.stencil;
        u.par_chunks_mut(nx).zip(ubar.par_chunks_mut(nx)).enumerate().for_each(|(j, (ru, rb))| {
            if j == 0 || j + 1 == ny {
                return;
            }
            let base = j * nx;
            for i in 1..nx - 1 {
                let k = base + i;
                // −Kᵀp at k
                let d = match stencil {
                    Stencil::Forward => p[2 * k] - p[2 * k - 2] + p[2 * k + 1] - p[2 * (k - nx) + 1],
                    Stencil::Upwind => {
                        p[4 * k - 4] + p[4 * k + 5] + p[4 * (k - nx) + 2] + p[4 * (k + nx) + 3] - (p[4 * k] + p[4 * k + 1] + p[4 * k + 2] + p[4 * k + 3])
                    }
                };
                let old = ru[i];
                let new = wl * (old + t * d) + wf * f[k];
                ru[i] = new;
                rb[i] = new + theta * (new - old);
            }
        });
    }
}

/// The discrete ROF energy `h²(TV(u) + (1/2λ)Σ(u − f)²)` of `u` for datum
/// `f`, comparable to the continuous functional.
pub fn rof_energy(u: &Field, f: &Field, lambda: f64, stencil: Stencil) -> Result<f64, TvError> {
    if u.grid != f.grid {
        return Err(RasterError::GridMismatch.into());
    }
    let g = u.grid;
    let dims = Dims { nx: g.nx, ny: g.ny, h: g.h, stencil };
    let (uu, ff) = (u.values.as_slice().expect("standard layout"), f.values.as_slice().expect("standard layout"));
    Ok(g.h * g.h * dims.energy(uu, ff, lambda))
}

/// Backward-difference divergence of an edge flux.
fn divergence(zx: &[f64], zy: &[f64], nx: usize, ny: usize, h: f64, out: &mut [f64]) {
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for (i, o) in row.iter_mut().enumerate() {
            let k = j * nx + i;
            let mut d = 0.0;
            if i + 1 < nx {
                d += zx[k];
            }
            if i > 0 {
                d -= zx[k - 1];
            }
            if j + 1 < ny {
                d += zy[k];
            }
            if j > 0 {
                d -= zy[k - nx];
            }
            *o = d / h;
        }
    });
}

struct State {
    u: Vec<f64>,
    /// Dual variable, pixel-major.
    p: Vec<f64>,
}

fn solve_level(f: &[f64], dims: &Dims, lambda: f64, st: &mut State, s: &SolverSettings) -> (usize, bool, f64) {
    let l = s.stencil.norm() / dims.h;
    let mut tau = s.tau0 / l;
    let mut sigma = 1.0 / (tau * l * l);
    let gamma = s.gamma / lambda;
    let mut ubar = st.u.clone();
    let mut checkpoint = st.u.clone();
    let mut best = (dims.energy(&st.u, f, lambda), st.u.clone(), st.p.clone());
    let mut iters = 0;
    let mut converged = false;
    while iters < s.max_iters {
        dims.dual_step(&ubar, &mut st.p, sigma);
        let theta = 1.0 / (1.0 + 2.0 * gamma * tau).sqrt();
        dims.primal_step(f, &st.p, &mut st.u, &mut ubar, lambda, tau, theta);
        tau *= theta;
        sigma /= theta;
        iters += 1;
        if iters % s.check_every == 0 {
            let e = dims.energy(&st.u, f, lambda);
            if e <= best.0 {
                best = (e, st.u.clone(), st.p.clone());
            }
            let (mut dn, mut un) = (0.0, 0.0);
            for (a, b) in st.u.iter().zip(&checkpoint) {
                dn += (a - b) * (a - b);
                un += a * a;
            }
            checkpoint.copy_from_slice(&st.u);
            if dn.sqrt() <= s.tol * un.sqrt().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }
    let e = dims.energy(&st.u, f, lambda);
    if e > best.0 {
        st.u = best.1;
        st.p = best.2;
    }
    (iters, converged, e.min(best.0))
}

fn clear_ring(u: &mut [f64], nx: usize, ny: usize) {
    for j in 0..ny {
        for i in 0..nx {
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                u[j * nx + i] = 0.0;
            }
        }
    }
}

fn coarsen(f: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let (cx, cy) = (nx / 2, ny / 2);
    let mut out = vec![0.0; cx * cy];
    for j in 0..cy {
        for i in 0..cx {
            let k = 2 * j * nx + 2 * i;
            out[j * cx + i] = 0.25 * (f[k] + f[k + 1] + f[k + nx] + f[k + nx + 1]);
        }
    }
    out
}

/// Piecewise-constant prolongation of a `cx·cy` field with `m` values per
/// pixel.
fn refine(c: &[f64], cx: usize, cy: usize, m: usize) -> Vec<f64> {
    let nx = 2 * cx;
    let mut out = vec![0.0; 4 * c.len()];
    for j in 0..2 * cy {
        for i in 0..nx {
            let (dst, src) = ((j * nx + i) * m, ((j / 2) * cx + i / 2) * m);
            out[dst..dst + m].copy_from_slice(&c[src..src + m]);
        }
    }
    out
}

fn solve_multilevel(f: &[f64], dims: &Dims, lambda: f64, s: &SolverSettings) -> (State, usize, bool, f64) {
    let (nx, ny) = (dims.nx, dims.ny);
    let mut st = if s.multilevel && nx % 2 == 0 && ny % 2 == 0 && nx.min(ny) >= 2 * s.coarsest {
        let fc = coarsen(f, nx, ny);
        // a coarse iteration costs a quarter of a fine one: allow twice as many
        let coarse = SolverSettings { max_iters: s.max_iters.saturating_mul(2), ..*s };
        let cd = Dims { nx: nx / 2, ny: ny / 2, h: 2.0 * dims.h, stencil: dims.stencil };
        let (cs, ..) = solve_multilevel(&fc, &cd, lambda, &coarse);
        State { u: refine(&cs.u, cd.nx, cd.ny, 1), p: refine(&cs.p, cd.nx, cd.ny, dims.m()) }
    } else {
        State { u: f.to_vec(), p: vec![0.0; dims.m() * dims.n()] }
    };
    clear_ring(&mut st.u, nx, ny);
    let (it, conv, e) = solve_level(f, dims, lambda, &mut st, s);
    (st, it, conv, e)
}

/// Approximate minimizer of the discrete ROF energy for datum `f`.  Returns
/// the best iterate found, truncated to the range of `f` and 0; `converged`
/// is false when the iteration cap was hit first.
///
/// The outermost pixel ring is held at zero: a homogeneous Dirichlet
/// condition, so the box acts as a window onto the whole-plane problem
/// whenever the solution vanishes near the box edge.  (A Neumann box
/// would preserve the mean of `f` and lift the background.)
pub fn rof_solve(f: &Field, lambda: f64, settings: &SolverSettings) -> Result<RofOutput, TvError> {
    settings.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(TvError::InvalidLambda(lambda));
    }
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(TvError::NonFinite);
    }
    let g = f.grid;
    let dims = Dims { nx: g.nx, ny: g.ny, h: g.h, stencil: settings.stencil };
    let fv = f.values.as_standard_layout().iter().copied().collect::<Vec<_>>();
    let (mut st, iterations, converged, _) = solve_multilevel(&fv, &dims, lambda, settings);
    // truncating to the range of f lowers both terms of the energy, so the
    // discrete maximum principle can be enforced for free
    let (lo, hi) = fv.iter().fold((0.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    st.u.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    let e = dims.energy(&st.u, &fv, lambda);
    let (zx, zy) = dims.flux(&st.p);
    let shape = (g.ny, g.nx);
    Ok(RofOutput {
        u: Field { grid: g, values: Array2::from_shape_vec(shape, st.u).expect("shape") },
        zx: Array2::from_shape_vec(shape, zx).expect("shape"),
        zy: Array2::from_shape_vec(shape, zy).expect("shape"),
        dual_sup: dims.dual_sup(&st.p),
        iterations,
        converged,
        energy: g.h * g.h * e,
    })
}

/// Relative L² norm of `u − λ div z − f` over the free pixels (normalized
/// by `‖f‖`) and the sup norm of the dual variable.
pub fn euler_lagrange_residual(out: &RofOutput, f: &Field, lambda: f64) -> (f64, f64) {
    let g = f.grid;
    let (zx, zy) = (out.zx.as_slice().expect("standard layout"), out.zy.as_slice().expect("standard layout"));
    let mut div = vec![0.0; g.len()];
    divergence(zx, zy, g.nx, g.ny, g.h, &mut div);
    let (mut r, mut n) = (0.0, 0.0);
    let (uv, fvals) = (out.u.values.as_slice().expect("standard layout"), f.values.as_slice().expect("standard layout"));
    for j in 1..g.ny.saturating_sub(1) {
        for i in 1..g.nx - 1 {
            let k = j * g.nx + i;
            r += (uv[k] - lambda * div[k] - fvals[k]).powi(2);
            n += fvals[k] * fvals[k];
        }
    }
    (r.sqrt() / n.sqrt().max(f64::MIN_POSITIVE), out.dual_sup)
}

/// Superlevel set `{u >= s}`.
pub fn level_set(u: &Field, s: f64) -> Bitmap {
    Bitmap { grid: u.grid, bits: u.values.mapv(|v| v >= s) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldDistance {
    /// `‖a − b‖₂ / ‖b‖₂` (infinite if `b = 0` and `a ≠ b`).
    pub l2_rel: f64,
    /// `h‖a − b‖₂`, the continuous L² norm.
    pub l2: f64,
    pub linf: f64,
}

pub fn field_distance(a: &Field, b: &Field) -> Result<FieldDistance, RasterError> {
    if a.grid != b.grid {
        return Err(RasterError::GridMismatch);
    }
    let (mut d2, mut b2, mut linf) = (0.0, 0.0, 0.0f64);
    for (x, y) in a.values.iter().zip(b.values.iter()) {
        d2 += (x - y).powi(2);
        b2 += y * y;
        linf = linf.max((x - y).abs());
    }
    let l2_rel = if d2 == 0.0 { 0.0 } else { d2.sqrt() / b2.sqrt() };
    Ok(FieldDistance { l2_rel, l2: a.grid.h * d2.sqrt(), linf })
}

/// Box for the numerical solve: co(S) padded by at least `pad` on all
/// sides.  The solution is supported in co(S), so with the zero outer ring
/// a pad of a few pixels suffices.  Pixel counts are rounded up to
/// multiples of 32 so the multilevel start can halve the grid repeatedly.
pub fn solver_grid(cfg: &TwoBallConfig, h: f64, pad: f64) -> Result<Grid, RasterError> {
    let g = Grid::around(cfg, h, pad)?;
    let (nx, ny) = (g.nx.next_multiple_of(32), g.ny.next_multiple_of(32));
    let ox = g.ox - 0.5 * (nx - g.nx) as f64 * h;
    let oy = g.oy - 0.5 * (ny - g.ny) as f64 * h;
    Grid::new(ox, oy, h, nx, ny)
}

/// Pixel averages of `f` from a `k×k` midpoint rule (`k = 1`: point
/// samples at pixel centres).
pub fn cell_average(grid: Grid, k: usize, f: impl Fn(Point) -> f64 + Sync) -> Field {
    let (h, k) = (grid.h, k.max(1));
    let w = 1.0 / (k * k) as f64;
    Field::from_fn(grid, |c| {
        let mut acc = 0.0;
        for a in 0..k {
            for b in 0..k {
                let dx = ((a as f64 + 0.5) / k as f64 - 0.5) * h;
                let dy = ((b as f64 + 0.5) / k as f64 - 0.5) * h;
                acc += f(Point::new(c.x + dx, c.y + dy));
            }
        }
        acc * w
    })
}

/// χ_S averaged over each pixel (`k×k` subsamples).
pub fn datum_field(cfg: &TwoBallConfig, grid: Grid, k: usize) -> Field {
    cell_average(grid, k, |p| if cfg.in_s(p) { 1.0 } else { 0.0 })
}

/// Levels, as fractions of the top level, at which superlevel sets are
/// compared; away from the breakpoints of every regime.
pub const COMPARE_LEVELS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, Serialize)]
pub struct ExactComparison {
    pub lambda: f64,
    /// `‖u_h − u_λ‖₂ / ‖u_λ‖₂`; when `u_λ = 0`, `‖u_h‖₂ / ‖f‖₂` instead.
    pub l2_rel: f64,
    /// `(s, |{u_h >= s} Δ C_{s,λ}| / |S|)` at [`COMPARE_LEVELS`] of the top level.
    pub levels: Vec<(f64, f64)>,
    pub iterations: usize,
    pub converged: bool,
    pub numeric_max: f64,
}

impl ExactComparison {
    pub fn worst_level(&self) -> f64 {
        self.levels.iter().map(|l| l.1).fold(0.0, f64::max)
    }
}

/// Solves ROF numerically on a padded grid of step `h` and compares with the
/// explicit solution; datum and reference are `k×k` cell averages.
pub fn compare_with_exact(
    cfg: &TwoBallConfig,
    th: &Thresholds,
    lambda: f64,
    h: f64,
    k: usize,
    settings: &SolverSettings,
) -> Result<ExactComparison, TvError> {
    let grid = solver_grid(cfg, h, 0.1)?;
    let f = datum_field(cfg, grid, k);
    let out = rof_solve(&f, lambda, settings)?;
    let exact = average_u(cfg, th, lambda, grid, k)?;
    let l2_rel = if exact.max() > 0.0 {
        field_distance(&out.u, &exact)?.l2_rel
    } else {
        let norm = |v: &Field| v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
        norm(&out.u) / norm(&f)
    };
    let sol = Solution::new(cfg, th, lambda)?;
    let mut levels = Vec::new();
    if sol.s_top() > 0.0 {
        for frac in COMPARE_LEVELS {
            let s = frac * sol.s_top();
            let reference = raster_region(&sol.region(s), grid)?;
            let diff = level_set(&out.u, s).symmetric_difference_area(&reference)?;
            levels.push((s, diff / cfg.area_s()));
        }
    }
    Ok(ExactComparison {
        lambda,
        l2_rel,
        levels,
        iterations: out.iterations,
        converged: out.converged,
        numeric_max: out.u.max(),
    })
}
