//! Level lines of u_λ as SVG paths: circular arcs become `A` segments with
//! equal radii, straight pieces (s = 0) become `L` segments.  The viewBox is
//! the grid box with the y-axis flipped.

use std::f64::consts::PI;
use std::fmt::Write;

use tvball::geometry::{Orientation, Piece};
use tvball::oracle_raster::Grid;
use tvball::{Point, Region, TwoBallConfig};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn xy(p: Point) -> String {
    format!("{:.9} {:.9}", p.x, -p.y)
}

fn piece_path(out: &mut String, piece: &Piece) {
    match piece {
        Piece::Segment(_, q) => {
            let _ = write!(out, " L {}", xy(*q));
        }
        Piece::Arc(a) => {
            // Flipping y turns counter-clockwise into the negative sweep.
            let sweep = u8::from(a.orientation() == Orientation::Cw);
            // A single `A` cannot close a circle: split into halves.
            let n = (a.span() / PI).ceil().max(1.0) as usize;
            let dt = (a.end - a.start) / n as f64;
            for k in 1..=n {
                let t = a.start + dt * k as f64;
                let large = u8::from(dt.abs() > PI);
                let _ = write!(out, " A {r:.9} {r:.9} 0 {large} {sweep} {}", xy(a.point_at(t)), r = a.radius);
            }
        }
    }
}

pub fn region_path(reg: &Region) -> String {
    let mut out = String::new();
    for lp in &reg.loops {
        let Some(first) = lp.first() else { continue };
        if !out.is_empty() {
            out.push(' ');
        }
        let _ = write!(out, "M {}", xy(first.start()));
        for piece in lp {
            piece_path(&mut out, piece);
        }
        out.push_str(" Z");
    }
    out
}

/// One SVG document: the datum outline plus one path per `(s, region)`.
pub fn level_lines(cfg: &TwoBallConfig, grid: &Grid, lambda: f64, levels: &[(f64, Region)]) -> String {
    let (w, h) = (grid.xmax() - grid.ox, grid.ymax() - grid.oy);
    let stroke = 0.004 * w.max(h);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.9} {:.9} {w:.9} {h:.9}\" width=\"800\" height=\"{:.0}\">",
        grid.ox,
        -grid.ymax(),
        800.0 * h / w
    );
    let _ = writeln!(out, "<title>level lines, lambda = {lambda:.16e}</title>");
    let _ = writeln!(
        out,
        "<path class=\"datum\" d=\"{}\" fill=\"none\" stroke=\"#888888\" stroke-width=\"{stroke:.9}\" stroke-dasharray=\"{:.9}\"/>",
        region_path(&cfg.union_region()),
        3.0 * stroke
    );
    for (k, (s, reg)) in levels.iter().enumerate() {
        if reg.is_empty() {
            continue;
        }
        let _ = writeln!(
            out,
            "<path class=\"level\" data-s=\"{s:.16e}\" data-kind=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{stroke:.9}\"/>",
            reg.kind.name(),
            region_path(reg),
            PALETTE[k % PALETTE.len()]
        );
    }
    out.push_str("</svg>\n");
    out
}
