//! Bézier flattening and scanline rasterization.

use crate::error::{Error, Result};
use crate::raster::GrayImage;
use crate::vector::{Point, Segment, Subpath, VectorDoc};

pub const DEFAULT_TOLERANCE: f64 = 0.25;

const MAX_DEPTH: u32 = 18;

/// Closed polyline approximating `sp`; no point is repeated consecutively.
pub fn flatten(sp: &Subpath, tolerance: f64) -> Result<Vec<Point>> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "flattening tolerance must be positive, got {tolerance}"
        )));
    }
    let mut out = vec![sp.start];
    let mut cur = sp.start;
    for seg in &sp.segments {
        match *seg {
            Segment::Line(p) => push_point(&mut out, p),
            Segment::Cubic(a, b, c) => subdivide(&mut out, cur, a, b, c, tolerance, 0),
        }
        cur = seg.end();
    }
    Ok(out)
}

fn push_point(out: &mut Vec<Point>, p: Point) {
    if out.last() != Some(&p) {
        out.push(p);
    }
}

fn dist_to_line(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len = d.x.hypot(d.y);
    if len == 0.0 {
        p.dist(a)
    } else {
        ((p.x - a.x) * d.y - (p.y - a.y) * d.x).abs() / len
    }
}

fn subdivide(out: &mut Vec<Point>, p0: Point, p1: Point, p2: Point, p3: Point, tol: f64, depth: u32) {
    let flat = dist_to_line(p1, p0, p3).max(dist_to_line(p2, p0, p3));
    if flat <= tol || depth >= MAX_DEPTH {
        push_point(out, p3);
        return;
    }
    let p01 = p0.lerp(p1, 0.5);
    let p12 = p1.lerp(p2, 0.5);
    let p23 = p2.lerp(p3, 0.5);
    let p012 = p01.lerp(p12, 0.5);
    let p123 = p12.lerp(p23, 0.5);
    let mid = p012.lerp(p123, 0.5);
    subdivide(out, p0, p01, p012, mid, tol, depth + 1);
    subdivide(out, mid, p123, p23, p3, tol, depth + 1);
}

/// Renders with the default flattening tolerance.
pub fn render(doc: &VectorDoc, width: usize, height: usize) -> Result<GrayImage> {
    render_with(doc, width, height, DEFAULT_TOLERANCE)
}

/// Black inside, white outside. Each path element is filled with the
/// nonzero rule at pixel centres and the fills are unioned.
pub fn render_with(doc: &VectorDoc, width: usize, height: usize, tolerance: f64) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument("render size must be positive".into()));
    }
    let mut data = vec![255u8; width * height];
    let mut rows: Vec<Vec<(f64, i32)>> = vec![Vec::new(); height];
    for path in &doc.paths {
        for r in rows.iter_mut() {
            r.clear();
        }
        for sp in &path.subpaths {
            let poly = flatten(sp, tolerance)?;
            let n = poly.len();
            for i in 0..n {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                add_edge(&mut rows, a, b);
            }
        }
        for (y, row) in rows.iter_mut().enumerate() {
            if row.is_empty() {
                continue;
            }
            row.sort_by(|p, q| p.0.total_cmp(&q.0));
            let line = &mut data[y * width..(y + 1) * width];
            let mut winding = 0;
            for w in 0..row.len() {
                winding += row[w].1;
                if winding == 0 || w + 1 == row.len() {
                    continue;
                }
                let x0 = pixel_from(row[w].0, width);
                let x1 = pixel_from(row[w + 1].0, width);
                for px in &mut line[x0..x1.max(x0)] {
                    *px = 0;
                }
            }
        }
    }
    GrayImage::new(width, height, data)
}

/// First pixel whose centre is at or right of `x`, clamped to the row.
fn pixel_from(x: f64, width: usize) -> usize {
    let c = (x - 0.5).ceil();
    if c <= 0.0 {
        0
    } else if c >= width as f64 {
        width
    } else {
        c as usize
    }
}

/// Records the edge's crossings with every pixel-centre scanline, using
/// the half-open rule `ymin <= yc < ymax`.
fn add_edge(rows: &mut [Vec<(f64, i32)>], a: Point, b: Point) {
    if a.y == b.y {
        return;
    }
    let (lo, hi, dir) = if a.y < b.y { (a, b, 1) } else { (b, a, -1) };
    let first = (lo.y - 0.5).ceil().max(0.0);
    let last = ((hi.y - 0.5).ceil() - 1.0).min(rows.len() as f64 - 1.0);
    if first > last {
        return;
    }
    let slope = (hi.x - lo.x) / (hi.y - lo.y);
    for y in first as usize..=last as usize {
        let yc = y as f64 + 0.5;
        rows[y].push((lo.x + (yc - lo.y) * slope, dir));
    }
}
