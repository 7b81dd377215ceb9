//! Bitmap to Bézier outline tracing in the style of potrace.
//!
//! The stages are exposed individually: [`decompose_paths`] finds the
//! boundary loops, [`best_polygon`] and [`adjust_vertices`] fit a polygon
//! to each loop, [`smooth`] turns it into corners and cubics and
//! [`optimize_curve`] merges runs of cubics.

mod curve;
mod decompose;
mod polygon;

use std::fmt;
use std::str::FromStr;

pub use curve::{corner_alpha, optimize_curve, smooth, Curve, CurveSegment, SegmentKind};
pub use decompose::{decompose_paths, IPoint, PathLoop, Sign};
pub use polygon::{adjust_vertices, best_polygon, longest_straight, pivots, reach, Polygon};

use crate::error::{Error, Result};
use crate::raster::{threshold, Bitmap, GrayImage, DEFAULT_THRESHOLD};
use crate::vector::{PathElement, VectorDoc};

/// How to resolve a corner where two black and two white pixels meet
/// diagonally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TurnPolicy {
    /// Connect black pixels.
    Black,
    /// Connect white pixels.
    White,
    /// Connect the locally more common colour.
    Majority,
    /// Connect the locally less common colour.
    #[default]
    Minority,
}

impl TurnPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            TurnPolicy::Black => "black",
            TurnPolicy::White => "white",
            TurnPolicy::Majority => "majority",
            TurnPolicy::Minority => "minority",
        }
    }
}

impl fmt::Display for TurnPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TurnPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "black" => Ok(TurnPolicy::Black),
            "white" => Ok(TurnPolicy::White),
            "majority" => Ok(TurnPolicy::Majority),
            "minority" => Ok(TurnPolicy::Minority),
            _ => Err(Error::InvalidArgument(format!("unknown turn policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceParams {
    /// Pixels darker than this are black.
    pub threshold: u8,
    /// Loops enclosing fewer pixels are dropped.
    pub turdsize: usize,
    pub turnpolicy: TurnPolicy,
    /// Corner threshold; 0 keeps every vertex sharp.
    pub alphamax: f64,
    pub opticurve: bool,
    pub opttolerance: f64,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            turdsize: 2,
            turnpolicy: TurnPolicy::Minority,
            alphamax: 1.0,
            opticurve: true,
            opttolerance: 0.2,
        }
    }
}

impl TraceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alphamax >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alphamax must be non-negative, got {}",
                self.alphamax
            )));
        }
        if !(self.opttolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "opttolerance must be positive, got {}",
                self.opttolerance
            )));
        }
        Ok(())
    }
}

/// Thresholds and traces a grayscale image.
pub fn trace(img: &GrayImage, params: &TraceParams) -> Result<VectorDoc> {
    trace_bitmap(&threshold(img, params.threshold), params)
}

/// Curve for a single loop, oriented by its sign.
pub fn trace_loop(lp: &PathLoop, params: &TraceParams) -> Result<Curve> {
    let polygon = best_polygon(&lp.points)?;
    let mut vertices = adjust_vertices(&lp.points, &polygon);
    if lp.sign == Sign::Minus {
        vertices.reverse();
    }
    let curve = smooth(&vertices, params.alphamax);
    Ok(if params.opticurve {
        optimize_curve(&curve, params.opttolerance)
    } else {
        curve
    })
}

pub fn trace_bitmap(bmp: &Bitmap, params: &TraceParams) -> Result<VectorDoc> {
    params.validate()?;
    let loops = decompose_paths(bmp, params.turdsize, params.turnpolicy);
    let mut doc = VectorDoc::new(bmp.width() as f64, bmp.height() as f64);
    let owner = group_loops(&loops);
    let mut element_of = vec![usize::MAX; loops.len()];
    for (i, lp) in loops.iter().enumerate() {
        let sub = trace_loop(lp, params)?.to_subpath();
        match owner[i] {
            Some(o) if element_of[o] != usize::MAX => doc.paths[element_of[o]].subpaths.push(sub),
            _ => {
                element_of[i] = doc.paths.len();
                doc.paths.push(PathElement { subpaths: vec![sub] });
            }
        }
    }
    Ok(doc)
}

/// For every hole, the smallest enclosing outer loop it belongs to.
/// Outer loops own themselves (`None`).
pub fn group_loops(loops: &[PathLoop]) -> Vec<Option<usize>> {
    let boxes: Vec<_> = loops.iter().map(PathLoop::bbox).collect();
    loops
        .iter()
        .enumerate()
        .map(|(i, lp)| {
            if lp.sign == Sign::Plus {
                return None;
            }
            let (px, py) = (lp.seed.0 as f64 + 0.5, lp.seed.1 as f64 + 0.5);
            let mut best: Option<usize> = None;
            for (j, other) in loops.iter().enumerate() {
                if j == i || other.sign != Sign::Plus {
                    continue;
                }
                let (x0, y0, x1, y1) = boxes[j];
                if px < x0 as f64 || px > x1 as f64 || py < y0 as f64 || py > y1 as f64 {
                    continue;
                }
                if best.is_some_and(|b| loops[b].area <= other.area) {
                    continue;
                }
                if other.contains(px, py) {
                    best = Some(j);
                }
            }
            best
        })
        .collect()
}
