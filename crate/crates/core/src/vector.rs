//! Vector documents: closed outlines made of line and cubic Bézier
//! segments, in image coordinates (y grows downward, pixel corners on
//! integer coordinates).

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Linear interpolation `self + t (other - self)`.
    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + t * (other.x - self.x), self.y + t * (other.y - self.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
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
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// One drawing command; the start point is the previous segment's end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Line(Point),
    Cubic(Point, Point, Point),
}

impl Segment {
    pub fn end(&self) -> Point {
        match *self {
            Segment::Line(p) => p,
            Segment::Cubic(_, _, p) => p,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> {
        let (arr, n) = match *self {
            Segment::Line(p) => ([p, p, p], 1),
            Segment::Cubic(a, b, c) => ([a, b, c], 3),
        };
        arr.into_iter().take(n)
    }
}

/// A closed outline: move to `start`, follow `segments`, close back.
#[derive(Debug, Clone, PartialEq)]
pub struct Subpath {
    pub start: Point,
    pub segments: Vec<Segment>,
}

impl Subpath {
    pub fn new(start: Point, segments: Vec<Segment>) -> Self {
        Self { start, segments }
    }

    /// An axis-aligned rectangle traced in the given order of corners.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::polygon(&[
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    pub fn polygon(points: &[Point]) -> Self {
        assert!(!points.is_empty(), "polygon needs at least one point");
        Self {
            start: points[0],
            segments: points[1..].iter().map(|&p| Segment::Line(p)).collect(),
        }
    }

    /// The same outline traversed in the opposite direction. The result
    /// always closes explicitly on `start`.
    pub fn reversed(&self) -> Subpath {
        let mut starts = Vec::with_capacity(self.segments.len());
        let mut cur = self.start;
        for s in &self.segments {
            starts.push(cur);
            cur = s.end();
        }
        let mut segments = Vec::with_capacity(self.segments.len() + 1);
        if cur != self.start {
            segments.push(Segment::Line(cur));
        }
        for (s, from) in self.segments.iter().zip(starts).rev() {
            segments.push(match *s {
                Segment::Line(_) => Segment::Line(from),
                Segment::Cubic(c1, c2, _) => Segment::Cubic(c2, c1, from),
            });
        }
        Subpath {
            start: self.start,
            segments,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.start.is_finite() && self.segments.iter().all(|s| s.points().all(Point::is_finite))
    }

    /// Signed area of the control polygon (shoelace); positive is
    /// clockwise on screen since y points down.
    pub fn control_polygon_area(&self) -> f64 {
        let mut pts = vec![self.start];
        for s in &self.segments {
            pts.extend(s.points());
        }
        let n = pts.len();
        (0..n)
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            / 2.0
    }
}

/// One `<path>` element; holes ride along as additional subpaths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathElement {
    pub subpaths: Vec<Subpath>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorDoc {
    pub width: f64,
    pub height: f64,
    pub paths: Vec<PathElement>,
}

impl VectorDoc {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            paths: Vec::new(),
        }
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    pub fn subpaths(&self) -> impl Iterator<Item = &Subpath> {
        self.paths.iter().flat_map(|p| p.subpaths.iter())
    }

    pub fn subpath_count(&self) -> usize {
        self.subpaths().count()
    }

    /// Largest coordinate difference between two structurally identical
    /// documents, or `None` if their structure differs.
    pub fn max_coord_diff(&self, other: &VectorDoc) -> Option<f64> {
        if self.paths.len() != other.paths.len() {
            return None;
        }
        let mut worst = (self.width - other.width)
            .abs()
            .max((self.height - other.height).abs());
        for (p, q) in self.paths.iter().zip(&other.paths) {
            if p.subpaths.len() != q.subpaths.len() {
                return None;
            }
            for (a, b) in p.subpaths.iter().zip(&q.subpaths) {
                if a.segments.len() != b.segments.len() {
                    return None;
                }
                let mut diff = |u: Point, v: Point| {
                    worst = worst.max((u.x - v.x).abs()).max((u.y - v.y).abs());
                };
                diff(a.start, b.start);
                for (s, t) in a.segments.iter().zip(&b.segments) {
                    match (s, t) {
                        (Segment::Line(u), Segment::Line(v)) => diff(*u, *v),
                        (Segment::Cubic(u1, u2, u3), Segment::Cubic(v1, v2, v3)) => {
                            diff(*u1, *v1);
                            diff(*u2, *v2);
                            diff(*u3, *v3);
                        }
                        _ => return None,
                    }
                }
            }
        }
        Some(worst)
    }
}

/// Point on a cubic Bézier at parameter `t`.
pub fn bezier_point(p0: Point, p1: Point, p2: Point, p3: Point, t: f64) -> Point {
    let s = 1.0 - t;
    let (a, b, c, d) = (s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t);
    Point::new(
        a * p0.x + b * p1.x + c * p2.x + d * p3.x,
        a * p0.y + b * p1.y + c * p2.y + d * p3.y,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversing_twice_is_identity() {
        let sp = Subpath::new(
            Point::new(0.0, 0.0),
            vec![
                Segment::Line(Point::new(4.0, 0.0)),
                Segment::Cubic(Point::new(5.0, 1.0), Point::new(5.0, 3.0), Point::new(4.0, 4.0)),
                Segment::Line(Point::new(0.0, 4.0)),
                Segment::Line(Point::new(0.0, 0.0)),
            ],
        );
        let r = sp.reversed();
        assert!(r.control_polygon_area() * sp.control_polygon_area() < 0.0);
        assert_eq!(r.reversed(), sp);
    }

    #[test]
    fn rect_area_sign() {
        assert_eq!(Subpath::rect(0.0, 0.0, 2.0, 3.0).control_polygon_area(), 6.0);
        assert_eq!(Subpath::rect(0.0, 0.0, 2.0, 3.0).reversed().segments.len(), 4);
        assert_eq!(Subpath::rect(0.0, 0.0, 2.0, 3.0).reversed().control_polygon_area(), -6.0);
    }

    #[test]
    fn bezier_endpoints() {
        let (a, b, c, d) = (
            Point::new(0.0, 0.0),
            Point::new(1.0, 2.0),
            Point::new(3.0, 2.0),
            Point::new(4.0, 0.0),
        );
        assert_eq!(bezier_point(a, b, c, d, 0.0), a);
        assert_eq!(bezier_point(a, b, c, d, 1.0), d);
        assert_eq!(bezier_point(a, b, c, d, 0.5), Point::new(2.0, 1.5));
    }
}
