//! Corner detection, Bézier smoothing and curve optimization.

use crate::vector::{bezier_point, Point, Segment, Subpath};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// Two straight lines meeting at `vertex`.
    Corner,
    /// A cubic with control points `c[0]`, `c[1]`.
    Bezier,
}

/// One curve segment ending at `c[2]`. The segment starts where the
/// previous one ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSegment {
    pub kind: SegmentKind,
    pub c: [Point; 3],
    pub vertex: Point,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curve {
    pub segments: Vec<CurveSegment>,
}

impl Curve {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn corner_count(&self) -> usize {
        self.segments.iter().filter(|s| s.kind == SegmentKind::Corner).count()
    }

    pub fn to_subpath(&self) -> Subpath {
        let start = self.segments.last().map_or(Point::default(), |s| s.c[2]);
        let mut segs = Vec::with_capacity(self.segments.len() * 2);
        for s in &self.segments {
            match s.kind {
                SegmentKind::Corner => {
                    segs.push(Segment::Line(s.vertex));
                    segs.push(Segment::Line(s.c[2]));
                }
                SegmentKind::Bezier => segs.push(Segment::Cubic(s.c[0], s.c[1], s.c[2])),
            }
        }
        Subpath::new(start, segs)
    }

    /// Samples `per_segment + 1` points along each segment.
    pub fn sample(&self, per_segment: usize) -> Vec<Point> {
        let mut out = Vec::new();
        let Some(last) = self.segments.last() else { return out };
        let mut p0 = last.c[2];
        for s in &self.segments {
            for k in 0..=per_segment {
                let t = k as f64 / per_segment as f64;
                out.push(match s.kind {
                    SegmentKind::Bezier => bezier_point(p0, s.c[0], s.c[1], s.c[2], t),
                    SegmentKind::Corner => {
                        if t <= 0.5 {
                            p0.lerp(s.vertex, 2.0 * t)
                        } else {
                            s.vertex.lerp(s.c[2], 2.0 * t - 1.0)
                        }
                    }
                });
            }
            p0 = s.c[2];
        }
        out
    }
}

fn dpara(p0: Point, p1: Point, p2: Point) -> f64 {
    (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y)
}

fn ddenom(p0: Point, p2: Point) -> f64 {
    let rx = -(p2.y - p0.y).signum_or_zero();
    let ry = (p2.x - p0.x).signum_or_zero();
    ry * (p2.x - p0.x) - rx * (p2.y - p0.y)
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

fn cprod(p0: Point, p1: Point, p2: Point, p3: Point) -> f64 {
    (p1.x - p0.x) * (p3.y - p2.y) - (p3.x - p2.x) * (p1.y - p0.y)
}

fn iprod(p0: Point, p1: Point, p2: Point) -> f64 {
    (p1.x - p0.x) * (p2.x - p0.x) + (p1.y - p0.y) * (p2.y - p0.y)
}

fn iprod1(p0: Point, p1: Point, p2: Point, p3: Point) -> f64 {
    (p1.x - p0.x) * (p3.x - p2.x) + (p1.y - p0.y) * (p3.y - p2.y)
}

/// Smoothness parameter of the corner at `b` between neighbours `a`, `c`.
pub fn corner_alpha(a: Point, b: Point, c: Point) -> f64 {
    let denom = ddenom(a, c);
    if denom != 0.0 {
        let dd = (dpara(a, b, c) / denom).abs();
        let alpha = if dd > 1.0 { 1.0 - 1.0 / dd } else { 0.0 };
        alpha / 0.75
    } else {
        4.0 / 3.0
    }
}

/// Turns a closed polygon into a curve: vertices whose alpha reaches
/// `alphamax` become corners, all others smooth cubics.
pub fn smooth(vertices: &[Point], alphamax: f64) -> Curve {
    let m = vertices.len();
    let mut segments = vec![
        CurveSegment {
            kind: SegmentKind::Corner,
            c: [Point::default(); 3],
            vertex: Point::default(),
            alpha: 0.0,
        };
        m
    ];
    for i in 0..m {
        let j = (i + 1) % m;
        let k = (i + 2) % m;
        let (vi, vj, vk) = (vertices[i], vertices[j], vertices[k]);
        let p4 = vk.lerp(vj, 0.5);
        let mut alpha = corner_alpha(vi, vj, vk);
        let seg = &mut segments[j];
        seg.vertex = vj;
        if alpha >= alphamax {
            seg.kind = SegmentKind::Corner;
            seg.c[1] = vj;
            seg.c[2] = p4;
        } else {
            alpha = alpha.clamp(0.55, 1.0);
            seg.kind = SegmentKind::Bezier;
            seg.c[0] = vi.lerp(vj, 0.5 + 0.5 * alpha);
            seg.c[1] = vk.lerp(vj, 0.5 + 0.5 * alpha);
            seg.c[2] = p4;
        }
        seg.alpha = alpha;
    }
    Curve { segments }
}

/// Root in [0, 1] of the parameter where the cubic is parallel to
/// `q1 - q0`, or -1.
fn tangent(p0: Point, p1: Point, p2: Point, p3: Point, q0: Point, q1: Point) -> f64 {
    let a0 = cprod(p0, p1, q0, q1);
    let b0 = cprod(p1, p2, q0, q1);
    let c0 = cprod(p2, p3, q0, q1);
    let a = a0 - 2.0 * b0 + c0;
    let b = -2.0 * a0 + 2.0 * b0;
    let c = a0;
    let d = b * b - 4.0 * a * c;
    if a == 0.0 || d < 0.0 {
        return -1.0;
    }
    let s = d.sqrt();
    let r1 = (-b + s) / (2.0 * a);
    let r2 = (-b - s) / (2.0 * a);
    if (0.0..=1.0).contains(&r1) {
        r1
    } else if (0.0..=1.0).contains(&r2) {
        r2
    } else {
        -1.0
    }
}

struct Opti {
    pen: f64,
    c: [Point; 2],
    s: f64,
    alpha: f64,
}

const COS179: f64 = -0.999_847_695_156_391_2;

/// Best single cubic replacing segments `i+1..=j`, if one fits.
fn opti_penalty(
    seg: &[CurveSegment],
    i: usize,
    j: usize,
    tol: f64,
    convc: &[i32],
    areac: &[f64],
) -> Option<Opti> {
    let m = seg.len();
    if i == j {
        return None;
    }
    let v = |k: usize| seg[k % m].vertex;
    let c2 = |k: usize| seg[k % m].c[2];
    let i1 = (i + 1) % m;
    let conv = convc[i1];
    if conv == 0 {
        return None;
    }
    let d = v(i).dist(v(i1));
    let mut k = i1;
    while k != j {
        let k1 = (k + 1) % m;
        let k2 = (k + 2) % m;
        if convc[k1] != conv {
            return None;
        }
        if cprod(v(i), v(i1), v(k1), v(k2)).signum_or_zero() as i32 != conv {
            return None;
        }
        if iprod1(v(i), v(i1), v(k1), v(k2)) < d * v(k1).dist(v(k2)) * COS179 {
            return None;
        }
        k = k1;
    }

    let p0 = c2(i);
    let p1 = v(i1);
    let p2 = v(j);
    let p3 = c2(j);

    let mut area = areac[j] - areac[i];
    area -= dpara(v(0), c2(i), c2(j)) / 2.0;
    if i >= j {
        area += areac[m];
    }

    let a1 = dpara(p0, p1, p2);
    let a2 = dpara(p0, p1, p3);
    let a3 = dpara(p0, p2, p3);
    let a4 = a1 + a3 - a2;
    if a2 == a1 {
        return None;
    }
    let t = a3 / (a3 - a4);
    let s = a2 / (a2 - a1);
    let a = a2 * t / 2.0;
    if a == 0.0 {
        return None;
    }
    let r = area / a;
    let alpha = 2.0 - (4.0 - r / 0.3).sqrt();
    let q1 = p0.lerp(p1, t * alpha);
    let q2 = p3.lerp(p2, s * alpha);
    if !(q1.is_finite() && q2.is_finite()) {
        return None;
    }
    let mut pen = 0.0;

    let mut k = i1;
    while k != j {
        let k1 = (k + 1) % m;
        let t = tangent(p0, q1, q2, p3, v(k), v(k1));
        if t < -0.5 {
            return None;
        }
        let pt = bezier_point(p0, q1, q2, p3, t);
        let d = v(k).dist(v(k1));
        if d == 0.0 {
            return None;
        }
        let d1 = dpara(v(k), v(k1), pt) / d;
        if d1.abs() > tol {
            return None;
        }
        if iprod(v(k), v(k1), pt) < 0.0 || iprod(v(k1), v(k), pt) < 0.0 {
            return None;
        }
        pen += d1 * d1;
        k = k1;
    }

    let mut k = i;
    while k != j {
        let k1 = (k + 1) % m;
        let t = tangent(p0, q1, q2, p3, c2(k), c2(k1));
        if t < -0.5 {
            return None;
        }
        let pt = bezier_point(p0, q1, q2, p3, t);
        let d = c2(k).dist(c2(k1));
        if d == 0.0 {
            return None;
        }
        let mut d1 = dpara(c2(k), c2(k1), pt) / d;
        let mut d2 = dpara(c2(k), c2(k1), v(k1)) / d * 0.75 * seg[k1].alpha;
        if d2 < 0.0 {
            d1 = -d1;
            d2 = -d2;
        }
        if d1 < d2 - tol {
            return None;
        }
        if d1 < d2 {
            pen += (d1 - d2) * (d1 - d2);
        }
        k = k1;
    }
    Some(Opti {
        pen,
        c: [q1, q2],
        s,
        alpha,
    })
}

/// Merges runs of convex smooth segments into single cubics where the
/// result stays within `opttolerance` of the polygon. Never increases the
/// segment count.
pub fn optimize_curve(curve: &Curve, opttolerance: f64) -> Curve {
    let seg = &curve.segments;
    let m = seg.len();
    if m < 2 {
        return curve.clone();
    }
    let convc: Vec<i32> = (0..m)
        .map(|i| match seg[i].kind {
            SegmentKind::Bezier => {
                dpara(seg[(i + m - 1) % m].vertex, seg[i].vertex, seg[(i + 1) % m].vertex)
                    .signum_or_zero() as i32
            }
            SegmentKind::Corner => 0,
        })
        .collect();

    let mut areac = vec![0.0; m + 1];
    let mut area = 0.0;
    let p0 = seg[0].vertex;
    for i in 0..m {
        let i1 = (i + 1) % m;
        if seg[i1].kind == SegmentKind::Bezier {
            let alpha = seg[i1].alpha;
            area += 0.3 * alpha * (4.0 - alpha) * dpara(seg[i].c[2], seg[i1].vertex, seg[i1].c[2]) / 2.0;
            area += dpara(p0, seg[i].c[2], seg[i1].c[2]) / 2.0;
        }
        areac[i + 1] = area;
    }

    let mut pt = vec![0usize; m + 1];
    let mut pen = vec![0.0f64; m + 1];
    let mut len = vec![0usize; m + 1];
    let mut opt: Vec<Option<Opti>> = (0..=m).map(|_| None).collect();
    for j in 1..=m {
        pt[j] = j - 1;
        pen[j] = pen[j - 1];
        len[j] = len[j - 1] + 1;
        for i in (0..j.saturating_sub(1)).rev() {
            let Some(o) = opti_penalty(seg, i, j % m, opttolerance, &convc, &areac) else {
                break;
            };
            if len[j] > len[i] + 1 || (len[j] == len[i] + 1 && pen[j] > pen[i] + o.pen) {
                pt[j] = i;
                pen[j] = pen[i] + o.pen;
                len[j] = len[i] + 1;
                opt[j] = Some(o);
            }
        }
    }

    let om = len[m];
    let mut out = Vec::with_capacity(om);
    let mut j = m;
    for _ in 0..om {
        let s = seg[j % m];
        if pt[j] == j - 1 {
            out.push(s);
        } else {
            let o = opt[j].as_ref().expect("merged segment has parameters");
            out.push(CurveSegment {
                kind: SegmentKind::Bezier,
                c: [o.c[0], o.c[1], s.c[2]],
                vertex: s.c[2].lerp(s.vertex, o.s),
                alpha: o.alpha,
            });
        }
        j = pt[j];
    }
    out.reverse();
    // Keep the segment ending at the first vertex in front.
    out.rotate_right(1);
    Curve { segments: out }
}
