//! Optimal polygon fitting and vertex adjustment.

use crate::error::{Error, Result};
use crate::vector::Point;

use super::decompose::IPoint;

/// Segment endpoints of a fitted polygon, as ascending indices into the
/// loop's points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polygon {
    pub indices: Vec<usize>,
}

impl Polygon {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    x: f64,
    y: f64,
    x2: f64,
    xy: f64,
    y2: f64,
}

fn calc_sums(pts: &[IPoint]) -> Vec<Sums> {
    let (x0, y0) = (pts[0].x, pts[0].y);
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut acc = Sums::default();
    out.push(acc);
    for p in pts {
        let (x, y) = ((p.x - x0) as f64, (p.y - y0) as f64);
        acc.x += x;
        acc.y += y;
        acc.x2 += x * x;
        acc.xy += x * y;
        acc.y2 += y * y;
        out.push(acc);
    }
    out
}

fn modn(a: i64, n: usize) -> usize {
    a.rem_euclid(n as i64) as usize
}

fn sign(v: i64) -> i64 {
    v.signum()
}

fn xprod(ax: i64, ay: i64, bx: i64, by: i64) -> i64 {
    ax * by - ay * bx
}

/// True if `a <= b < c` cyclically.
fn cyclic(a: usize, b: usize, c: usize) -> bool {
    if a <= c {
        a <= b && b < c
    } else {
        a <= b || b < c
    }
}

/// For each i, the furthest index k such that every point from i to k
/// lies near one straight line and at most three step directions occur.
pub fn pivots(pts: &[IPoint]) -> Vec<usize> {
    let n = pts.len();
    let mut nc = vec![0usize; n];
    let mut k = 0;
    for i in (0..n).rev() {
        if pts[i].x != pts[k].x && pts[i].y != pts[k].y {
            k = i + 1;
        }
        nc[i] = k;
    }

    let mut pivk = vec![0usize; n];
    for i in (0..n).rev() {
        let mut ct = [0u32; 4];
        let nx = pts[(i + 1) % n];
        let dir = (3 + 3 * (nx.x - pts[i].x) + (nx.y - pts[i].y)) / 2;
        ct[dir as usize] += 1;

        let (mut c0x, mut c0y, mut c1x, mut c1y) = (0i64, 0i64, 0i64, 0i64);
        let mut k = nc[i];
        let mut k1 = i;
        let mut found = false;
        loop {
            let dir = (3 + 3 * sign(pts[k].x - pts[k1].x) + sign(pts[k].y - pts[k1].y)) / 2;
            ct[dir as usize] += 1;
            if ct.iter().all(|&c| c > 0) {
                pivk[i] = k1;
                found = true;
                break;
            }
            let cur_x = pts[k].x - pts[i].x;
            let cur_y = pts[k].y - pts[i].y;
            if xprod(c0x, c0y, cur_x, cur_y) < 0 || xprod(c1x, c1y, cur_x, cur_y) > 0 {
                break;
            }
            if cur_x.abs() > 1 || cur_y.abs() > 1 {
                let off_x = cur_x + if cur_y >= 0 && (cur_y > 0 || cur_x < 0) { 1 } else { -1 };
                let off_y = cur_y + if cur_x <= 0 && (cur_x < 0 || cur_y < 0) { 1 } else { -1 };
                if xprod(c0x, c0y, off_x, off_y) >= 0 {
                    (c0x, c0y) = (off_x, off_y);
                }
                let off_x = cur_x + if cur_y <= 0 && (cur_y < 0 || cur_x < 0) { 1 } else { -1 };
                let off_y = cur_y + if cur_x >= 0 && (cur_x > 0 || cur_y < 0) { 1 } else { -1 };
                if xprod(c1x, c1y, off_x, off_y) <= 0 {
                    (c1x, c1y) = (off_x, off_y);
                }
            }
            k1 = k;
            k = nc[k1];
            if !cyclic(k, i, k1) {
                break;
            }
        }
        if found {
            continue;
        }
        // k1 satisfied the constraints and k did not; walk from k1
        // towards k as far as they still hold.
        let dk_x = sign(pts[k].x - pts[k1].x);
        let dk_y = sign(pts[k].y - pts[k1].y);
        let cur_x = pts[k1].x - pts[i].x;
        let cur_y = pts[k1].y - pts[i].y;
        let a = xprod(c0x, c0y, cur_x, cur_y);
        let b = xprod(c0x, c0y, dk_x, dk_y);
        let c = xprod(c1x, c1y, cur_x, cur_y);
        let d = xprod(c1x, c1y, dk_x, dk_y);
        let mut j = i64::MAX / 4;
        if b < 0 {
            j = a.div_euclid(-b);
        }
        if d > 0 {
            j = j.min((-c).div_euclid(d));
        }
        pivk[i] = modn(k1 as i64 + j, n);
    }
    pivk
}

/// For each i, the largest k such that the subpath from every i' in
/// `i..k` to k is straight.
pub fn longest_straight(pts: &[IPoint]) -> Vec<usize> {
    let n = pts.len();
    let pivk = pivots(pts);
    let mut lon = vec![0usize; n];
    let mut j = pivk[n - 1];
    lon[n - 1] = j;
    for i in (0..n - 1).rev() {
        if cyclic(i + 1, pivk[i], j) {
            j = pivk[i];
        }
        lon[i] = j;
    }
    let mut i = n - 1;
    while cyclic((i + 1) % n, j, lon[i]) {
        lon[i] = j;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    lon
}

/// How far forward a polygon edge starting at each index may reach.
pub fn reach(pts: &[IPoint]) -> Vec<usize> {
    let n = pts.len();
    let lon = longest_straight(pts);
    (0..n)
        .map(|i| {
            let mut c = modn(lon[(i + n - 1) % n] as i64 - 1, n);
            if c == i {
                c = (i + 1) % n;
            }
            (c + n - i) % n
        })
        .collect()
}

/// Penalty of an edge from `i` to `j` with `0 <= i < n` and
/// `i < j < i + n`.
fn penalty3(pts: &[IPoint], sums: &[Sums], i: usize, j: usize) -> f64 {
    let n = pts.len();
    let (j, r) = if j >= n { (j - n, 1.0) } else { (j, 0.0) };
    let (a0, b0, sn) = (sums[i], sums[j + 1], sums[n]);
    let x = b0.x - a0.x + r * sn.x;
    let y = b0.y - a0.y + r * sn.y;
    let x2 = b0.x2 - a0.x2 + r * sn.x2;
    let xy = b0.xy - a0.xy + r * sn.xy;
    let y2 = b0.y2 - a0.y2 + r * sn.y2;
    let k = (j + 1) as f64 - i as f64 + r * n as f64;

    let px = (pts[i].x + pts[j].x) as f64 / 2.0 - pts[0].x as f64;
    let py = (pts[i].y + pts[j].y) as f64 / 2.0 - pts[0].y as f64;
    let ey = (pts[j].x - pts[i].x) as f64;
    let ex = -((pts[j].y - pts[i].y) as f64);

    let a = (x2 - 2.0 * x * px) / k + px * px;
    let b = (xy - x * py - y * px) / k + px * py;
    let c = (y2 - 2.0 * y * py) / k + py * py;
    let s = ex * ex * a + 2.0 * ex * ey * b + ey * ey * c;
    s.max(0.0).sqrt()
}

/// Fewest-segment polygon through the loop, ties broken by the smallest
/// total penalty. All cyclic starting points are considered.
pub fn best_polygon(pts: &[IPoint]) -> Result<Polygon> {
    let n = pts.len();
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "degenerate loop with {n} edges"
        )));
    }
    let reach = reach(pts);
    let sums = calc_sums(pts);
    let clip_for = |s: usize| -> Vec<usize> {
        (0..n).map(|t| (t + reach[(s + t) % n]).min(n)).collect()
    };
    let count = |clip0: &[usize]| {
        let (mut t, mut m) = (0, 0);
        while t < n {
            t = clip0[t];
            m += 1;
        }
        m
    };

    let starts = 0..=reach[0].min(n - 1);
    let counts: Vec<(usize, Vec<usize>)> = starts
        .map(|s| {
            let clip0 = clip_for(s);
            (count(&clip0), clip0)
        })
        .collect();
    let m = counts.iter().map(|(m, _)| *m).min().expect("at least one start");

    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    for (s, (ms, clip0)) in counts.iter().enumerate() {
        if *ms != m {
            continue;
        }
        let (pen, po) = rotated_dp(pts, &sums, s, clip0, m);
        if best.as_ref().map_or(true, |(bp, _, _)| pen < *bp) {
            best = Some((pen, s, po));
        }
    }
    let (_, s, po) = best.expect("at least one start");
    let mut indices: Vec<usize> = po.iter().map(|&t| (s + t) % n).collect();
    indices.sort_unstable();
    Ok(Polygon { indices })
}

/// Least-penalty path with exactly `m` segments from 0 to n in the frame
/// rotated to start at `s`.
fn rotated_dp(pts: &[IPoint], sums: &[Sums], s: usize, clip0: &[usize], m: usize) -> (f64, Vec<usize>) {
    let n = pts.len();
    let mut clip1 = vec![0usize; n + 1];
    let mut j = 1;
    for (i, &c) in clip0.iter().enumerate() {
        while j <= c {
            clip1[j] = i;
            j += 1;
        }
    }
    let mut seg0 = vec![0usize; m + 1];
    let (mut i, mut j) = (0, 0);
    while i < n {
        seg0[j] = i;
        i = clip0[i];
        j += 1;
    }
    seg0[m] = n;
    let mut seg1 = vec![0usize; m + 1];
    let mut i = n;
    for j in (1..=m).rev() {
        seg1[j] = i;
        i = clip1[i];
    }
    seg1[0] = 0;

    let mut pen = vec![0.0f64; n + 1];
    let mut prev = vec![0usize; n + 1];
    for j in 1..=m {
        for i in seg1[j]..=seg0[j] {
            let mut best = -1.0;
            for k in (clip1[i]..=seg0[j - 1]).rev() {
                let ak = (s + k) % n;
                let this = penalty3(pts, sums, ak, ak + (i - k)) + pen[k];
                if best < 0.0 || this < best {
                    prev[i] = k;
                    best = this;
                }
            }
            pen[i] = best;
        }
    }
    let mut po = vec![0usize; m];
    let mut i = n;
    for slot in po.iter_mut().rev() {
        i = prev[i];
        *slot = i;
    }
    (pen[n], po)
}

/// Least-squares fit of a line through `pts[i..=j]` (cyclic): centroid and
/// unit direction.
fn point_slope(pts: &[IPoint], sums: &[Sums], i: usize, j: usize) -> (Point, Point) {
    let n = pts.len();
    let (mut i, mut j, mut r) = (i as i64, j as i64, 0i64);
    let nn = n as i64;
    while j >= nn {
        j -= nn;
        r += 1;
    }
    while i >= nn {
        i -= nn;
        r -= 1;
    }
    let (i, j) = (i as usize, j as usize);
    let rf = r as f64;
    let (a0, b0, sn) = (sums[i], sums[j + 1], sums[n]);
    let x = b0.x - a0.x + rf * sn.x;
    let y = b0.y - a0.y + rf * sn.y;
    let x2 = b0.x2 - a0.x2 + rf * sn.x2;
    let xy = b0.xy - a0.xy + rf * sn.xy;
    let y2 = b0.y2 - a0.y2 + rf * sn.y2;
    let k = (j + 1) as f64 - i as f64 + rf * n as f64;

    let ctr = Point::new(x / k, y / k);
    let mut a = (x2 - x * x / k) / k;
    let b = (xy - x * y / k) / k;
    let mut c = (y2 - y * y / k) / k;
    let lambda2 = (a + c + ((a - c) * (a - c) + 4.0 * b * b).sqrt()) / 2.0;
    a -= lambda2;
    c -= lambda2;
    let dir = if a.abs() >= c.abs() {
        let l = (a * a + b * b).sqrt();
        if l != 0.0 {
            Point::new(-b / l, a / l)
        } else {
            Point::default()
        }
    } else {
        let l = (c * c + b * b).sqrt();
        if l != 0.0 {
            Point::new(-c / l, b / l)
        } else {
            Point::default()
        }
    };
    (ctr, dir)
}

type Quad = [[f64; 3]; 3];

fn quadform(q: &Quad, w: Point) -> f64 {
    let v = [w.x, w.y, 1.0];
    let mut sum = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            sum += v[i] * q[i][j] * v[j];
        }
    }
    sum
}

/// Moves each polygon vertex to the point of its unit square around the
/// lattice corner that is closest, in the least-squares sense, to the two
/// fitted lines of its adjacent edges.
pub fn adjust_vertices(pts: &[IPoint], polygon: &Polygon) -> Vec<Point> {
    let n = pts.len();
    let po = &polygon.indices;
    let m = po.len();
    let sums = calc_sums(pts);
    let (x0, y0) = (pts[0].x as f64, pts[0].y as f64);

    let mut q: Vec<Quad> = Vec::with_capacity(m);
    for i in 0..m {
        let j = po[(i + 1) % m];
        let j = (j + n - po[i]) % n + po[i];
        let (ctr, dir) = point_slope(pts, &sums, po[i], j);
        let d = dir.x * dir.x + dir.y * dir.y;
        let mut qi = [[0.0; 3]; 3];
        if d != 0.0 {
            let v = [dir.y, -dir.x, dir.x * ctr.y - dir.y * ctr.x];
            for l in 0..3 {
                for k in 0..3 {
                    qi[l][k] = v[l] * v[k] / d;
                }
            }
        }
        q.push(qi);
    }

    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let s = Point::new(pts[po[i]].x as f64 - x0, pts[po[i]].y as f64 - y0);
        let j = (i + m - 1) % m;
        let mut qq = [[0.0; 3]; 3];
        for l in 0..3 {
            for k in 0..3 {
                qq[l][k] = q[j][l][k] + q[i][l][k];
            }
        }
        let w = loop {
            let det = qq[0][0] * qq[1][1] - qq[0][1] * qq[1][0];
            if det != 0.0 {
                break Point::new(
                    (-qq[0][2] * qq[1][1] + qq[1][2] * qq[0][1]) / det,
                    (qq[0][2] * qq[1][0] - qq[1][2] * qq[0][0]) / det,
                );
            }
            // Parallel lines: add an orthogonal axis through the vertex.
            let mut v = if qq[0][0] > qq[1][1] {
                [-qq[0][1], qq[0][0], 0.0]
            } else if qq[1][1] != 0.0 {
                [-qq[1][1], qq[1][0], 0.0]
            } else {
                [1.0, 0.0, 0.0]
            };
            let d = v[0] * v[0] + v[1] * v[1];
            v[2] = -v[1] * s.y - v[0] * s.x;
            for l in 0..3 {
                for k in 0..3 {
                    qq[l][k] += v[l] * v[k] / d;
                }
            }
        };
        if (w.x - s.x).abs() <= 0.5 && (w.y - s.y).abs() <= 0.5 {
            out.push(Point::new(w.x + x0, w.y + y0));
            continue;
        }
        // Minimum outside the square: search its boundary.
        let mut min = quadform(&qq, s);
        let mut best = s;
        if qq[0][0] != 0.0 {
            for z in 0..2 {
                let wy = s.y - 0.5 + z as f64;
                let wx = -(qq[0][1] * wy + qq[0][2]) / qq[0][0];
                let cand = quadform(&qq, Point::new(wx, wy));
                if (wx - s.x).abs() <= 0.5 && cand < min {
                    min = cand;
                    best = Point::new(wx, wy);
                }
            }
        }
        if qq[1][1] != 0.0 {
            for z in 0..2 {
                let wx = s.x - 0.5 + z as f64;
                let wy = -(qq[1][0] * wx + qq[1][2]) / qq[1][1];
                let cand = quadform(&qq, Point::new(wx, wy));
                if (wy - s.y).abs() <= 0.5 && cand < min {
                    min = cand;
                    best = Point::new(wx, wy);
                }
            }
        }
        for l in 0..2 {
            for k in 0..2 {
                let w = Point::new(s.x - 0.5 + l as f64, s.y - 0.5 + k as f64);
                let cand = quadform(&qq, w);
                if cand < min {
                    min = cand;
                    best = w;
                }
            }
        }
        out.push(Point::new(best.x + x0, best.y + y0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Bitmap;
    use crate::tracer::decompose::decompose_paths;
    use crate::tracer::TurnPolicy;

    fn first_loop(rows: &[&str]) -> Vec<IPoint> {
        decompose_paths(&Bitmap::from_ascii(rows), 0, TurnPolicy::Minority)
            .remove(0)
            .points
    }

    #[test]
    fn rectangle_is_four_segments_at_corners() {
        let pts = first_loop(&["......", ".####.", ".####.", ".####.", "......"]);
        let poly = best_polygon(&pts).unwrap();
        assert_eq!(poly.len(), 4);
        let mut v = adjust_vertices(&pts, &poly);
        for p in &v {
            assert!((p.x - p.x.round()).abs() < 1e-9 && (p.y - p.y.round()).abs() < 1e-9, "{p:?}");
        }
        v.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
        assert_eq!(
            v,
            vec![Point::new(1.0, 1.0), Point::new(1.0, 4.0), Point::new(5.0, 1.0), Point::new(5.0, 4.0)]
        );
    }

    #[test]
    fn single_pixel_is_four_segments() {
        let pts = first_loop(&["#"]);
        assert_eq!(best_polygon(&pts).unwrap().len(), 4);
    }

    #[test]
    fn degenerate_loop_rejected() {
        let pts = vec![IPoint::new(0, 0), IPoint::new(1, 0)];
        assert!(best_polygon(&pts).is_err());
    }

    #[test]
    fn adjusted_vertices_stay_in_their_cell() {
        let pts = first_loop(&[
            "....##....",
            "..######..",
            ".########.",
            "##########",
            ".########.",
            "..######..",
            "....##....",
        ]);
        let poly = best_polygon(&pts).unwrap();
        let v = adjust_vertices(&pts, &poly);
        for (p, &i) in v.iter().zip(&poly.indices) {
            assert!((p.x - pts[i].x as f64).abs() <= 0.5 + 1e-12);
            assert!((p.y - pts[i].y as f64).abs() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn collinear_vertex_stays_on_line() {
        let pts: Vec<IPoint> = [(0, 0), (1, 0), (2, 0), (3, 0), (3, 1), (2, 1), (1, 1), (0, 1)]
            .into_iter()
            .map(|(x, y)| IPoint::new(x, y))
            .collect();
        let poly = Polygon { indices: vec![0, 2, 3, 4, 7] };
        let v = adjust_vertices(&pts, &poly);
        assert!(v[1].y.abs() < 1e-9, "{:?}", v[1]);
    }
}
