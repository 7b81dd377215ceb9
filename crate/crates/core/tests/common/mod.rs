//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracekit_core::tracer::IPoint;
use tracekit_core::{Bitmap, GrayImage};

pub fn random_bitmap(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> Bitmap {
    let bits = (0..w * h).map(|_| rng.gen_bool(density)).collect();
    Bitmap::from_bits(w, h, bits).unwrap()
}

pub fn bitmap_from_mask(w: usize, h: usize, mask: u32) -> Bitmap {
    Bitmap::from_bits(w, h, (0..w * h).map(|i| mask >> i & 1 == 1).collect()).unwrap()
}

/// A 2x2 window with exactly the two diagonal pixels black.
pub fn has_saddle(b: &Bitmap) -> bool {
    for y in 0..b.height().saturating_sub(1) {
        for x in 0..b.width().saturating_sub(1) {
            let (p, q, r, s) = (b.get(x, y), b.get(x + 1, y), b.get(x, y + 1), b.get(x + 1, y + 1));
            if p == s && q == r && p != q {
                return true;
            }
        }
    }
    false
}

/// Black 4-connected components plus enclosed white 8-connected regions.
pub fn components_plus_holes(b: &Bitmap) -> usize {
    let (w, h) = (b.width() as i64 + 2, b.height() as i64 + 2);
    let black = |x: i64, y: i64| -> bool {
        x >= 1 && y >= 1 && x < w - 1 && y < h - 1 && b.get((x - 1) as usize, (y - 1) as usize)
    };
    let mut seen = vec![false; (w * h) as usize];
    let mut count = 0;
    let mut outside_done = false;
    for y in 0..h {
        for x in 0..w {
            if seen[(y * w + x) as usize] {
                continue;
            }
            let colour = black(x, y);
            let nbrs: &[(i64, i64)] = if colour {
                &[(1, 0), (-1, 0), (0, 1), (0, -1)]
            } else {
                &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
            };
            let mut stack = vec![(x, y)];
            seen[(y * w + x) as usize] = true;
            while let Some((cx, cy)) = stack.pop() {
                for &(dx, dy) in nbrs {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let k = (ny * w + nx) as usize;
                    if !seen[k] && black(nx, ny) == colour {
                        seen[k] = true;
                        stack.push((nx, ny));
                    }
                }
            }
            if colour || outside_done {
                count += 1;
            }
            if !colour {
                outside_done = true;
            }
        }
    }
    count
}

fn direction(a: IPoint, b: IPoint) -> usize {
    ((3 + 3 * (b.x - a.x).signum() + (b.y - a.y).signum()) / 2) as usize
}

/// The ray from the origin along `d` meets the square of half-size 1
/// around `c`.
fn ray_hits_square(d: (i64, i64), c: (i64, i64)) -> bool {
    let mut lo = false;
    let mut hi = false;
    for (ox, oy) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
        let (qx, qy) = (c.0 + ox, c.1 + oy);
        let cross = qx * d.1 - qy * d.0;
        lo |= cross <= 0;
        hi |= cross >= 0;
    }
    lo && hi && d.0 * c.0 + d.1 * c.1 > 0
}

/// Straightness straight from the definition: fewer than four step
/// directions, and the ray from the first point to every later point
/// passes through the squares of all points in between.
pub fn brute_pivots(pts: &[IPoint]) -> Vec<usize> {
    let n = pts.len();
    let at = |k: usize| pts[k % n];
    (0..n)
        .map(|i| {
            let mut dirs = [false; 4];
            let mut best = i + 1;
            for k in i + 1..i + n {
                dirs[direction(at(k - 1), at(k))] = true;
                if dirs.iter().all(|&d| d) {
                    break;
                }
                let d = (at(k).x - pts[i].x, at(k).y - pts[i].y);
                let ok = (i + 1..k).all(|m| {
                    let c = (at(m).x - pts[i].x, at(m).y - pts[i].y);
                    (c.0.abs() <= 1 && c.1.abs() <= 1) || ray_hits_square(d, c)
                });
                if !ok {
                    break;
                }
                best = k;
            }
            best % n
        })
        .collect()
}

/// Forward reach of a polygon edge from each index, derived from the
/// brute-force pivots.
pub fn brute_reach(pts: &[IPoint]) -> Vec<usize> {
    let n = pts.len();
    let piv = brute_pivots(pts);
    let unrolled = |i: usize| i + (piv[i % n] + n - i % n) % n;
    let lon: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = i + 1;
            for k in i + 1..i + n {
                if (i..k).all(|ip| k <= unrolled(ip)) {
                    best = k;
                } else {
                    break;
                }
            }
            best % n
        })
        .collect();
    (0..n)
        .map(|i| {
            let mut c = (lon[(i + n - 1) % n] + n - 1) % n;
            if c == i {
                c = (i + 1) % n;
            }
            (c + n - i) % n
        })
        .collect()
}

/// Fewest vertices of any cyclic index subset whose edges all respect
/// `reach`.
pub fn exhaustive_min_polygon(n: usize, reach: &[usize]) -> usize {
    assert!(n <= 20);
    let mut best = usize::MAX;
    for mask in 1u32..(1 << n) {
        let m = mask.count_ones() as usize;
        if m >= best || m < 2 {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let ok = (0..m).all(|t| {
            let (a, b) = (idx[t], idx[(t + 1) % m]);
            let d = (b + n - a) % n;
            d >= 1 && d <= reach[a]
        });
        if ok {
            best = m;
        }
    }
    best
}

pub fn polygon_is_admissible(n: usize, reach: &[usize], idx: &[usize]) -> bool {
    let m = idx.len();
    (0..m).all(|t| {
        let (a, b) = (idx[t], idx[(t + 1) % m]);
        let d = (b + n - a) % n;
        d >= 1 && d <= reach[a]
    })
}

pub fn disk(side: usize, cx: f64, cy: f64, r: f64) -> GrayImage {
    GrayImage::from_fn(side, side, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        if dx * dx + dy * dy <= r * r {
            0
        } else {
            255
        }
    })
}

pub fn rect(side: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> GrayImage {
    GrayImage::from_fn(side, side, |x, y| {
        if (x0..x1).contains(&x) && (y0..y1).contains(&y) {
            0
        } else {
            255
        }
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
