//! Path decomposition: boundary loops between black and white pixels.

use crate::raster::Bitmap;

use super::TurnPolicy;

/// A lattice point on pixel corners, y growing downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IPoint {
    pub x: i64,
    pub y: i64,
}

impl IPoint {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// Encloses black pixels.
    Plus,
    /// Encloses a white hole.
    Minus,
}

/// A closed boundary loop. Consecutive points (and the last and first)
/// differ by one unit step.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLoop {
    pub points: Vec<IPoint>,
    pub sign: Sign,
    /// Pixels enclosed by the loop.
    pub area: usize,
    /// The first pixel found inside the loop, as (x, y).
    pub seed: (usize, usize),
}

impl PathLoop {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Even-odd containment of a point, which must not lie on the lattice.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let n = self.points.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            if a.x != b.x {
                continue;
            }
            let (y0, y1) = (a.y.min(b.y) as f64, a.y.max(b.y) as f64);
            if (a.x as f64) > px && y0 <= py && py < y1 {
                inside = !inside;
            }
        }
        inside
    }

    pub fn bbox(&self) -> (i64, i64, i64, i64) {
        self.points.iter().fold(
            (i64::MAX, i64::MAX, i64::MIN, i64::MIN),
            |(x0, y0, x1, y1), p| (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y)),
        )
    }
}

/// Working copy stored bottom row first, so that `y` grows upward.
struct Work {
    w: i64,
    h: i64,
    bits: Vec<bool>,
}

impl Work {
    fn get(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.w && y < self.h && self.bits[(y * self.w + x) as usize]
    }

    fn flip_run(&mut self, y: i64, x0: i64, x1: i64) {
        let row = (y * self.w) as usize;
        for x in x0.min(x1)..x0.max(x1) {
            let b = &mut self.bits[row + x as usize];
            *b = !*b;
        }
    }

    /// The majority colour around the corner (x, y), probed on growing
    /// squares; ties resolve to white.
    fn majority(&self, x: i64, y: i64) -> bool {
        for i in 2..5 {
            let mut ct = 0i32;
            for a in (-i + 1)..=(i - 1) {
                for (px, py) in [
                    (x + a, y + i - 1),
                    (x + i - 1, y + a - 1),
                    (x + a - 1, y - i),
                    (x - i, y + a),
                ] {
                    ct += if self.get(px, py) { 1 } else { -1 };
                }
            }
            if ct > 0 {
                return true;
            }
            if ct < 0 {
                return false;
            }
        }
        false
    }
}

/// Splits the bitmap into boundary loops. After each loop its interior
/// is inverted and the search repeats, so holes come out as loops of
/// their own. Loops enclosing fewer than `turdsize` pixels are dropped.
pub fn decompose_paths(bmp: &Bitmap, turdsize: usize, policy: TurnPolicy) -> Vec<PathLoop> {
    let (w, h) = (bmp.width() as i64, bmp.height() as i64);
    let mut bits = vec![false; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            bits[(y * w + x) as usize] = bmp.get(x as usize, (h - 1 - y) as usize);
        }
    }
    let original = Work { w, h, bits: bits.clone() };
    let mut work = Work { w, h, bits };
    let mut loops = Vec::new();
    let (mut sx, mut sy) = (0i64, h - 1);
    while let Some((x, y)) = find_next(&work, sx, sy) {
        let sign = if original.get(x, y) { Sign::Plus } else { Sign::Minus };
        let (pts, area) = find_path(&work, x, y + 1, sign, policy);
        xor_path(&mut work, &pts);
        if area >= turdsize as i64 {
            loops.push(PathLoop {
                points: pts.iter().map(|&(px, py)| IPoint::new(px, h - py)).collect(),
                sign,
                area: area as usize,
                seed: (x as usize, (h - 1 - y) as usize),
            });
        }
        (sx, sy) = (x, y);
    }
    loops
}

/// The next black pixel scanning rows top down, each left to right,
/// starting at (x, y).
fn find_next(work: &Work, x: i64, y: i64) -> Option<(i64, i64)> {
    let mut x0 = x;
    for yy in (0..=y).rev() {
        for xx in x0..work.w {
            if work.bits[(yy * work.w + xx) as usize] {
                return Some((xx, yy));
            }
        }
        x0 = 0;
    }
    None
}

fn find_path(work: &Work, x0: i64, y0: i64, sign: Sign, policy: TurnPolicy) -> (Vec<(i64, i64)>, i64) {
    let (mut x, mut y) = (x0, y0);
    let (mut dirx, mut diry) = (0i64, -1i64);
    let mut pts = Vec::new();
    let mut area = 0i64;
    loop {
        pts.push((x, y));
        x += dirx;
        y += diry;
        area += x * diry;
        if x == x0 && y == y0 {
            break;
        }
        let c = work.get(x + (dirx + diry - 1).div_euclid(2), y + (diry - dirx - 1).div_euclid(2));
        let d = work.get(x + (dirx - diry - 1).div_euclid(2), y + (diry + dirx - 1).div_euclid(2));
        let turn_right = if c && !d {
            match policy {
                TurnPolicy::Black => sign == Sign::Plus,
                TurnPolicy::White => sign == Sign::Minus,
                TurnPolicy::Majority => work.majority(x, y),
                TurnPolicy::Minority => !work.majority(x, y),
            }
        } else {
            c
        };
        if turn_right {
            (dirx, diry) = (diry, -dirx);
        } else if !d {
            (dirx, diry) = (-diry, dirx);
        }
    }
    (pts, area)
}

/// Inverts every pixel inside the loop.
fn xor_path(work: &mut Work, pts: &[(i64, i64)]) {
    let Some(&(xa, _)) = pts.first() else { return };
    let mut y1 = pts[pts.len() - 1].1;
    for &(x, y) in pts {
        if y != y1 {
            work.flip_run(y.min(y1), x, xa);
            y1 = y;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loops(rows: &[&str], turdsize: usize) -> Vec<PathLoop> {
        decompose_paths(&Bitmap::from_ascii(rows), turdsize, TurnPolicy::Minority)
    }

    fn assert_closed_unit_steps(l: &PathLoop) {
        let n = l.points.len();
        for i in 0..n {
            let (a, b) = (l.points[i], l.points[(i + 1) % n]);
            assert_eq!((a.x - b.x).abs() + (a.y - b.y).abs(), 1, "{a:?} -> {b:?}");
        }
    }

    #[test]
    fn blank_bitmap_has_no_loops() {
        assert!(loops(&["....", "...."], 0).is_empty());
    }

    #[test]
    fn single_pixel() {
        let ls = loops(&["...", ".#.", "..."], 0);
        assert_eq!(ls.len(), 1);
        assert_eq!(ls[0].sign, Sign::Plus);
        assert_eq!(ls[0].area, 1);
        assert_eq!(ls[0].points.len(), 4);
        assert_eq!(ls[0].seed, (1, 1));
        let mut pts = ls[0].points.clone();
        pts.sort_by_key(|p| (p.x, p.y));
        assert_eq!(
            pts,
            vec![IPoint::new(1, 1), IPoint::new(1, 2), IPoint::new(2, 1), IPoint::new(2, 2)]
        );
        assert!(ls[0].contains(1.5, 1.5));
        assert!(!ls[0].contains(0.5, 1.5));
    }

    #[test]
    fn ring_has_outer_and_hole() {
        let ls = loops(&["###", "#.#", "###"], 0);
        assert_eq!(ls.len(), 2);
        assert_eq!((ls[0].sign, ls[0].area), (Sign::Plus, 9));
        assert_eq!((ls[1].sign, ls[1].area), (Sign::Minus, 1));
        assert_eq!(ls[1].seed, (1, 1));
        for l in &ls {
            assert_closed_unit_steps(l);
        }
    }

    #[test]
    fn turdsize_drops_small_loops() {
        let rows = ["#....", ".....", "..###", "..###"];
        assert_eq!(loops(&rows, 0).len(), 2);
        assert_eq!(loops(&rows, 2).len(), 1);
        assert_eq!(loops(&rows, 7).len(), 0);
    }

    #[test]
    fn saddle_follows_turn_policy() {
        let bmp = Bitmap::from_ascii(&["#.", ".#"]);
        let black = decompose_paths(&bmp, 0, TurnPolicy::Black);
        let white = decompose_paths(&bmp, 0, TurnPolicy::White);
        assert_eq!(black.len(), 1);
        assert_eq!(black[0].points.len(), 8);
        assert_eq!(white.len(), 2);
    }
}
