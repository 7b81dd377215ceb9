//! Seeded synthetic images: smooth blobs and cat-like faces with
//! band-limited noise. They stand in for a photo corpus in tests and demos.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::raster::{save_pgm, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Blobs,
    Cats,
}

/// Smooth random field in roughly [-1, 1] with features about
/// `side / cells` pixels across.
fn value_noise(side: usize, cells: usize, rng: &mut impl Rng) -> Vec<f64> {
    let g = cells + 2;
    let grid: Vec<f64> = (0..g * g).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let scale = cells as f64 / side as f64;
    let mut out = Vec::with_capacity(side * side);
    for y in 0..side {
        let fy = y as f64 * scale;
        let (iy, ty) = (fy as usize, fy.fract());
        let sy = ty * ty * (3.0 - 2.0 * ty);
        for x in 0..side {
            let fx = x as f64 * scale;
            let (ix, tx) = (fx as usize, fx.fract());
            let sx = tx * tx * (3.0 - 2.0 * tx);
            let at = |a: usize, b: usize| grid[(iy + b) * g + ix + a];
            let top = at(0, 0) + (at(1, 0) - at(0, 0)) * sx;
            let bot = at(0, 1) + (at(1, 1) - at(0, 1)) * sx;
            out.push(top + (bot - top) * sy);
        }
    }
    out
}

/// Rotated ellipse membership test.
#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    angle: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = (dx * c + dy * s) / self.rx;
        let v = (-dx * s + dy * c) / self.ry;
        u * u + v * v <= 1.0
    }
}

fn in_triangle(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let cross = |o: (f64, f64), u: (f64, f64), v: (f64, f64)| (u.0 - o.0) * (v.1 - o.1) - (u.1 - o.1) * (v.0 - o.0);
    let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

fn finish(side: usize, mut value: impl FnMut(usize, usize) -> f64) -> GrayImage {
    GrayImage::from_fn(side, side, |x, y| value(x, y).round().clamp(0.0, 255.0) as u8)
}

/// One to three dark ellipses on a light, softly shaded background.
pub fn blob_image(side: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = side as f64;
    let blobs: Vec<(Ellipse, f64)> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let e = Ellipse {
                cx: rng.gen_range(0.25..0.75) * s,
                cy: rng.gen_range(0.25..0.75) * s,
                rx: rng.gen_range(0.08..0.25) * s,
                ry: rng.gen_range(0.08..0.25) * s,
                angle: rng.gen_range(0.0..std::f64::consts::PI),
            };
            (e, rng.gen_range(20.0..90.0))
        })
        .collect();
    let shade = value_noise(side, 3, &mut rng);
    let bg = rng.gen_range(190.0..235.0);
    finish(side, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let base = blobs
            .iter()
            .find(|(e, _)| e.contains(px, py))
            .map_or(bg, |&(_, v)| v);
        base + 12.0 * shade[y * side + x]
    })
}

/// A stylized tabby cat face: striped head, ears, eyes, nose and whiskers
/// over a cluttered, shaded background.
pub fn cat_image(side: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = side as f64;
    let (cx, cy) = (rng.gen_range(0.4..0.6) * s, rng.gen_range(0.5..0.62) * s);
    let head = Ellipse {
        cx,
        cy,
        rx: rng.gen_range(0.22..0.32) * s,
        ry: rng.gen_range(0.2..0.28) * s,
        angle: rng.gen_range(-0.2..0.2),
    };
    let fur = rng.gen_range(60.0..200.0);
    let bg = rng.gen_range(20.0..235.0);
    let stripe_amp = rng.gen_range(25.0..70.0);
    let stripe_freq = rng.gen_range(6.0..12.0) / s;
    let stripe_angle: f64 = rng.gen_range(-0.6..0.6);
    let clutter: Vec<(Ellipse, f64)> = (0..rng.gen_range(2..=5))
        .map(|_| {
            let e = Ellipse {
                cx: rng.gen_range(0.0..1.0) * s,
                cy: rng.gen_range(0.0..1.0) * s,
                rx: rng.gen_range(0.05..0.3) * s,
                ry: rng.gen_range(0.05..0.3) * s,
                angle: rng.gen_range(0.0..std::f64::consts::PI),
            };
            (e, rng.gen_range(10.0..245.0))
        })
        .collect();
    let ear_h = rng.gen_range(0.18..0.28) * s;
    let ears: Vec<[(f64, f64); 3]> = [-1.0, 1.0]
        .iter()
        .map(|&d| {
            let bx = cx + d * head.rx * 0.55;
            let by = cy - head.ry * 0.6;
            [
                (bx - d * head.rx * 0.45, by + 0.05 * s),
                (bx + d * head.rx * 0.35, by),
                (bx + d * rng.gen_range(0.0..0.12) * s, by - ear_h),
            ]
        })
        .collect();
    let eye_dx = head.rx * rng.gen_range(0.35..0.5);
    let eye_y = cy - head.ry * rng.gen_range(0.05..0.25);
    let eye_r = head.rx * rng.gen_range(0.14..0.22);
    let eyes: Vec<(Ellipse, Ellipse)> = [-1.0, 1.0]
        .iter()
        .map(|&d| {
            let e = Ellipse {
                cx: cx + d * eye_dx,
                cy: eye_y,
                rx: eye_r,
                ry: eye_r * 0.8,
                angle: 0.0,
            };
            let pupil = Ellipse {
                rx: eye_r * 0.3,
                ry: eye_r * 0.75,
                ..e
            };
            (e, pupil)
        })
        .collect();
    let eye_tone = rng.gen_range(180.0..240.0);
    let nose_y = cy + head.ry * 0.25;
    let nose_w = head.rx * 0.14;
    let nose = [(cx - nose_w, nose_y), (cx + nose_w, nose_y), (cx, nose_y + nose_w * 1.1)];
    let whiskers: Vec<(f64, f64, f64)> = (0..6)
        .map(|k| {
            let d = if k < 3 { -1.0 } else { 1.0 };
            let slope = (k % 3) as f64 * 0.15 - 0.15;
            (d, nose_y + nose_w * 1.5, slope)
        })
        .collect();
    let texture = value_noise(side, 32, &mut rng);
    let broad = value_noise(side, 4, &mut rng);
    let grain = value_noise(side, 48, &mut rng);
    finish(side, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let p = (px, py);
        let mut v = clutter
            .iter()
            .find(|(e, _)| e.contains(px, py))
            .map_or(bg, |&(_, t)| t)
            + 60.0 * broad[y * side + x];
        let on_head = head.contains(px, py) || ears.iter().any(|t| in_triangle(p, t[0], t[1], t[2]));
        if on_head {
            let (sa, ca) = stripe_angle.sin_cos();
            let along = (px - cx) * sa + (py - cy) * ca + 0.06 * s * texture[y * side + x];
            let stripe = (std::f64::consts::TAU * stripe_freq * along).sin();
            v = fur + stripe_amp * stripe + 25.0 * texture[y * side + x];
            if let Some((_, pupil)) = eyes.iter().find(|(e, _)| e.contains(px, py)) {
                v = if pupil.contains(px, py) { 10.0 } else { eye_tone };
            } else if in_triangle(p, nose[0], nose[1], nose[2]) {
                v = if fur > 128.0 { 30.0 } else { 200.0 };
            }
        }
        for &(d, wy, slope) in &whiskers {
            let t = d * (px - cx);
            if t > head.rx * 0.25 && t < head.rx * 1.15 {
                let ly = wy + slope * (t - head.rx * 0.25) + (slope * 40.0);
                if (py - ly).abs() < (s / 256.0).max(0.6) {
                    v = if fur > 128.0 { 25.0 } else { 235.0 };
                }
            }
        }
        v + 12.0 * grain[y * side + x]
    })
}

/// `n` images of one kind, each seeded from `seed` and its index.
pub fn corpus(kind: SynthKind, n: usize, side: usize, seed: u64) -> Vec<GrayImage> {
    (0..n as u64)
        .map(|i| {
            let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i);
            match kind {
                SynthKind::Blobs => blob_image(side, s),
                SynthKind::Cats => cat_image(side, s),
            }
        })
        .collect()
}

/// Writes `prefix_0000.pgm`, `prefix_0001.pgm`, ... into `dir`.
pub fn write_corpus(dir: impl AsRef<Path>, prefix: &str, images: &[GrayImage]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
    images
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let p = dir.join(format!("{prefix}_{i:04}.pgm"));
            save_pgm(img, &p)?;
            Ok(p)
        })
        .collect()
}
