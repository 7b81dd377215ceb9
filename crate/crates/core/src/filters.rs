//! High-pass filters (Sobel, Canny, Gaussian high-pass) and the two
//! blend modes used for noise-reduction experiments.
//!
//! All filters pad by replicating the border pixel. "Direct" outputs
//! are bright features on a dark ground; the inverse variant is simply
//! [`invert`] applied afterwards.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{invert, GrayImage};

pub const DEFAULT_CANNY_LOW: u8 = 50;
pub const DEFAULT_CANNY_HIGH: u8 = 150;
pub const CANNY_SIGMA: f64 = 1.4;
pub const DEFAULT_GHP_SIGMA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterTag {
    Sobel,
    Canny,
    GaussianHighpass,
}

impl FilterTag {
    pub const ALL: [FilterTag; 3] = [FilterTag::Sobel, FilterTag::Canny, FilterTag::GaussianHighpass];

    pub fn as_str(self) -> &'static str {
        match self {
            FilterTag::Sobel => "sobel",
            FilterTag::Canny => "canny",
            FilterTag::GaussianHighpass => "ghp",
        }
    }
}

impl fmt::Display for FilterTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sobel" => Ok(FilterTag::Sobel),
            "canny" => Ok(FilterTag::Canny),
            "ghp" | "gaussian_highpass" => Ok(FilterTag::GaussianHighpass),
            other => Err(Error::InvalidArgument(format!("unknown filter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Direct,
    Inverse,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Direct => "direct",
            Variant::Inverse => "inverse",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Variant::Direct),
            "inverse" => Ok(Variant::Inverse),
            other => Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FilterKind {
    pub tag: FilterTag,
    pub variant: Variant,
}

impl FilterKind {
    pub const fn new(tag: FilterTag, variant: Variant) -> Self {
        Self { tag, variant }
    }

    pub fn direct(self) -> Self {
        Self {
            variant: Variant::Direct,
            ..self
        }
    }

    /// All six tag/variant combinations.
    pub fn all() -> impl Iterator<Item = FilterKind> {
        FilterTag::ALL.into_iter().flat_map(|tag| {
            [Variant::Direct, Variant::Inverse]
                .into_iter()
                .map(move |variant| FilterKind { tag, variant })
        })
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.tag, self.variant.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub canny_low: u8,
    pub canny_high: u8,
    pub ghp_sigma: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            canny_low: DEFAULT_CANNY_LOW,
            canny_high: DEFAULT_CANNY_HIGH,
            ghp_sigma: DEFAULT_GHP_SIGMA,
        }
    }
}

pub fn apply(kind: FilterKind, img: &GrayImage, params: &FilterParams) -> Result<GrayImage> {
    let direct = match kind.tag {
        FilterTag::Sobel => sobel(img)?,
        FilterTag::Canny => canny(img, params.canny_low, params.canny_high)?,
        FilterTag::GaussianHighpass => gaussian_highpass(img, params.ghp_sigma)?,
    };
    Ok(match kind.variant {
        Variant::Direct => direct,
        Variant::Inverse => invert(&direct),
    })
}

/// Raw Sobel responses (Gx, Gy) of a float field with edge replication.
fn sobel_field(field: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        field[y * w + x]
    };
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

fn to_field(img: &GrayImage) -> Vec<f64> {
    img.data().iter().map(|&p| p as f64).collect()
}

fn from_field(field: &[f64], w: usize, h: usize) -> GrayImage {
    let data = field
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(w, h, data).expect("field has image dimensions")
}

/// Gradient magnitude scaled by 1/4 so a full black/white step maps to 255.
pub fn sobel(img: &GrayImage) -> Result<GrayImage> {
    let (w, h) = img.dimensions();
    if w < 3 || h < 3 {
        return Err(Error::InvalidArgument(format!(
            "sobel needs at least 3x3 pixels, got {w}x{h}"
        )));
    }
    let (gx, gy) = sobel_field(&to_field(img), w, h);
    let mag: Vec<f64> = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| (a * a + b * b).sqrt() / 4.0)
        .collect();
    Ok(from_field(&mag, w, h))
}

/// Normalized 1-D Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

fn convolve_separable(field: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &field[y * w..(y + 1) * w];
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (k, &wt) in kernel.iter().enumerate() {
                let xx = (x + k as isize - r).clamp(0, w as isize - 1) as usize;
                acc += wt * row[xx];
            }
            tmp[y * w + x as usize] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &wt) in kernel.iter().enumerate() {
                let yy = (y + k as isize - r).clamp(0, h as isize - 1) as usize;
                acc += wt * tmp[yy * w + x];
            }
            out[y as usize * w + x] = acc;
        }
    }
    out
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    Ok(())
}

fn blur_field(img: &GrayImage, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let (w, h) = img.dimensions();
    convolve_separable(&to_field(img), w, h, &gaussian_kernel(sigma, radius))
}

/// Separable Gaussian blur with a kernel radius of `ceil(3 sigma)`.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    check_sigma(sigma)?;
    let (w, h) = img.dimensions();
    Ok(from_field(&blur_field(img, sigma), w, h))
}

/// `img - blur(img) + 128`, clamped; flat regions become mid-gray.
pub fn gaussian_highpass(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    check_sigma(sigma)?;
    let (w, h) = img.dimensions();
    let blurred = blur_field(img, sigma);
    let out: Vec<f64> = img
        .data()
        .iter()
        .zip(&blurred)
        .map(|(&p, b)| p as f64 - b + 128.0)
        .collect();
    Ok(from_field(&out, w, h))
}

/// Canny edge detector producing a binary 0/255 edge map.
///
/// Smoothing uses a fixed 5x5 Gaussian (sigma 1.4). Thresholds apply to the
/// unscaled Sobel magnitude, four times the value [`sobel`] reports.
pub fn canny(img: &GrayImage, low: u8, high: u8) -> Result<GrayImage> {
    let (w, h) = img.dimensions();
    if low > high {
        return Err(Error::InvalidArgument(format!(
            "canny thresholds out of order: low {low} > high {high}"
        )));
    }
    if w < 5 || h < 5 {
        return Err(Error::InvalidArgument(format!(
            "canny needs at least 5x5 pixels, got {w}x{h}"
        )));
    }
    let smooth = convolve_separable(&to_field(img), w, h, &gaussian_kernel(CANNY_SIGMA, 2));
    let (gx, gy) = sobel_field(&smooth, w, h);
    let mag: Vec<f64> = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| (a * a + b * b).sqrt())
        .collect();

    // Non-maximum suppression. The comparison is strict on the "behind"
    // side and lenient ahead, so plateaus of two equal maxima thin to one.
    let mut thin = vec![0.0; w * h];
    let m = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let v = mag[i];
            if v == 0.0 {
                continue;
            }
            let (dx, dy) = gradient_bin(gx[i], gy[i]);
            if v > m(x - dx, y - dy) && v >= m(x + dx, y + dy) {
                thin[i] = v;
            }
        }
    }

    // Double threshold and 8-connected hysteresis from strong pixels.
    let (low, high) = (low as f64, high as f64);
    let mut out = vec![0u8; w * h];
    let mut stack: Vec<usize> = Vec::new();
    for (i, &v) in thin.iter().enumerate() {
        if v >= high && v > 0.0 {
            out[i] = 255;
            stack.push(i);
        }
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out[j] == 0 && thin[j] >= low && thin[j] > 0.0 {
                    out[j] = 255;
                    stack.push(j);
                }
            }
        }
    }
    GrayImage::new(w, h, out)
}

/// Quantizes the gradient direction to one of four neighbour offsets.
fn gradient_bin(gx: f64, gy: f64) -> (isize, isize) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (1, 0)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

/// Per-pixel `|a - b|`.
pub fn blend_difference(a: &GrayImage, b: &GrayImage) -> Result<GrayImage> {
    a.same_size(b)?;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| x.abs_diff(y))
        .collect();
    GrayImage::new(a.width(), a.height(), data)
}

/// Per-pixel `a - b + 128`, clamped to `0..=255`.
pub fn blend_grain_extract(a: &GrayImage, b: &GrayImage) -> Result<GrayImage> {
    a.same_size(b)?;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as i32 - y as i32 + 128).clamp(0, 255) as u8)
        .collect();
    GrayImage::new(a.width(), a.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vertical_step(w: usize, h: usize, at: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, _| if x < at { 0 } else { 255 })
    }

    #[test]
    fn sobel_uniform_is_zero() {
        let out = sobel(&GrayImage::filled(8, 8, 93)).unwrap();
        assert!(out.data().iter().all(|&p| p == 0));
    }

    #[test]
    fn sobel_vertical_step_saturates_next_to_the_step() {
        let out = sobel(&vertical_step(8, 6, 4)).unwrap();
        for y in 0..6 {
            assert_eq!(out.get(3, y), 255);
            assert_eq!(out.get(4, y), 255);
            assert_eq!(out.get(1, y), 0);
            assert_eq!(out.get(6, y), 0);
        }
    }

    #[test]
    fn sobel_commutes_with_transpose() {
        let img = GrayImage::from_fn(9, 7, |x, y| ((x * 37 + y * 91) % 251) as u8);
        assert_eq!(sobel(&img.transpose()).unwrap(), sobel(&img).unwrap().transpose());
        let step = vertical_step(8, 8, 4).transpose();
        let out = sobel(&step).unwrap();
        assert_eq!(out.get(2, 3), 255);
    }

    #[test]
    fn sobel_rejects_tiny_images() {
        assert!(sobel(&GrayImage::filled(2, 5, 0)).is_err());
    }

    #[test]
    fn canny_uniform_is_empty() {
        let out = canny(&GrayImage::filled(16, 16, 77), 50, 100).unwrap();
        assert!(out.data().iter().all(|&p| p == 0));
    }

    #[test]
    fn canny_step_gives_a_single_line() {
        let out = canny(&vertical_step(20, 20, 10), 50, 100).unwrap();
        for y in 3..17 {
            let row: Vec<usize> = (0..20).filter(|&x| out.get(x, y) == 255).collect();
            assert_eq!(row.len(), 1, "row {y}: {row:?}");
            assert!(row[0] == 9 || row[0] == 10);
        }
        assert!(out.data().iter().all(|&p| p == 0 || p == 255));
    }

    #[test]
    fn canny_threshold_order() {
        assert!(canny(&GrayImage::filled(8, 8, 0), 120, 100).is_err());
        assert!(canny(&GrayImage::filled(4, 8, 0), 10, 100).is_err());
    }

    #[test]
    fn blur_preserves_uniform() {
        let img = GrayImage::filled(10, 7, 201);
        assert_eq!(gaussian_blur(&img, 1.5).unwrap(), img);
        assert!(gaussian_blur(&img, 0.0).is_err());
    }

    #[test]
    fn blur_of_impulse_is_the_kernel() {
        let sigma = 1.0;
        let mut img = GrayImage::filled(15, 15, 0);
        img.set(7, 7, 255);
        let out = gaussian_blur(&img, sigma).unwrap();
        let k = gaussian_kernel(sigma, 3);
        for dy in 0..7 {
            for dx in 0..7 {
                let expected = (255.0 * k[dx] * k[dy]).round() as u8;
                assert_eq!(out.get(4 + dx, 4 + dy), expected);
            }
        }
    }

    #[test]
    fn blur_conserves_mass_of_interior_block() {
        let img = GrayImage::from_fn(40, 40, |x, y| {
            if (18..22).contains(&x) && (18..22).contains(&y) { 255 } else { 0 }
        });
        let before: f64 = img.data().iter().map(|&p| p as f64).sum();
        for sigma in [1.0, 1.5, 2.0] {
            let out = gaussian_blur(&img, sigma).unwrap();
            let after: f64 = out.data().iter().map(|&p| p as f64).sum();
            assert!((after / before - 1.0).abs() <= 0.005, "sigma {sigma}: {after}");
        }
    }

    #[test]
    fn kernel_matches_closed_form() {
        // Independent evaluation of exp(-i^2/2) / sum for sigma 1, radius 3.
        let raw: Vec<f64> = [9.0, 4.0, 1.0, 0.0, 1.0, 4.0, 9.0]
            .iter()
            .map(|s: &f64| (-s / 2.0).exp())
            .collect();
        let sum: f64 = raw.iter().sum();
        for (a, b) in gaussian_kernel(1.0, 3).iter().zip(raw.iter().map(|r| r / sum)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn highpass_uniform_and_impulse() {
        let out = gaussian_highpass(&GrayImage::filled(12, 12, 40), 2.0).unwrap();
        assert!(out.data().iter().all(|&p| p == 128));

        let mut img = GrayImage::filled(21, 21, 0);
        img.set(10, 10, 255);
        let sigma = 2.0;
        let out = gaussian_highpass(&img, sigma).unwrap();
        let k = gaussian_kernel(sigma, 6);
        let k00 = k[6] * k[6];
        let expected = (255.0 * (1.0 - k00) + 128.0).round().clamp(0.0, 255.0) as u8;
        assert_eq!(out.get(10, 10), expected);
        assert_eq!(out.data().iter().copied().max(), Some(expected));
    }

    #[test]
    fn highpass_mean_is_mid_gray() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let img = GrayImage::from_fn(40, 40, |_, _| rng.gen_range(90..=166));
            let out = gaussian_highpass(&img, 2.0).unwrap();
            assert!((out.mean() - 128.0).abs() <= 1.0, "{}", out.mean());
        }
    }

    #[test]
    fn blends() {
        let a = GrayImage::new(3, 1, vec![200, 100, 0]).unwrap();
        let b = GrayImage::new(3, 1, vec![50, 50, 255]).unwrap();
        assert_eq!(blend_difference(&a, &b).unwrap().data(), &[150, 50, 255]);
        assert_eq!(blend_difference(&a, &b).unwrap(), blend_difference(&b, &a).unwrap());
        assert_eq!(blend_grain_extract(&a, &b).unwrap().data(), &[255, 178, 0]);
        assert!(blend_difference(&a, &a)
            .unwrap()
            .data()
            .iter()
            .all(|&p| p == 0));
        assert!(blend_grain_extract(&a, &a)
            .unwrap()
            .data()
            .iter()
            .all(|&p| p == 128));
        assert!(blend_grain_extract(&a, &GrayImage::filled(2, 1, 0)).is_err());
    }

    #[test]
    fn apply_dispatch() {
        let flat = GrayImage::filled(8, 8, 10);
        let params = FilterParams::default();
        let inv = apply(
            FilterKind::new(FilterTag::Sobel, Variant::Inverse),
            &flat,
            &params,
        )
        .unwrap();
        assert!(inv.data().iter().all(|&p| p == 255));

        let img = GrayImage::from_fn(16, 16, |x, y| ((x * 13 + y * 29) % 256) as u8);
        for kind in FilterKind::all() {
            let out = apply(kind, &img, &params).unwrap();
            if kind.variant == Variant::Inverse {
                assert_eq!(out, invert(&apply(kind.direct(), &img, &params).unwrap()));
            }
            if kind.tag == FilterTag::Canny {
                assert!(out.data().iter().all(|&p| p == 0 || p == 255));
            }
        }
        assert_eq!(FilterKind::all().count(), 6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn image() -> impl Strategy<Value = GrayImage> {
            (5usize..14, 5usize..14).prop_flat_map(|(w, h)| {
                proptest::collection::vec(any::<u8>(), w * h)
                    .prop_map(move |d| GrayImage::new(w, h, d).unwrap())
            })
        }

        proptest! {
            #[test]
            fn sobel_rotation_covariant(img in image()) {
                prop_assert_eq!(sobel(&img.rotate90()).unwrap(), sobel(&img).unwrap().rotate90());
            }

            #[test]
            fn blend_relations(a in image()) {
                let b = a.rotate90().rotate90();
                let diff = blend_difference(&a, &b).unwrap();
                let grain = blend_grain_extract(&a, &b).unwrap();
                for (d, g) in diff.data().iter().zip(grain.data()) {
                    let dev = (*g as i32 - 128).unsigned_abs();
                    // On unclamped pixels the grain deviation equals the difference.
                    if *g != 0 && *g != 255 {
                        prop_assert_eq!(dev, *d as u32);
                    } else {
                        prop_assert!(dev <= *d as u32);
                    }
                }
            }

            #[test]
            fn canny_edges_lie_near_sobel_edges(img in image()) {
                // Every canny pixel sits within one pixel of a nonzero gradient.
                let c = canny(&img, 10, 30).unwrap();
                let s = sobel(&img).unwrap();
                let (w, h) = img.dimensions();
                for y in 0..h {
                    for x in 0..w {
                        if c.get(x, y) == 255 {
                            let near = (y.saturating_sub(2)..(y + 3).min(h)).any(|yy| {
                                (x.saturating_sub(2)..(x + 3).min(w)).any(|xx| s.get(xx, yy) > 0)
                            });
                            prop_assert!(near);
                        }
                    }
                }
            }
        }
    }
}
