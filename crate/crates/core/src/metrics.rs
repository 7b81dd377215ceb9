//! Raster comparison metrics and distribution summaries.

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Mean squared error on the 0..255 intensity scale.
pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.same_size(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SsimWindow {
    /// Unweighted square window.
    Uniform,
    /// Gaussian weights with the given sigma over the square window.
    Gaussian(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub weighting: SsimWindow,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 7,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
            weighting: SsimWindow::Uniform,
        }
    }
}

impl SsimParams {
    /// The classic 11x11 Gaussian (sigma 1.5) window.
    pub fn gaussian() -> Self {
        Self {
            window: 11,
            weighting: SsimWindow::Gaussian(1.5),
            ..Self::default()
        }
    }

    pub fn with_window(window: usize) -> Self {
        Self {
            window,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "ssim window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::InvalidArgument("ssim k1 and k2 must be positive".into()));
        }
        Ok(())
    }
}

/// Mean SSIM over every window position fully inside the images.
pub fn ssim(a: &GrayImage, b: &GrayImage, p: &SsimParams) -> Result<f64> {
    p.validate()?;
    a.same_size(b)?;
    let (w, h) = a.dimensions();
    if w < p.window || h < p.window {
        return Err(Error::InvalidArgument(format!(
            "{w}x{h} image is smaller than the {0}x{0} ssim window",
            p.window
        )));
    }
    let c1 = (p.k1 * p.dynamic_range).powi(2);
    let c2 = (p.k2 * p.dynamic_range).powi(2);
    let index = |mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64| {
        ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
            / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
    };
    let win = p.window;
    let positions = ((w - win + 1) * (h - win + 1)) as f64;
    let total = match p.weighting {
        SsimWindow::Uniform => {
            let sat = SummedAreas::new(a, b);
            let n = (win * win) as f64;
            let mut total = 0.0;
            for y in 0..=h - win {
                for x in 0..=w - win {
                    let [sa, sb, saa, sbb, sab] = sat.window(x, y, win);
                    let (mu_a, mu_b) = (sa / n, sb / n);
                    let var_a = saa / n - mu_a * mu_a;
                    let var_b = sbb / n - mu_b * mu_b;
                    let cov = sab / n - mu_a * mu_b;
                    total += index(mu_a, mu_b, var_a, var_b, cov);
                }
            }
            total
        }
        SsimWindow::Gaussian(sigma) => {
            let r = win as isize / 2;
            let mut weights = Vec::with_capacity(win * win);
            for dy in -r..=r {
                for dx in -r..=r {
                    weights.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp());
                }
            }
            let norm: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|v| *v /= norm);
            let mut total = 0.0;
            for y in 0..=h - win {
                for x in 0..=w - win {
                    let (mut ma, mut mb, mut maa, mut mbb, mut mab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for wy in 0..win {
                        for wx in 0..win {
                            let wt = weights[wy * win + wx];
                            let va = a.get(x + wx, y + wy) as f64;
                            let vb = b.get(x + wx, y + wy) as f64;
                            ma += wt * va;
                            mb += wt * vb;
                            maa += wt * va * va;
                            mbb += wt * vb * vb;
                            mab += wt * va * vb;
                        }
                    }
                    total += index(ma, mb, maa - ma * ma, mbb - mb * mb, mab - ma * mb);
                }
            }
            total
        }
    };
    Ok(total / positions)
}

/// Integral images of a, b, a^2, b^2 and ab. Entries are integers, so
/// f64 sums stay exact for any realistic image size.
struct SummedAreas {
    stride: usize,
    tables: [Vec<f64>; 5],
}

impl SummedAreas {
    fn new(a: &GrayImage, b: &GrayImage) -> Self {
        let (w, h) = a.dimensions();
        let stride = w + 1;
        let mut tables: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; stride * (h + 1)]);
        for y in 0..h {
            let mut row = [0.0; 5];
            for x in 0..w {
                let va = a.get(x, y) as f64;
                let vb = b.get(x, y) as f64;
                let vals = [va, vb, va * va, vb * vb, va * vb];
                for k in 0..5 {
                    row[k] += vals[k];
                    let above = tables[k][y * stride + x + 1];
                    tables[k][(y + 1) * stride + x + 1] = above + row[k];
                }
            }
        }
        Self { stride, tables }
    }

    fn window(&self, x: usize, y: usize, win: usize) -> [f64; 5] {
        let s = self.stride;
        std::array::from_fn(|k| {
            let t = &self.tables[k];
            t[(y + win) * s + x + win] - t[y * s + x + win] - t[(y + win) * s + x] + t[y * s + x]
        })
    }
}

/// Five-number summary plus population mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot summarize an empty list".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        n,
        mean,
        std: var.sqrt(),
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[n - 1],
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn noisy(seed: u64, w: usize, h: usize) -> GrayImage {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(w, h, |_, _| rng.gen())
    }

    /// Brute-force SSIM straight from the definition, for cross-checking.
    fn ssim_naive(a: &GrayImage, b: &GrayImage, win: usize) -> f64 {
        let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
        let (w, h) = a.dimensions();
        let mut total = 0.0;
        let mut count = 0.0;
        for y in 0..=h - win {
            for x in 0..=w - win {
                let mut va = Vec::new();
                let mut vb = Vec::new();
                for yy in y..y + win {
                    for xx in x..x + win {
                        va.push(a.get(xx, yy) as f64);
                        vb.push(b.get(xx, yy) as f64);
                    }
                }
                let n = va.len() as f64;
                let ma = va.iter().sum::<f64>() / n;
                let mb = vb.iter().sum::<f64>() / n;
                let sa = va.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / n;
                let sb = vb.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / n;
                let sab = va.iter().zip(&vb).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / n;
                total += ((2.0 * ma * mb + c1) * (2.0 * sab + c2))
                    / ((ma * ma + mb * mb + c1) * (sa + sb + c2));
                count += 1.0;
            }
        }
        total / count
    }

    #[test]
    fn mse_examples() {
        let a = GrayImage::from_fn(6, 4, |x, y| (x * 20 + y) as u8);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &a.map(|p| p + 10)).unwrap(), 100.0);
        let p = GrayImage::new(2, 1, vec![0, 255]).unwrap();
        let q = GrayImage::new(2, 1, vec![255, 0]).unwrap();
        assert_eq!(mse(&p, &q).unwrap(), 65025.0);
        assert!(mse(&p, &a).is_err());
    }

    #[test]
    fn ssim_identity_and_constant_case() {
        let a = noisy(1, 20, 16);
        assert!((ssim(&a, &a, &SsimParams::default()).unwrap() - 1.0).abs() <= 1e-12);
        let c100 = GrayImage::filled(16, 16, 100);
        let c120 = GrayImage::filled(16, 16, 120);
        let v = ssim(&c100, &c120, &SsimParams::default()).unwrap();
        assert!((v - 24006.5025 / 24406.5025).abs() < 1e-12);
        assert!((v - 0.9836).abs() < 1e-3);
    }

    #[test]
    fn ssim_matches_naive_definition() {
        let a = noisy(2, 17, 13);
        let b = noisy(3, 17, 13);
        let fast = ssim(&a, &b, &SsimParams::default()).unwrap();
        assert!((fast - ssim_naive(&a, &b, 7)).abs() < 1e-9);
        let c = a.map(|p| p / 2 + 60);
        let fast = ssim(&a, &c, &SsimParams::with_window(3)).unwrap();
        assert!((fast - ssim_naive(&a, &c, 3)).abs() < 1e-9);
    }

    #[test]
    fn ssim_symmetry_and_transpose() {
        let a = noisy(4, 24, 19);
        let b = noisy(5, 24, 19);
        for p in [SsimParams::default(), SsimParams::gaussian()] {
            let ab = ssim(&a, &b, &p).unwrap();
            assert!((ab - ssim(&b, &a, &p).unwrap()).abs() < 1e-14);
            let t = ssim(&a.transpose(), &b.transpose(), &p).unwrap();
            assert!((ab - t).abs() < 1e-12);
            assert!((-1.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn ssim_decreases_with_noise() {
        let base = GrayImage::from_fn(48, 48, |x, y| ((x * 5 + y * 3) % 200 + 20) as u8);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let noise: Vec<f64> = (0..48 * 48).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut last = 1.0;
        for amp in [5.0, 20.0, 60.0] {
            let data = base
                .data()
                .iter()
                .zip(&noise)
                .map(|(&p, n)| (p as f64 + amp * n).round().clamp(0.0, 255.0) as u8)
                .collect();
            let noisy = GrayImage::new(48, 48, data).unwrap();
            let s = ssim(&base, &noisy, &SsimParams::default()).unwrap();
            assert!(s < last, "amp {amp}: {s} !< {last}");
            last = s;
        }
    }

    #[test]
    fn ssim_errors() {
        let a = GrayImage::filled(5, 5, 0);
        assert!(ssim(&a, &a, &SsimParams::default()).is_err());
        assert!(ssim(&a, &a, &SsimParams::with_window(4)).is_err());
        assert!(ssim(&a, &GrayImage::filled(5, 6, 0), &SsimParams::with_window(3)).is_err());
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[5.0]).unwrap();
        assert_eq!((s.mean, s.std, s.min, s.q1, s.median, s.q3, s.max), (5.0, 0.0, 5.0, 5.0, 5.0, 5.0, 5.0));
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
        assert!(summarize(&[]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn summary_is_ordered(values in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let s = summarize(&values).unwrap();
            proptest::prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        }

        #[test]
        fn mse_symmetric(seed in 0u64..1000) {
            let a = noisy(seed, 9, 7);
            let b = noisy(seed + 1, 9, 7);
            proptest::prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
            proptest::prop_assert_eq!(ssim(&a, &a, &SsimParams::with_window(3)).unwrap(), 1.0);
        }
    }
}
