use std::fmt::Debug;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Floating point element type of tensors and models.
pub trait Scalar: Float + Debug + Send + Sync + 'static {
    fn of(v: f64) -> Self {
        Self::from(v).expect("representable constant")
    }
}

impl<T: Float + Debug + Send + Sync + 'static> Scalar for T {}

/// Dense height x width x channels array, channels fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub h: usize,
    pub w: usize,
    pub c: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        Self {
            h,
            w,
            c,
            data: vec![T::zero(); h * w * c],
        }
    }

    pub fn from_vec(h: usize, w: usize, c: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != h * w * c {
            return Err(Error::SizeMismatch(format!(
                "tensor {h}x{w}x{c} needs {} values, got {}",
                h * w * c,
                data.len()
            )));
        }
        Ok(Self { h, w, c, data })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.h, self.w, self.c)
    }

    pub fn at(&self, y: usize, x: usize, ch: usize) -> T {
        self.data[(y * self.w + x) * self.c + ch]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Pixels scaled to [0, 1].
    pub fn from_image(img: &GrayImage) -> Self {
        Self {
            h: img.height(),
            w: img.width(),
            c: 1,
            data: img.data().iter().map(|&p| T::of(p as f64 / 255.0)).collect(),
        }
    }

    /// First channel back to 8-bit, clamped and rounded.
    pub fn to_image(&self) -> GrayImage {
        let data = (0..self.h * self.w)
            .map(|i| {
                let v = self.data[i * self.c].to_f64().unwrap_or(0.0);
                (v * 255.0).round().clamp(0.0, 255.0) as u8
            })
            .collect();
        GrayImage::new(self.w, self.h, data).expect("tensor shape is valid")
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            h: self.h,
            w: self.w,
            c: self.c,
            data: self.data.iter().map(|v| U::of(v.to_f64().unwrap_or(f64::NAN))).collect(),
        }
    }
}

/// Mean squared difference over all elements.
pub fn loss_mse<T: Scalar>(out: &Tensor<T>, target: &Tensor<T>) -> Result<f64> {
    if out.shape() != target.shape() {
        return Err(Error::SizeMismatch(format!(
            "{:?} vs {:?}",
            out.shape(),
            target.shape()
        )));
    }
    let n = out.data.len().max(1) as f64;
    Ok(out
        .data
        .iter()
        .zip(&target.data)
        .map(|(a, b)| {
            let d = (*a - *b).to_f64().unwrap_or(f64::NAN);
            d * d
        })
        .sum::<f64>()
        / n)
}
