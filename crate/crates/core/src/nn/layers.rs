//! Layer kernels on single tensors (or batches, for batch norm), each
//! with its exact backward pass.

use crate::error::{Error, Result};

use super::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

/// Shape and kind of one layer. Kernels are laid out
/// `(kh, kw, in_c, out_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    /// Stride-1 cross-correlation with zero "same" padding.
    Conv {
        kh: usize,
        kw: usize,
        in_c: usize,
        out_c: usize,
    },
    /// 2x2 non-overlapping max pooling.
    MaxPool2,
    /// Scatters each input value through the kernel onto a grid `stride`
    /// times larger.
    ConvTranspose {
        kh: usize,
        kw: usize,
        in_c: usize,
        out_c: usize,
        stride: usize,
    },
    BatchNorm {
        c: usize,
        eps: f64,
        momentum: f64,
    },
    Activation(Activation),
}

impl LayerSpec {
    /// Shapes of the trainable parameter arrays.
    pub fn param_lens(&self) -> Vec<usize> {
        match *self {
            LayerSpec::Conv { kh, kw, in_c, out_c }
            | LayerSpec::ConvTranspose {
                kh, kw, in_c, out_c, ..
            } => vec![kh * kw * in_c * out_c, out_c],
            LayerSpec::BatchNorm { c, .. } => vec![c, c],
            LayerSpec::MaxPool2 | LayerSpec::Activation(_) => vec![],
        }
    }

    /// Output shape for a given input shape.
    pub fn output_shape(&self, (h, w, c): (usize, usize, usize)) -> Result<(usize, usize, usize)> {
        match *self {
            LayerSpec::Conv { in_c, out_c, .. } => {
                check_channels(c, in_c)?;
                Ok((h, w, out_c))
            }
            LayerSpec::ConvTranspose {
                in_c, out_c, stride, ..
            } => {
                check_channels(c, in_c)?;
                Ok((h * stride, w * stride, out_c))
            }
            LayerSpec::MaxPool2 => {
                if h % 2 != 0 || w % 2 != 0 {
                    return Err(Error::SizeMismatch(format!("max pooling needs even sides, got {h}x{w}")));
                }
                Ok((h / 2, w / 2, c))
            }
            LayerSpec::BatchNorm { c: bc, .. } => {
                check_channels(c, bc)?;
                Ok((h, w, c))
            }
            LayerSpec::Activation(_) => Ok((h, w, c)),
        }
    }
}

fn check_channels(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::SizeMismatch(format!("expected {want} channels, got {got}")));
    }
    Ok(())
}

fn check_kernel<T>(w: &[T], b: &[T], kh: usize, kw: usize, in_c: usize, out_c: usize) -> Result<()> {
    if w.len() != kh * kw * in_c * out_c || b.len() != out_c {
        return Err(Error::SizeMismatch(format!(
            "kernel {kh}x{kw}x{in_c}x{out_c} with {} weights and {} biases",
            w.len(),
            b.len()
        )));
    }
    Ok(())
}

/// A row segment over which one kernel tap connects consecutive input
/// pixels to output pixels `out_step` apart.
#[derive(Debug, Clone, Copy)]
struct Run {
    tap: usize,
    input: usize,
    output: usize,
    len: usize,
}

/// Runs of a stride-1 same-padded convolution on an `h`x`w` input.
fn conv_runs(h: usize, w: usize, kh: usize, kw: usize) -> Vec<Run> {
    let (ph, pw) = (((kh - 1) / 2) as isize, ((kw - 1) / 2) as isize);
    let (hi, wi) = (h as isize, w as isize);
    let mut runs = Vec::new();
    for y in 0..hi {
        for ky in 0..kh as isize {
            let iy = y + ky - ph;
            if !(0..hi).contains(&iy) {
                continue;
            }
            for kx in 0..kw as isize {
                let x0 = (pw - kx).max(0);
                let x1 = (wi + pw - kx).min(wi);
                if x1 > x0 {
                    runs.push(Run {
                        tap: (ky * kw as isize + kx) as usize,
                        input: (iy * wi + x0 + kx - pw) as usize,
                        output: (y * wi + x0) as usize,
                        len: (x1 - x0) as usize,
                    });
                }
            }
        }
    }
    runs
}

/// Runs of a transposed convolution: input pixel (y, x) reaches output
/// (s*y + ky - p, s*x + kx - p) with p = max(k - s, 0) / 2.
fn transpose_runs(h: usize, w: usize, kh: usize, kw: usize, s: usize) -> Vec<Run> {
    let (ph, pw) = ((kh.saturating_sub(s) / 2) as isize, (kw.saturating_sub(s) / 2) as isize);
    let (hi, wi, si) = (h as isize, w as isize, s as isize);
    let (oh, ow) = (hi * si, wi * si);
    let mut runs = Vec::new();
    for y in 0..hi {
        for ky in 0..kh as isize {
            let oy = si * y + ky - ph;
            if !(0..oh).contains(&oy) {
                continue;
            }
            for kx in 0..kw as isize {
                let off = kx - pw;
                // smallest x with s*x + off >= 0, largest with s*x + off < ow
                let x0 = if off >= 0 { 0 } else { (-off + si - 1) / si };
                let x1 = if ow - 1 - off < 0 { 0 } else { ((ow - 1 - off) / si + 1).min(wi) };
                if x1 > x0 {
                    runs.push(Run {
                        tap: (ky * kw as isize + kx) as usize,
                        input: (y * wi + x0) as usize,
                        output: (oy * ow + si * x0 + off) as usize,
                        len: (x1 - x0) as usize,
                    });
                }
            }
        }
    }
    runs
}

/// Fixed channel counts let the compiler unroll the per-pixel products.
#[inline(always)]
fn run_fwd_n<T: Scalar, const I: usize, const O: usize>(out: &mut [T], step: usize, inp: &[T], wk: &[T], r: Run) {
    let mut wl = [[T::zero(); O]; I];
    for (row, src) in wl.iter_mut().zip(wk.chunks_exact(O)) {
        row.copy_from_slice(src);
    }
    for p in 0..r.len {
        let x: &[T; I] = inp[(r.input + p) * I..(r.input + p + 1) * I].try_into().expect("pixel");
        let o = (r.output + p * step) * O;
        let acc: &mut [T; O] = (&mut out[o..o + O]).try_into().expect("pixel");
        let mut a = *acc;
        for i in 0..I {
            for k in 0..O {
                a[k] = a[k] + x[i] * wl[i][k];
            }
        }
        *acc = a;
    }
}

fn run_fwd_dyn<T: Scalar>(out: &mut [T], step: usize, inp: &[T], wk: &[T], r: Run, ic: usize, oc: usize) {
    for p in 0..r.len {
        let x = &inp[(r.input + p) * ic..(r.input + p + 1) * ic];
        let o = (r.output + p * step) * oc;
        let acc = &mut out[o..o + oc];
        for (&v, row) in x.iter().zip(wk.chunks_exact(oc)) {
            for (a, &k) in acc.iter_mut().zip(row) {
                *a = *a + v * k;
            }
        }
    }
}

#[inline(always)]
fn run_bwd_n<T: Scalar, const I: usize, const O: usize>(
    dout: &[T],
    step: usize,
    inp: &[T],
    wk: &[T],
    din: &mut [T],
    dwk: &mut [T],
    r: Run,
) {
    let mut wt = [[T::zero(); I]; O];
    for (i, src) in wk.chunks_exact(O).enumerate() {
        for k in 0..O {
            wt[k][i] = src[k];
        }
    }
    for p in 0..r.len {
        let o = (r.output + p * step) * O;
        let dy: &[T; O] = dout[o..o + O].try_into().expect("pixel");
        let ip = (r.input + p) * I;
        let dx: &mut [T; I] = (&mut din[ip..ip + I]).try_into().expect("pixel");
        let mut a = *dx;
        for k in 0..O {
            for i in 0..I {
                a[i] = a[i] + dy[k] * wt[k][i];
            }
        }
        *dx = a;
    }
    // narrow outputs get four interleaved accumulators to break the add chain
    let dy_at = |p: usize| -> &[T; O] {
        let o = (r.output + p * step) * O;
        dout[o..o + O].try_into().expect("pixel")
    };
    for (i, dst) in dwk.chunks_exact_mut(O).enumerate() {
        let x_at = |p: usize| inp[(r.input + p) * I + i];
        let mut acc = [[T::zero(); O]; 4];
        let mut p = 0;
        while O < 4 && p + 4 <= r.len {
            for (l, lane) in acc.iter_mut().enumerate() {
                let (v, dy) = (x_at(p + l), dy_at(p + l));
                for k in 0..O {
                    lane[k] = lane[k] + v * dy[k];
                }
            }
            p += 4;
        }
        for q in p..r.len {
            let (v, dy) = (x_at(q), dy_at(q));
            for k in 0..O {
                acc[0][k] = acc[0][k] + v * dy[k];
            }
        }
        for k in 0..O {
            dst[k] = dst[k] + ((acc[0][k] + acc[1][k]) + (acc[2][k] + acc[3][k]));
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_bwd_dyn<T: Scalar>(
    dout: &[T],
    step: usize,
    inp: &[T],
    wk: &[T],
    din: &mut [T],
    dwk: &mut [T],
    r: Run,
    ic: usize,
    oc: usize,
) {
    let mut dw = vec![T::zero(); ic * oc];
    for p in 0..r.len {
        let o = (r.output + p * step) * oc;
        let dy = &dout[o..o + oc];
        let ip = (r.input + p) * ic;
        for i in 0..ic {
            let mut s = T::zero();
            for k in 0..oc {
                s = s + wk[i * oc + k] * dy[k];
                dw[i * oc + k] = dw[i * oc + k] + inp[ip + i] * dy[k];
            }
            din[ip + i] = din[ip + i] + s;
        }
    }
    for (d, s) in dwk.iter_mut().zip(dw) {
        *d = *d + s;
    }
}

macro_rules! dispatch {
    ($ic:expr, $oc:expr, $fixed:ident ($($a:expr),*), $dynamic:expr) => {
        match ($ic, $oc) {
            (1, 16) => $fixed::<T, 1, 16>($($a),*),
            (16, 8) => $fixed::<T, 16, 8>($($a),*),
            (8, 8) => $fixed::<T, 8, 8>($($a),*),
            (8, 4) => $fixed::<T, 8, 4>($($a),*),
            (4, 4) => $fixed::<T, 4, 4>($($a),*),
            (4, 8) => $fixed::<T, 4, 8>($($a),*),
            (8, 16) => $fixed::<T, 8, 16>($($a),*),
            (8, 1) => $fixed::<T, 8, 1>($($a),*),
            _ => $dynamic,
        }
    };
}

fn apply_runs<T: Scalar>(runs: &[Run], step: usize, input: &Tensor<T>, w: &[T], out: &mut Tensor<T>) {
    let (ic, oc) = (input.c, out.c);
    let tap = ic * oc;
    for &r in runs {
        let wk = &w[r.tap * tap..(r.tap + 1) * tap];
        let (o, x) = (&mut out.data, &input.data);
        dispatch!(ic, oc, run_fwd_n(o, step, x, wk, r), run_fwd_dyn(o, step, x, wk, r, ic, oc));
    }
}

fn back_runs<T: Scalar>(runs: &[Run], step: usize, input: &Tensor<T>, w: &[T], dout: &Tensor<T>, dw: &mut [T]) -> Tensor<T> {
    let (ic, oc) = (input.c, dout.c);
    let tap = ic * oc;
    let mut din = Tensor::zeros(input.h, input.w, ic);
    for &r in runs {
        let wk = &w[r.tap * tap..(r.tap + 1) * tap];
        let dwk = &mut dw[r.tap * tap..(r.tap + 1) * tap];
        let (g, x, dx) = (&dout.data, &input.data, &mut din.data);
        dispatch!(
            ic,
            oc,
            run_bwd_n(g, step, x, wk, dx, dwk, r),
            run_bwd_dyn(g, step, x, wk, dx, dwk, r, ic, oc)
        );
    }
    din
}

fn with_bias<T: Scalar>(h: usize, w: usize, b: &[T]) -> Tensor<T> {
    let c = b.len();
    let mut out = Tensor::zeros(h, w, c);
    for px in out.data.chunks_exact_mut(c) {
        px.copy_from_slice(b);
    }
    out
}

fn add_bias_grad<T: Scalar>(dout: &Tensor<T>, db: &mut [T]) {
    for px in dout.data.chunks_exact(dout.c) {
        for (d, &g) in db.iter_mut().zip(px) {
            *d = *d + g;
        }
    }
}

pub fn conv2d_forward<T: Scalar>(input: &Tensor<T>, kh: usize, kw: usize, w: &[T], b: &[T]) -> Result<Tensor<T>> {
    check_kernel(w, b, kh, kw, input.c, b.len())?;
    let mut out = with_bias(input.h, input.w, b);
    apply_runs(&conv_runs(input.h, input.w, kh, kw), 1, input, w, &mut out);
    Ok(out)
}

/// Returns the input gradient and accumulates into `dw`, `db`.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kh: usize,
    kw: usize,
    w: &[T],
    dout: &Tensor<T>,
    dw: &mut [T],
    db: &mut [T],
) -> Tensor<T> {
    add_bias_grad(dout, db);
    back_runs(&conv_runs(input.h, input.w, kh, kw), 1, input, w, dout, dw)
}

pub fn conv_transpose_forward<T: Scalar>(
    input: &Tensor<T>,
    kh: usize,
    kw: usize,
    w: &[T],
    b: &[T],
    stride: usize,
) -> Result<Tensor<T>> {
    check_kernel(w, b, kh, kw, input.c, b.len())?;
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be positive".into()));
    }
    let mut out = with_bias(input.h * stride, input.w * stride, b);
    apply_runs(&transpose_runs(input.h, input.w, kh, kw, stride), stride, input, w, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub fn conv_transpose_backward<T: Scalar>(
    input: &Tensor<T>,
    kh: usize,
    kw: usize,
    w: &[T],
    stride: usize,
    dout: &Tensor<T>,
    dw: &mut [T],
    db: &mut [T],
) -> Tensor<T> {
    add_bias_grad(dout, db);
    back_runs(&transpose_runs(input.h, input.w, kh, kw, stride), stride, input, w, dout, dw)
}

/// Pooled tensor and, per output element, the flat index of the input
/// element that won.
pub fn maxpool2_forward<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<u32>)> {
    let (oh, ow, c) = LayerSpec::MaxPool2.output_shape(input.shape())?;
    let mut out = Tensor::zeros(oh, ow, c);
    let mut arg = vec![0u32; oh * ow * c];
    for y in 0..oh {
        for x in 0..ow {
            for ch in 0..c {
                let mut best = usize::MAX;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let i = ((2 * y + dy) * input.w + 2 * x + dx) * c + ch;
                    if best == usize::MAX || input.data[i] > input.data[best] {
                        best = i;
                    }
                }
                let o = (y * ow + x) * c + ch;
                out.data[o] = input.data[best];
                arg[o] = best as u32;
            }
        }
    }
    Ok((out, arg))
}

pub fn maxpool2_backward<T: Scalar>(dout: &Tensor<T>, arg: &[u32], in_shape: (usize, usize, usize)) -> Tensor<T> {
    let mut din = Tensor::zeros(in_shape.0, in_shape.1, in_shape.2);
    for (&g, &i) in dout.data.iter().zip(arg) {
        din.data[i as usize] = din.data[i as usize] + g;
    }
    din
}

pub fn activation_forward<T: Scalar>(act: Activation, input: &Tensor<T>) -> Tensor<T> {
    let f = |v: T| match act {
        Activation::Relu => v.max(T::zero()),
        Activation::Sigmoid => T::one() / (T::one() + (-v).exp()),
    };
    Tensor {
        h: input.h,
        w: input.w,
        c: input.c,
        data: input.data.iter().map(|&v| f(v)).collect(),
    }
}

/// Needs the layer's input (ReLU) or output (sigmoid).
pub fn activation_backward<T: Scalar>(act: Activation, input: &Tensor<T>, output: &Tensor<T>, dout: &Tensor<T>) -> Tensor<T> {
    let data = match act {
        Activation::Relu => input
            .data
            .iter()
            .zip(&dout.data)
            .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
            .collect(),
        Activation::Sigmoid => output
            .data
            .iter()
            .zip(&dout.data)
            .map(|(&s, &g)| g * s * (T::one() - s))
            .collect(),
    };
    Tensor {
        h: dout.h,
        w: dout.w,
        c: dout.c,
        data,
    }
}

#[derive(Debug, Clone, Copy)]
pub enum BnMode<'a, T> {
    /// Normalize by the batch's own statistics.
    Train,
    /// Normalize by running statistics.
    Infer { mean: &'a [T], var: &'a [T] },
}

/// What batch-norm backward needs from the forward pass.
#[derive(Debug, Clone)]
pub struct BnCache<T> {
    pub xhat: Vec<Tensor<T>>,
    pub inv_std: Vec<T>,
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

pub fn batchnorm_forward<T: Scalar>(
    batch: &[Tensor<T>],
    gamma: &[T],
    beta: &[T],
    eps: f64,
    mode: BnMode<'_, T>,
) -> Result<(Vec<Tensor<T>>, BnCache<T>)> {
    let c = gamma.len();
    if beta.len() != c || batch.iter().any(|t| t.c != c) {
        return Err(Error::SizeMismatch(format!("batch norm over {c} channels")));
    }
    let (mean, var) = match mode {
        BnMode::Train => {
            if batch.len() < 2 {
                return Err(Error::InvalidArgument(
                    "batch norm training needs a batch of at least 2".into(),
                ));
            }
            let mut sum = vec![0.0f64; c];
            let mut n = 0usize;
            for t in batch {
                for px in t.data.chunks_exact(c) {
                    for (s, v) in sum.iter_mut().zip(px) {
                        *s += v.to_f64().unwrap_or(f64::NAN);
                    }
                }
                n += t.h * t.w;
            }
            let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
            let mut sq = vec![0.0f64; c];
            for t in batch {
                for px in t.data.chunks_exact(c) {
                    for ((s, v), m) in sq.iter_mut().zip(px).zip(&mean) {
                        let d = v.to_f64().unwrap_or(f64::NAN) - m;
                        *s += d * d;
                    }
                }
            }
            (
                mean.iter().map(|&m| T::of(m)).collect::<Vec<T>>(),
                sq.iter().map(|s| T::of(s / n as f64)).collect::<Vec<T>>(),
            )
        }
        BnMode::Infer { mean, var } => {
            if mean.len() != c || var.len() != c {
                return Err(Error::SizeMismatch("running statistics".into()));
            }
            (mean.to_vec(), var.to_vec())
        }
    };
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + T::of(eps)).sqrt()).collect();
    let mut xhat = Vec::with_capacity(batch.len());
    let mut out = Vec::with_capacity(batch.len());
    for t in batch {
        let mut xh = t.clone();
        let mut y = t.clone();
        for (xp, yp) in xh.data.chunks_exact_mut(c).zip(y.data.chunks_exact_mut(c)) {
            for ch in 0..c {
                let v = (xp[ch] - mean[ch]) * inv_std[ch];
                xp[ch] = v;
                yp[ch] = gamma[ch] * v + beta[ch];
            }
        }
        xhat.push(xh);
        out.push(y);
    }
    Ok((out, BnCache { xhat, inv_std, mean, var }))
}

/// Backward through training-mode batch norm.
pub fn batchnorm_backward<T: Scalar>(
    dout: &[Tensor<T>],
    gamma: &[T],
    cache: &BnCache<T>,
    dgamma: &mut [T],
    dbeta: &mut [T],
) -> Vec<Tensor<T>> {
    let c = gamma.len();
    let mut sum_dy = vec![T::zero(); c];
    let mut sum_dy_xhat = vec![T::zero(); c];
    let mut n = 0usize;
    for (g, xh) in dout.iter().zip(&cache.xhat) {
        for (gp, xp) in g.data.chunks_exact(c).zip(xh.data.chunks_exact(c)) {
            for ch in 0..c {
                sum_dy[ch] = sum_dy[ch] + gp[ch];
                sum_dy_xhat[ch] = sum_dy_xhat[ch] + gp[ch] * xp[ch];
            }
        }
        n += g.h * g.w;
    }
    for ch in 0..c {
        dbeta[ch] = dbeta[ch] + sum_dy[ch];
        dgamma[ch] = dgamma[ch] + sum_dy_xhat[ch];
    }
    let nf = T::of(n as f64);
    let scale: Vec<T> = (0..c).map(|ch| gamma[ch] * cache.inv_std[ch] / nf).collect();
    dout.iter()
        .zip(&cache.xhat)
        .map(|(g, xh)| {
            let mut dx = g.clone();
            for (dp, xp) in dx.data.chunks_exact_mut(c).zip(xh.data.chunks_exact(c)) {
                for ch in 0..c {
                    dp[ch] = scale[ch] * (nf * dp[ch] - sum_dy[ch] - xp[ch] * sum_dy_xhat[ch]);
                }
            }
            dx
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: usize, w: usize, c: usize, v: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(h, w, c, v.to_vec()).unwrap()
    }

    #[test]
    fn identity_kernel() {
        let x = t(3, 3, 1, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let mut k = vec![0.0; 9];
        k[4] = 1.0;
        assert_eq!(conv2d_forward(&x, 3, 3, &k, &[0.0]).unwrap(), x);
    }

    #[test]
    fn zero_kernel_gives_bias() {
        let x = t(2, 3, 2, &[1.0, -2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 1.0, 2.0, 3.0]);
        let y = conv2d_forward(&x, 3, 3, &[0.0; 18], &[0.7]).unwrap();
        assert!(y.data.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn two_by_two_kernel_at_origin() {
        let x = t(2, 2, 1, &[1.0, 2.0, 3.0, 4.0]);
        let y = conv2d_forward(&x, 2, 2, &[1.0, 0.0, 0.0, 1.0], &[0.0]).unwrap();
        assert_eq!(y.at(0, 0, 0), 5.0);
    }

    #[test]
    fn pooling() {
        let x = t(2, 2, 1, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(maxpool2_forward(&x).unwrap().0.data, vec![4.0]);
        let ramp: Vec<f64> = (0..16).map(f64::from).collect();
        let (y, arg) = maxpool2_forward(&t(4, 4, 1, &ramp)).unwrap();
        assert_eq!(y.data, vec![5.0, 7.0, 13.0, 15.0]);
        assert_eq!(arg, vec![5, 7, 13, 15]);
        let c = maxpool2_forward(&t(4, 2, 1, &[3.0; 8])).unwrap().0;
        assert_eq!(c.shape(), (2, 1, 1));
        assert!(c.data.iter().all(|&v| v == 3.0));
        assert!(maxpool2_forward(&t(3, 2, 1, &[0.0; 6])).is_err());
    }

    #[test]
    fn transpose_scatters_kernel() {
        let x = t(1, 1, 1, &[2.5]);
        let k = [1.0, 2.0, 3.0, 4.0];
        let y = conv_transpose_forward(&x, 2, 2, &k, &[0.0], 2).unwrap();
        assert_eq!(y.shape(), (2, 2, 1));
        assert_eq!(y.data, vec![2.5, 5.0, 7.5, 10.0]);
        let z = conv_transpose_forward(&t(2, 2, 1, &[0.0; 4]), 3, 3, &[1.0; 9], &[0.0], 2).unwrap();
        assert!(z.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn transpose_is_linear() {
        let a = t(2, 3, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0, 0.0, 2.0, 1.0, 1.0, -2.0, 4.0]);
        let b = t(2, 3, 2, &[0.5, -1.0, 2.0, 0.0, 1.0, 1.0, 3.0, -2.0, 0.0, 1.0, 2.0, 0.5]);
        let sum = t(2, 3, 2, &a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect::<Vec<_>>());
        let k: Vec<f64> = (0..36).map(|i| (i as f64 * 0.37).sin()).collect();
        let f = |x: &Tensor<f64>| conv_transpose_forward(x, 3, 3, &k, &[0.0, 0.0], 2).unwrap();
        let (fa, fb, fs) = (f(&a), f(&b), f(&sum));
        for i in 0..fs.data.len() {
            assert!((fs.data[i] - fa.data[i] - fb.data[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn batchnorm_examples() {
        let batch = vec![t(1, 1, 1, &[1.0]), t(1, 1, 1, &[3.0])];
        let (y, _) = batchnorm_forward(&batch, &[1.0], &[0.0], 0.0, BnMode::Train).unwrap();
        assert_eq!((y[0].data[0], y[1].data[0]), (-1.0, 1.0));

        let batch = vec![t(2, 2, 1, &[0.3, 5.0, -2.0, 8.0]), t(2, 2, 1, &[1.0, 1.5, 9.0, 0.0])];
        let (y, _) = batchnorm_forward(&batch, &[1.0], &[0.0], 1e-5, BnMode::Train).unwrap();
        let vals: Vec<f64> = y.iter().flat_map(|t| t.data.clone()).collect();
        let mean = vals.iter().sum::<f64>() / 8.0;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
        assert!(mean.abs() < 1e-5);
        assert!((var - 1.0).abs() < 1e-3);

        let x = vec![t(1, 2, 1, &[0.25, -4.0])];
        let (y, _) = batchnorm_forward(&x, &[1.0], &[0.0], 0.0, BnMode::Infer { mean: &[0.0], var: &[1.0] }).unwrap();
        assert_eq!(y, x);
        assert!(batchnorm_forward(&x, &[1.0], &[0.0], 1e-3, BnMode::Train).is_err());
    }
}
