use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

use super::layers::{self, Activation, BnCache, BnMode, LayerSpec};
use super::tensor::{loss_mse, Scalar, Tensor};

pub const DEFAULT_SIDE: usize = 256;
pub const BN_EPS: f64 = 1e-3;
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub spec: LayerSpec,
    /// Kernel and bias, or batch-norm gamma and beta.
    pub params: Vec<Vec<T>>,
    /// Batch-norm running mean and variance; empty otherwise.
    pub running: Vec<Vec<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub side: usize,
    pub layers: Vec<Layer<T>>,
    /// Index of the layer whose output is the bottleneck code.
    pub bottleneck: usize,
}

/// Activations and per-layer state recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    /// `acts[0]` is the input batch, `acts[l + 1]` the output of layer `l`.
    pub acts: Vec<Vec<Tensor<T>>>,
    pool_args: Vec<Vec<Vec<u32>>>,
    bn: Vec<Option<BnCache<T>>>,
    /// Running statistics a training step would leave behind.
    pub running: Vec<Vec<Vec<T>>>,
}

impl<T> Trace<T> {
    pub fn output(&self) -> &[Tensor<T>] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Parameter gradients, shaped like `Layer::params`.
pub type Gradients<T> = Vec<Vec<Vec<T>>>;

fn conv(k: usize, in_c: usize, out_c: usize) -> LayerSpec {
    LayerSpec::Conv {
        kh: k,
        kw: k,
        in_c,
        out_c,
    }
}

fn convt(in_c: usize, out_c: usize, stride: usize) -> LayerSpec {
    LayerSpec::ConvTranspose {
        kh: 3,
        kw: 3,
        in_c,
        out_c,
        stride,
    }
}

fn bn(c: usize) -> LayerSpec {
    LayerSpec::BatchNorm {
        c,
        eps: BN_EPS,
        momentum: BN_MOMENTUM,
    }
}

const RELU: LayerSpec = LayerSpec::Activation(Activation::Relu);
const SIGMOID: LayerSpec = LayerSpec::Activation(Activation::Sigmoid);

/// Encoder 16/8/8/4 with three 2x2 poolings, decoder of three stride-2
/// transposed convolutions, one stride-1 block and a 1-channel output conv.
pub fn autoencoder_specs() -> (Vec<LayerSpec>, usize) {
    let mut s = vec![
        conv(3, 1, 16),
        RELU,
        LayerSpec::MaxPool2,
        conv(3, 16, 8),
        RELU,
        LayerSpec::MaxPool2,
        conv(3, 8, 8),
        RELU,
        LayerSpec::MaxPool2,
        conv(3, 8, 4),
        RELU,
    ];
    let bottleneck = s.len() - 1;
    for (i, o, st) in [(4, 4, 2), (4, 8, 2), (8, 16, 2), (16, 8, 1)] {
        s.extend([convt(i, o, st), RELU, bn(o)]);
    }
    s.extend([conv(3, 8, 1), SIGMOID]);
    (s, bottleneck)
}

impl<T: Scalar> Model<T> {
    /// The standard autoencoder for `side`x`side` inputs, Glorot-uniform
    /// initialized from `seed`.
    pub fn autoencoder(side: usize, seed: u64) -> Result<Self> {
        let (specs, bottleneck) = autoencoder_specs();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new(side, specs, bottleneck, &mut rng)
    }

    pub fn new(side: usize, specs: Vec<LayerSpec>, bottleneck: usize, rng: &mut impl Rng) -> Result<Self> {
        let layers = specs
            .into_iter()
            .map(|spec| {
                let params = match spec {
                    LayerSpec::Conv { kh, kw, in_c, out_c }
                    | LayerSpec::ConvTranspose {
                        kh, kw, in_c, out_c, ..
                    } => {
                        let limit = (6.0 / ((kh * kw * (in_c + out_c)) as f64)).sqrt();
                        let w = (0..kh * kw * in_c * out_c)
                            .map(|_| T::of(rng.gen_range(-limit..limit)))
                            .collect();
                        vec![w, vec![T::zero(); out_c]]
                    }
                    LayerSpec::BatchNorm { c, .. } => vec![vec![T::one(); c], vec![T::zero(); c]],
                    _ => vec![],
                };
                Layer {
                    running: default_running(&spec),
                    spec,
                    params,
                }
            })
            .collect();
        let m = Model {
            side,
            layers,
            bottleneck,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks parameter sizes and that the layers map (side, side, 1)
    /// back to itself.
    pub fn validate(&self) -> Result<()> {
        if self.side == 0 || self.side % 8 != 0 {
            return Err(Error::BadModel(format!("side {} is not a positive multiple of 8", self.side)));
        }
        if self.bottleneck >= self.layers.len() {
            return Err(Error::BadModel("bottleneck index out of range".into()));
        }
        let mut shape = (self.side, self.side, 1);
        for (i, l) in self.layers.iter().enumerate() {
            let lens: Vec<usize> = l.params.iter().map(Vec::len).collect();
            let run: Vec<usize> = l.running.iter().map(Vec::len).collect();
            let want_run: Vec<usize> = default_running::<T>(&l.spec).iter().map(Vec::len).collect();
            if lens != l.spec.param_lens() || run != want_run {
                return Err(Error::BadModel(format!("layer {i}: parameter shapes do not match {:?}", l.spec)));
            }
            shape = l
                .spec
                .output_shape(shape)
                .map_err(|e| Error::BadModel(format!("layer {i}: {e}")))?;
        }
        if shape != (self.side, self.side, 1) {
            return Err(Error::BadModel(format!("output shape {shape:?} differs from input")));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().flat_map(|l| &l.params).map(Vec::len).sum()
    }

    /// Shape after each layer for a single-channel input.
    pub fn shape_trace(&self) -> Vec<(usize, usize, usize)> {
        let mut shape = (self.side, self.side, 1);
        self.layers
            .iter()
            .map(|l| {
                shape = l.spec.output_shape(shape).expect("validated model");
                shape
            })
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let c = |v: &Vec<Vec<T>>| -> Vec<Vec<U>> {
            v.iter()
                .map(|p| p.iter().map(|x| U::of(x.to_f64().unwrap_or(f64::NAN))).collect())
                .collect()
        };
        Model {
            side: self.side,
            bottleneck: self.bottleneck,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    spec: l.spec,
                    params: c(&l.params),
                    running: c(&l.running),
                })
                .collect(),
        }
    }

    pub fn zero_gradients(&self) -> Gradients<T> {
        self.layers
            .iter()
            .map(|l| l.params.iter().map(|p| vec![T::zero(); p.len()]).collect())
            .collect()
    }

    pub fn forward_batch(&self, batch: &[Tensor<T>], mode: Mode) -> Result<Trace<T>> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        for t in batch {
            if t.shape() != (self.side, self.side, 1) {
                return Err(Error::SizeMismatch(format!(
                    "model expects {0}x{0}x1 input, got {1:?}",
                    self.side,
                    t.shape()
                )));
            }
        }
        let n = self.layers.len();
        let mut trace = Trace {
            acts: Vec::with_capacity(n + 1),
            pool_args: vec![Vec::new(); n],
            bn: vec![None; n],
            running: self.layers.iter().map(|l| l.running.clone()).collect(),
        };
        trace.acts.push(batch.to_vec());
        for (i, l) in self.layers.iter().enumerate() {
            let x = &trace.acts[i];
            let y: Vec<Tensor<T>> = match l.spec {
                LayerSpec::Conv { kh, kw, .. } => x
                    .iter()
                    .map(|t| layers::conv2d_forward(t, kh, kw, &l.params[0], &l.params[1]))
                    .collect::<Result<_>>()?,
                LayerSpec::ConvTranspose { kh, kw, stride, .. } => x
                    .iter()
                    .map(|t| layers::conv_transpose_forward(t, kh, kw, &l.params[0], &l.params[1], stride))
                    .collect::<Result<_>>()?,
                LayerSpec::MaxPool2 => {
                    let mut out = Vec::with_capacity(x.len());
                    for t in x {
                        let (y, arg) = layers::maxpool2_forward(t)?;
                        out.push(y);
                        trace.pool_args[i].push(arg);
                    }
                    out
                }
                LayerSpec::Activation(a) => x.iter().map(|t| layers::activation_forward(a, t)).collect(),
                LayerSpec::BatchNorm { eps, momentum, .. } => {
                    let bm = match mode {
                        Mode::Train => BnMode::Train,
                        Mode::Infer => BnMode::Infer {
                            mean: &l.running[0],
                            var: &l.running[1],
                        },
                    };
                    let (y, cache) = layers::batchnorm_forward(x, &l.params[0], &l.params[1], eps, bm)?;
                    if mode == Mode::Train {
                        let m = T::of(momentum);
                        let blend = |old: &[T], new: &[T]| -> Vec<T> {
                            old.iter().zip(new).map(|(&o, &b)| m * o + (T::one() - m) * b).collect()
                        };
                        trace.running[i] = vec![blend(&l.running[0], &cache.mean), blend(&l.running[1], &cache.var)];
                        trace.bn[i] = Some(cache);
                    }
                    y
                }
            };
            trace.acts.push(y);
        }
        Ok(trace)
    }

    /// Mean squared error of the traced output against `targets` and its
    /// exact gradient with respect to every parameter. The trace must come
    /// from a training-mode pass.
    pub fn backward(&self, trace: &Trace<T>, targets: &[Tensor<T>]) -> Result<(f64, Gradients<T>)> {
        let out = trace.output();
        if out.len() != targets.len() {
            return Err(Error::SizeMismatch(format!("{} outputs, {} targets", out.len(), targets.len())));
        }
        let mut loss = 0.0;
        let mut total = 0usize;
        for (o, t) in out.iter().zip(targets) {
            loss += loss_mse(o, t)? * o.data.len() as f64;
            total += o.data.len();
        }
        loss /= total as f64;
        let scale = T::of(2.0 / total as f64);
        let mut grad: Vec<Tensor<T>> = out
            .iter()
            .zip(targets)
            .map(|(o, t)| Tensor {
                h: o.h,
                w: o.w,
                c: o.c,
                data: o.data.iter().zip(&t.data).map(|(&a, &b)| scale * (a - b)).collect(),
            })
            .collect();
        let mut grads = self.zero_gradients();
        for (i, l) in self.layers.iter().enumerate().rev() {
            let x = &trace.acts[i];
            let g = &mut grads[i];
            grad = match l.spec {
                LayerSpec::Conv { kh, kw, .. } => {
                    let (dw, db) = split2(g);
                    x.iter()
                        .zip(&grad)
                        .map(|(t, d)| layers::conv2d_backward(t, kh, kw, &l.params[0], d, dw, db))
                        .collect()
                }
                LayerSpec::ConvTranspose { kh, kw, stride, .. } => {
                    let (dw, db) = split2(g);
                    x.iter()
                        .zip(&grad)
                        .map(|(t, d)| layers::conv_transpose_backward(t, kh, kw, &l.params[0], stride, d, dw, db))
                        .collect()
                }
                LayerSpec::MaxPool2 => grad
                    .iter()
                    .zip(&trace.pool_args[i])
                    .zip(x)
                    .map(|((d, arg), t)| layers::maxpool2_backward(d, arg, t.shape()))
                    .collect(),
                LayerSpec::Activation(a) => x
                    .iter()
                    .zip(&trace.acts[i + 1])
                    .zip(&grad)
                    .map(|((xi, yi), d)| layers::activation_backward(a, xi, yi, d))
                    .collect(),
                LayerSpec::BatchNorm { .. } => {
                    let cache = trace.bn[i]
                        .as_ref()
                        .ok_or_else(|| Error::InvalidArgument("backward needs a training-mode trace".into()))?;
                    let (dg, dbeta) = split2(g);
                    layers::batchnorm_backward(&grad, &l.params[0], cache, dg, dbeta)
                }
            };
        }
        Ok((loss, grads))
    }

    /// Reconstruction and bottleneck code for one tensor, using running
    /// batch-norm statistics.
    pub fn infer(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let mut trace = self.forward_batch(std::slice::from_ref(x), Mode::Infer)?;
        let code = trace.acts[self.bottleneck + 1].pop().expect("batch of one");
        let out = trace.acts.pop().and_then(|mut v| v.pop()).expect("batch of one");
        Ok((out, code))
    }

    /// Reconstructs an 8-bit image.
    pub fn forward(&self, img: &GrayImage) -> Result<(GrayImage, Tensor<T>)> {
        if img.dimensions() != (self.side, self.side) {
            return Err(Error::SizeMismatch(format!(
                "model expects {0}x{0} images, got {1}x{2}",
                self.side,
                img.width(),
                img.height()
            )));
        }
        let (out, code) = self.infer(&Tensor::from_image(img))?;
        Ok((out.to_image(), code))
    }
}

fn default_running<T: Scalar>(spec: &LayerSpec) -> Vec<Vec<T>> {
    match *spec {
        LayerSpec::BatchNorm { c, .. } => vec![vec![T::zero(); c], vec![T::one(); c]],
        _ => vec![],
    }
}

fn split2<T>(g: &mut [Vec<T>]) -> (&mut [T], &mut [T]) {
    let (a, b) = g.split_at_mut(1);
    (&mut a[0], &mut b[0])
}

/// Free-function form of [`Model::forward`].
pub fn forward<T: Scalar>(model: &Model<T>, img: &GrayImage) -> Result<(GrayImage, Tensor<T>)> {
    model.forward(img)
}
