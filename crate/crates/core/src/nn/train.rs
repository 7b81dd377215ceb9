use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

use super::model::{Gradients, Mode, Model};
use super::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(Self::Adam),
            "sgd" => Ok(Self::Sgd),
            _ => Err(Error::InvalidArgument(format!("unknown optimizer '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 16,
            learning_rate: 1e-3,
            seed: 0,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model<f32>,
    /// Mean training loss of each epoch, measured before each batch's update.
    pub epoch_losses: Vec<f64>,
}

struct Optimizer<T> {
    kind: OptimizerKind,
    lr: f64,
    step: i32,
    m: Gradients<T>,
    v: Gradients<T>,
}

impl<T: Scalar> Optimizer<T> {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(kind: OptimizerKind, lr: f64, model: &Model<T>) -> Self {
        Self {
            kind,
            lr,
            step: 0,
            m: model.zero_gradients(),
            v: model.zero_gradients(),
        }
    }

    fn update(&mut self, model: &mut Model<T>, grads: &Gradients<T>) {
        self.step += 1;
        let lr = T::of(self.lr);
        let (b1, b2) = (T::of(Self::B1), T::of(Self::B2));
        let c1 = T::of(1.0 - Self::B1.powi(self.step));
        let c2 = T::of(1.0 - Self::B2.powi(self.step));
        let eps = T::of(Self::EPS);
        for (li, layer) in model.layers.iter_mut().enumerate() {
            for (pi, p) in layer.params.iter_mut().enumerate() {
                let g = &grads[li][pi];
                match self.kind {
                    OptimizerKind::Sgd => {
                        for (w, &d) in p.iter_mut().zip(g) {
                            *w = *w - lr * d;
                        }
                    }
                    OptimizerKind::Adam => {
                        let (m, v) = (&mut self.m[li][pi], &mut self.v[li][pi]);
                        for k in 0..p.len() {
                            let d = g[k];
                            m[k] = b1 * m[k] + (T::one() - b1) * d;
                            v[k] = b2 * v[k] + (T::one() - b2) * d * d;
                            let mh = m[k] / c1;
                            let vh = v[k] / c2;
                            p[k] = p[k] - lr * mh / (vh.sqrt() + eps);
                        }
                    }
                }
            }
        }
    }
}

/// Splits a shuffled order into batches; a trailing batch of one joins
/// the previous batch since batch norm needs two samples.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() >= 2 && out[out.len() - 1].len() == 1 {
        out.pop();
        let start = (out.len() - 1) * size;
        let last = out.len() - 1;
        out[last] = &order[start..];
    }
    out
}

/// Trains the standard autoencoder to reconstruct `images`.
pub fn train(config: &TrainConfig, images: &[GrayImage]) -> Result<TrainOutcome> {
    train_with(config, images, |_, _| {})
}

/// [`train`] with a callback receiving (epoch index, epoch loss).
pub fn train_with(config: &TrainConfig, images: &[GrayImage], mut on_epoch: impl FnMut(usize, f64)) -> Result<TrainOutcome> {
    config.validate()?;
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidArgument("training set is empty".into()))?;
    let side = first.width();
    if let Some(bad) = images.iter().find(|i| i.dimensions() != (side, side)) {
        return Err(Error::SizeMismatch(format!(
            "training images must all be {side}x{side}, found {}x{}",
            bad.width(),
            bad.height()
        )));
    }
    if images.len() < 2 {
        return Err(Error::InvalidArgument("batch norm training needs at least 2 images".into()));
    }
    let data: Vec<Tensor<f32>> = images.iter().map(Tensor::from_image).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut model = Model::<f32>::autoencoder(side, config.seed)?;
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, &model);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for idx in batches(&order, config.batch_size) {
            let batch: Vec<Tensor<f32>> = idx.iter().map(|&i| data[i].clone()).collect();
            let trace = model.forward_batch(&batch, Mode::Train)?;
            let (loss, grads) = model.backward(&trace, &batch)?;
            sum += loss * idx.len() as f64;
            for (layer, run) in model.layers.iter_mut().zip(trace.running) {
                layer.running = run;
            }
            opt.update(&mut model, &grads);
        }
        let loss = sum / data.len() as f64;
        log::info!("epoch {}/{} loss {loss:.6}", epoch + 1, config.epochs);
        on_epoch(epoch, loss);
        epoch_losses.push(loss);
    }
    Ok(TrainOutcome { model, epoch_losses })
}
