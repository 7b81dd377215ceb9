//! Central finite-difference check of [`Model::backward`].

use crate::error::Result;

use super::layers::LayerSpec;
use super::model::{Mode, Model};
use super::tensor::Tensor;

/// Relative errors below this magnitude are measured against it instead.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerCheck {
    pub layer: usize,
    pub kind: &'static str,
    pub params: usize,
    pub max_rel_err: f64,
}

pub fn kind_name(spec: &LayerSpec) -> &'static str {
    match spec {
        LayerSpec::Conv { .. } => "conv",
        LayerSpec::MaxPool2 => "maxpool2",
        LayerSpec::ConvTranspose { .. } => "conv_transpose",
        LayerSpec::BatchNorm { .. } => "batchnorm",
        LayerSpec::Activation(_) => "activation",
    }
}

fn loss(model: &Model<f64>, batch: &[Tensor<f64>], targets: &[Tensor<f64>]) -> Result<f64> {
    let trace = model.forward_batch(batch, Mode::Train)?;
    Ok(model.backward(&trace, targets)?.0)
}

/// Compares every analytic parameter gradient with `(L(p+h) - L(p-h)) / 2h`.
/// Layers without parameters are exercised through the gradients of the
/// layers before them.
pub fn gradient_check(model: &Model<f64>, batch: &[Tensor<f64>], targets: &[Tensor<f64>], h: f64) -> Result<Vec<LayerCheck>> {
    let trace = model.forward_batch(batch, Mode::Train)?;
    let (_, grads) = model.backward(&trace, targets)?;
    let mut probe = model.clone();
    let mut out = Vec::new();
    for (li, layer) in model.layers.iter().enumerate() {
        let mut worst = 0.0f64;
        let mut count = 0;
        for (pi, p) in layer.params.iter().enumerate() {
            for k in 0..p.len() {
                let orig = p[k];
                probe.layers[li].params[pi][k] = orig + h;
                let up = loss(&probe, batch, targets)?;
                probe.layers[li].params[pi][k] = orig - h;
                let down = loss(&probe, batch, targets)?;
                probe.layers[li].params[pi][k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads[li][pi][k];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
                worst = worst.max(rel);
                count += 1;
            }
        }
        if count > 0 {
            out.push(LayerCheck {
                layer: li,
                kind: kind_name(&layer.spec),
                params: count,
                max_rel_err: worst,
            });
        }
    }
    Ok(out)
}
