//! Desk-scale experiments: filtered training sets, per-domain models and
//! reconstruction quality.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::filters::{self, FilterKind, FilterParams};
use crate::metrics::{ssim, SsimParams};
use crate::nn::{train, Model, TrainConfig};
use crate::pipeline::{ModelSet, Stage};
use crate::raster::GrayImage;

pub fn filter_all(kind: FilterKind, imgs: &[GrayImage], params: &FilterParams) -> Result<Vec<GrayImage>> {
    imgs.iter().map(|i| filters::apply(kind, i, params)).collect()
}

/// SSIM between each image and its reconstruction.
pub fn reconstruction_ssim(model: &Model<f32>, imgs: &[GrayImage], p: &SsimParams) -> Result<Vec<f64>> {
    imgs.iter()
        .map(|i| {
            let (out, _) = model.forward(i)?;
            ssim(i, &out, p)
        })
        .collect()
}

/// Domain token for images produced by `kind` (or raw input for `None`),
/// as used in pipeline names.
pub fn domain(kind: Option<FilterKind>) -> String {
    kind.map_or_else(|| "default".to_string(), |k| Stage::Filter(k).token())
}

/// Trains one model per domain on the correspondingly filtered images.
pub fn train_domains(
    kinds: &[Option<FilterKind>],
    train_imgs: &[GrayImage],
    config: &TrainConfig,
    params: &FilterParams,
) -> Result<BTreeMap<String, (Model<f32>, Vec<f64>)>> {
    let mut out = BTreeMap::new();
    for &k in kinds {
        let data = match k {
            Some(kind) => filter_all(kind, train_imgs, params)?,
            None => train_imgs.to_vec(),
        };
        let name = domain(k);
        log::info!("training '{name}' model on {} images", data.len());
        let t = train(config, &data)?;
        out.insert(name, (t.model, t.epoch_losses));
    }
    Ok(out)
}

pub fn model_set(models: &BTreeMap<String, (Model<f32>, Vec<f64>)>) -> ModelSet {
    ModelSet {
        by_domain: models.iter().map(|(k, (m, _))| (k.clone(), m.clone())).collect(),
        fallback: None,
    }
}
