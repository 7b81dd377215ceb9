use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters;
use crate::metrics::{mse, ssim};
use crate::nn::{load_model, Model};
use crate::raster::{load_image, prepare, save_pgm, GrayImage};
use crate::render::render;
use crate::svg::{complexity_stats, emit_svg};
use crate::tracer::trace;

use super::config::PipelineConfig;
use super::report::{MetricsRow, RunReport};
use super::spec::{PipelineSpec, Stage};

/// Autoencoder models keyed by the domain of the images they reconstruct.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    pub by_domain: BTreeMap<String, Model<f32>>,
    pub fallback: Option<Model<f32>>,
}

impl ModelSet {
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let mut set = ModelSet::default();
        for (domain, path) in &config.models {
            set.by_domain.insert(domain.clone(), load_model(path)?);
        }
        if let Some(p) = &config.fallback_model {
            set.fallback = Some(load_model(p)?);
        }
        Ok(set)
    }

    pub fn resolve(&self, domain: &str) -> Result<&Model<f32>> {
        self.by_domain
            .get(domain)
            .or(self.fallback.as_ref())
            .ok_or_else(|| Error::MissingModel(domain.to_string()))
    }
}

/// Everything one pipeline run produced for one image.
#[derive(Debug, Clone)]
pub struct Artifacts {
    /// Stage-suffixed raster outputs, e.g. `dec`, `dec.sobel`.
    pub intermediates: Vec<(String, GrayImage)>,
    pub svg: Option<String>,
    pub rasterized: Option<GrayImage>,
    pub row: MetricsRow,
}

fn stage_err(stage: &Stage, e: Error) -> Error {
    Error::Stage {
        stage: stage.token(),
        source: Box::new(e),
    }
}

/// Applies `spec` to a prepared image. Metrics compare the vectorizer's
/// input with the rasterized SVG; pipelines without a vectorize stage
/// compare their final image with the input.
pub fn run_pipeline(spec: &PipelineSpec, image_id: &str, img: &GrayImage, config: &PipelineConfig, models: &ModelSet) -> Result<Artifacts> {
    let start = Instant::now();
    let mut current = img.clone();
    let mut suffix = String::new();
    let mut intermediates = Vec::new();
    let mut svg = None;
    let mut rasterized = None;
    for (i, stage) in spec.stages().iter().enumerate() {
        match stage {
            Stage::Autoencode => {
                let model = models.resolve(&spec.domain_before(i)).map_err(|e| stage_err(stage, e))?;
                current = model.forward(&current).map_err(|e| stage_err(stage, e))?.0;
            }
            Stage::Filter(kind) => {
                current = filters::apply(*kind, &current, &config.filter).map_err(|e| stage_err(stage, e))?;
            }
            Stage::Vectorize => {
                let doc = trace(&current, &config.trace).map_err(|e| stage_err(stage, e))?;
                let text = emit_svg(&doc);
                rasterized = Some(render(&doc, current.width(), current.height()).map_err(|e| stage_err(stage, e))?);
                svg = Some(text);
                continue;
            }
        }
        if !suffix.is_empty() {
            suffix.push('.');
        }
        suffix.push_str(&stage.token());
        intermediates.push((suffix.clone(), current.clone()));
    }
    let (path_count, d_chars) = match &svg {
        Some(text) => {
            let st = complexity_stats(text)?;
            (st.path_count, st.total_d_chars)
        }
        None => (0, 0),
    };
    let output = rasterized.as_ref().unwrap_or(&current);
    let reference = if rasterized.is_some() { &current } else { img };
    let row = MetricsRow {
        image: image_id.to_string(),
        pipeline: spec.name(),
        path_count,
        d_chars,
        mse: mse(reference, output)?,
        ssim: ssim(reference, output, &config.ssim)?,
        ssim_original: if config.compare_original {
            Some(ssim(img, output, &config.ssim)?)
        } else {
            None
        },
        ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(Artifacts {
        intermediates,
        svg,
        rasterized,
        row,
    })
}

/// Writes `<id>.<suffix>.pgm`, `<id>.<pipeline>.svg` and the rasterized
/// `<id>.<pipeline>.raster.pgm` under `dir`.
pub fn write_artifacts(dir: &Path, image_id: &str, art: &Artifacts) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (suffix, img) in &art.intermediates {
        save_pgm(img, dir.join(format!("{image_id}.{suffix}.pgm")))?;
    }
    if let Some(svg) = &art.svg {
        let p = dir.join(format!("{image_id}.{}.svg", art.row.pipeline));
        std::fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
    }
    if let Some(r) = &art.rasterized {
        save_pgm(r, dir.join(format!("{image_id}.{}.raster.pgm", art.row.pipeline)))?;
    }
    Ok(())
}

/// Regular files of `dir`, sorted by name.
pub fn list_corpus(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

/// Seeded sample of at most `n` paths, clamped to the corpus size.
pub fn sample(files: &[PathBuf], n: usize, seed: u64) -> Vec<PathBuf> {
    let mut v = files.to_vec();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    v.truncate(n);
    v
}

fn image_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Runs every spec on a seeded sample of the corpus. Unreadable files are
/// skipped and counted; rows come out sorted by (image, pipeline).
pub fn run_batch(
    corpus: impl AsRef<Path>,
    specs: &[PipelineSpec],
    config: &PipelineConfig,
    models: &ModelSet,
    out_dir: Option<&Path>,
) -> Result<RunReport> {
    config.validate()?;
    let files = list_corpus(&corpus)?;
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!("corpus {} is empty", corpus.as_ref().display())));
    }
    if config.sample_n > files.len() {
        log::warn!("sample of {} exceeds corpus of {}; using all images", config.sample_n, files.len());
    }
    let chosen = sample(&files, config.sample_n, config.seed);
    let loaded: Vec<Option<(String, GrayImage)>> = chosen
        .par_iter()
        .map(|p| match load_image(p).and_then(|i| prepare(&i, config.side)) {
            Ok(img) => Some((image_id(p), img)),
            Err(e) => {
                log::warn!("skipping {}: {e}", p.display());
                None
            }
        })
        .collect();
    let skipped = loaded.iter().filter(|l| l.is_none()).count();
    let images: Vec<(String, GrayImage)> = loaded.into_iter().flatten().collect();
    let per_image: Vec<Vec<MetricsRow>> = images
        .par_iter()
        .map(|(id, img)| {
            specs
                .iter()
                .map(|spec| {
                    let art = run_pipeline(spec, id, img, config, models)?;
                    if let (Some(dir), true) = (out_dir, config.write_intermediates) {
                        write_artifacts(&dir.join(id), id, &art)?;
                    }
                    Ok(art.row)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<MetricsRow> = per_image.into_iter().flatten().collect();
    rows.sort_by(|a, b| (&a.image, &a.pipeline).cmp(&(&b.image, &b.pipeline)));
    Ok(RunReport {
        rows,
        skipped,
        sampled: chosen.len(),
    })
}
