use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filters::FilterParams;
use crate::metrics::SsimParams;
use crate::tracer::TraceParams;

/// Environment variable naming the fallback autoencoder model.
pub const MODEL_ENV: &str = "TRACEKIT_MODEL";

pub const DEFAULT_SAMPLE: usize = 50;

/// Settings shared by every pipeline in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Side of the square working images.
    pub side: usize,
    pub trace: TraceParams,
    pub filter: FilterParams,
    pub ssim: SsimParams,
    pub sample_n: usize,
    pub seed: u64,
    /// Adds an `ssim_original` column comparing against the prepared input.
    pub compare_original: bool,
    pub write_intermediates: bool,
    /// Model file per input domain (`default`, `sobel`, `canny_direct`, ...).
    pub models: BTreeMap<String, PathBuf>,
    /// Model used for domains without their own entry.
    pub fallback_model: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            side: 256,
            trace: TraceParams::default(),
            filter: FilterParams::default(),
            ssim: SsimParams::default(),
            sample_n: DEFAULT_SAMPLE,
            seed: 0,
            compare_original: false,
            write_intermediates: true,
            models: BTreeMap::new(),
            fallback_model: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("bad boolean '{value}' for '{key}'"))),
    }
}

impl PipelineConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "side" => self.side = parse(key, value)?,
            "threshold" => self.trace.threshold = parse(key, value)?,
            "turdsize" => self.trace.turdsize = parse(key, value)?,
            "turnpolicy" => self.trace.turnpolicy = value.parse()?,
            "alphamax" => self.trace.alphamax = parse(key, value)?,
            "opticurve" => self.trace.opticurve = parse_bool(key, value)?,
            "opttolerance" => self.trace.opttolerance = parse(key, value)?,
            "canny_low" => self.filter.canny_low = parse(key, value)?,
            "canny_high" => self.filter.canny_high = parse(key, value)?,
            "ghp_sigma" => self.filter.ghp_sigma = parse(key, value)?,
            "ssim_window" => self.ssim.window = parse(key, value)?,
            "n" | "sample_n" => self.sample_n = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "compare_original" => self.compare_original = parse_bool(key, value)?,
            "write_intermediates" => self.write_intermediates = parse_bool(key, value)?,
            "model" => self.fallback_model = Some(PathBuf::from(value)),
            k => match k.strip_prefix("model.") {
                Some(domain) if !domain.is_empty() => {
                    self.models.insert(domain.to_string(), PathBuf::from(value));
                }
                _ => return Err(Error::InvalidArgument(format!("unknown config key '{k}'"))),
            },
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("line {}: expected key=value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.side == 0 || self.side % 8 != 0 {
            return Err(Error::InvalidArgument(format!("side {} must be a positive multiple of 8", self.side)));
        }
        if self.sample_n == 0 {
            return Err(Error::InvalidArgument("sample size must be positive".into()));
        }
        self.trace.validate()
    }
}
