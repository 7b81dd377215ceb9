use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::filters::{FilterKind, FilterTag, Variant};

/// One processing stage of a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Autoencode,
    Filter(FilterKind),
    Vectorize,
}

impl Stage {
    /// Name token: `dec`, `vect`, a filter tag for inverse filters, or
    /// `<tag>_direct`.
    pub fn token(&self) -> String {
        match self {
            Stage::Autoencode => "dec".into(),
            Stage::Vectorize => "vect".into(),
            Stage::Filter(k) => match k.variant {
                Variant::Inverse => k.tag.as_str().into(),
                Variant::Direct => format!("{}_direct", k.tag.as_str()),
            },
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dec" => return Ok(Stage::Autoencode),
            "vect" => return Ok(Stage::Vectorize),
            _ => {}
        }
        let (tag, variant) = match s.split_once('_') {
            Some((t, "direct")) => (t, Variant::Direct),
            Some((t, "inverse")) => (t, Variant::Inverse),
            _ => (s, Variant::Inverse),
        };
        let tag: FilterTag = tag
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("unknown pipeline stage '{s}'")))?;
        Ok(Stage::Filter(FilterKind::new(tag, variant)))
    }
}

/// Ordered stages; its name is `default` followed by one token per stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PipelineSpec {
    stages: Vec<Stage>,
}

impl PipelineSpec {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.iter().filter(|s| **s == Stage::Autoencode).count() > 1 {
            return Err(Error::InvalidArgument("a pipeline may autoencode at most once".into()));
        }
        if let Some(i) = stages.iter().position(|s| *s == Stage::Vectorize) {
            if i + 1 != stages.len() {
                return Err(Error::InvalidArgument("vectorize must be the last stage".into()));
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn name(&self) -> String {
        std::iter::once("default".to_string())
            .chain(self.stages.iter().map(Stage::token))
            .collect::<Vec<_>>()
            .join("-")
    }

    pub fn autoencodes(&self) -> bool {
        self.stages.contains(&Stage::Autoencode)
    }

    pub fn vectorizes(&self) -> bool {
        self.stages.last() == Some(&Stage::Vectorize)
    }

    /// The same pipeline with its autoencode stage removed.
    pub fn without_autoencode(&self) -> PipelineSpec {
        PipelineSpec {
            stages: self.stages.iter().copied().filter(|s| *s != Stage::Autoencode).collect(),
        }
    }

    /// Token naming the data an autoencode stage at `index` sees: the
    /// previous stage's token, or `default` for the raw input.
    pub fn domain_before(&self, index: usize) -> String {
        match index.checked_sub(1).map(|i| self.stages[i]) {
            None => "default".into(),
            Some(s) => s.token(),
        }
    }
}

impl fmt::Display for PipelineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for PipelineSpec {
    type Err = Error;

    /// Accepts names with or without the leading `default`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidArgument("empty pipeline name".into()));
        }
        let mut tokens: Vec<&str> = s.split('-').collect();
        if tokens[0] == "default" {
            tokens.remove(0);
        }
        let stages = tokens.iter().map(|t| t.parse()).collect::<Result<Vec<Stage>>>()?;
        PipelineSpec::new(stages)
    }
}

/// One pipeline name per line; blank lines and `#` comments ignored.
pub fn parse_spec_list(text: &str) -> Result<Vec<PipelineSpec>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::parse)
        .collect()
}
