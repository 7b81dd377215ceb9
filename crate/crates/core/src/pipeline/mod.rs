//! Composable filter / autoencode / vectorize pipelines, batch runs over
//! an image corpus, and CSV reports.

pub mod config;
pub mod report;
pub mod run;
pub mod spec;

pub use config::{PipelineConfig, MODEL_ENV};
pub use report::{compare_report, MetricsRow, PipelineSummary, RunReport};
pub use run::{run_batch, run_pipeline, Artifacts, ModelSet};
pub use spec::{parse_spec_list, PipelineSpec, Stage};
