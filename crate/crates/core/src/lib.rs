//! Bitmap tracing toolkit: high-pass filters, a small convolutional
//! autoencoder, a polygon tracer producing Bézier outlines, an SVG
//! reader/writer, a scanline rasterizer and image similarity metrics.

pub mod error;
pub mod experiment;
pub mod filters;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod raster;
pub mod render;
pub mod svg;
pub mod synth;
pub mod tracer;
pub mod vector;

pub use error::{Error, Result};
pub use raster::{Bitmap, GrayImage};
pub use vector::{PathElement, Point, Segment, Subpath, VectorDoc};
