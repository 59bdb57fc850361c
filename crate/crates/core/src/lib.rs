//! Watermark robustness laboratory: raster primitives, transforms, procedural
//! scenes, four watermark codecs, an attack suite including a
//! segmentation-guided background regeneration pipeline, and quality metrics.

pub mod error;
pub mod image;
pub mod attacks;
pub mod codecs;
pub mod metrics;
pub mod noise;
pub mod scenegen;
pub mod rng;
pub mod transforms;

pub use error::{Error, Result};
pub use image::{BinaryMask, GrayF, ImageF};
pub use rng::RngStream;
