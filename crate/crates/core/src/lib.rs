//! Unsupervised color image segmentation driven by a corner-seeded Voronoi
//! tessellation.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`seeding`] picks generating points (Harris corners, with a grid
//!    fallback for featureless images).
//! 2. [`tessellation`] assigns every pixel to the Voronoi region of its
//!    nearest seed.
//! 3. [`rsm`] splits each region into color cells from per-channel histogram
//!    peaks and valleys, then merges cells closer than `epsilon`.
//! 4. [`merge`] pools the region clusters and merges proximal pairs across
//!    regions; [`kmeans`] refines the result over the whole image.
//!
//! [`metrics`] scores a segmentation with MSE, Liu-Yang F, Borsotti F' and Q,
//! and the Rosenberger-Chehdi criterion. [`pipeline`] ties it all together
//! and drives batch runs.

pub mod error;
pub mod feature;
pub mod kmeans;
pub mod merge;
pub mod metrics;
pub mod pipeline;
pub mod raster_io;
pub mod rsm;
pub mod seeding;
pub mod tessellation;

pub use error::{Error, Result};
pub use feature::{Cluster, Feature};
pub use kmeans::{kmeans, KmeansConfig, Segmentation};
pub use merge::{merge_proximal_clusters, MergeRecord, MergeResult};
pub use metrics::{evaluate, MetricsReport, SegmentMode, SegmentView};
pub use pipeline::{segment_image, PipelineConfig, PipelineOutput, RunRecord};
pub use raster_io::{load_image, save_image, Image, ImageFormat, Palette};
pub use rsm::RsmConfig;
pub use seeding::{Seed, SeedConfig, SeedSet};
pub use tessellation::VoronoiMap;
