//! Rotation-invariant point cloud classification with a single feature hop.
//!
//! The pipeline coarsely aligns each cloud with its principal axes, builds a
//! 68-dimensional per-point descriptor from three rotation-invariant feature
//! sets, reduces it with a one-stage Saab transform, pools the result over
//! conical and spherical regions, ranks the pooled dimensions with the
//! discriminant feature test and finally fits a linear least-squares
//! classifier.
//!
//! ```no_run
//! use rihop_core::pipeline::{fit_clouds, PipelineConfig};
//! use rihop_core::synthetic::{ShapeKind, SyntheticDataset};
//!
//! let data = SyntheticDataset::generate(&ShapeKind::BASIC, 20, 512, 7);
//! let config = PipelineConfig::default();
//! let model = fit_clouds(&data.clouds, &data.class_names, &config).unwrap();
//! println!("{} selected features", model.selected.len());
//! ```

pub mod aggregation;
pub mod align;
pub mod classifier;
pub mod dataset;
pub mod dft;
pub mod error;
pub mod features;
pub mod geometry;
pub mod knn;
pub mod mesh;
pub mod pipeline;
pub mod saab;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{Point3, PointCloud, Rotation, RotationProtocol};
pub use pipeline::{PipelineConfig, TrainedModel};
