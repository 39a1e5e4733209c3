//! Per-point 68-dimensional features: octant (24) ‖ eigen (8) ‖ geometric (36).

mod eigen;
mod geometric;
mod octant;

use std::ops::Range;

use ndarray::{s, Array2, ArrayView2};

pub use eigen::{eigen_features, eigen_row, EIGEN_DIM, EIGEN_NAMES};
pub use geometric::{
    geometric_features, geometric_row, neighbor_channels, safe_cos, GEOMETRIC_CHANNELS, GEOMETRIC_DIM,
};
pub use octant::{octant_code, octant_features, octant_row, OCTANT_DIM};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::knn::NeighborIndex;

pub const FEATURE_DIM: usize = OCTANT_DIM + EIGEN_DIM + GEOMETRIC_DIM;
pub const OCTANT_COLUMNS: Range<usize> = 0..OCTANT_DIM;
pub const EIGEN_COLUMNS: Range<usize> = OCTANT_DIM..OCTANT_DIM + EIGEN_DIM;
pub const GEOMETRIC_COLUMNS: Range<usize> = OCTANT_DIM + EIGEN_DIM..FEATURE_DIM;

/// Neighborhood sizes for the three feature sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub k_octant: usize,
    pub k_covariance: usize,
    pub k_geometric: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            k_octant: 64,
            k_covariance: 32,
            k_geometric: 128,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_octant < 2 || self.k_geometric < 2 || self.k_covariance < 3 {
            return Err(Error::Config(format!(
                "neighborhood sizes too small: {self:?} (octant and geometric need 2, covariance 3)"
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, n_points: usize) -> Result<()> {
        self.validate()?;
        let largest = self.k_octant.max(self.k_covariance).max(self.k_geometric);
        if largest > n_points {
            return Err(Error::Config(format!(
                "neighborhood size {largest} exceeds the {n_points} points of the cloud"
            )));
        }
        Ok(())
    }
}

/// Which of the three feature sets are computed. Disabled sets keep their
/// columns, filled with zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSets {
    pub geometric: bool,
    pub covariance: bool,
    pub octant: bool,
}

impl Default for FeatureSets {
    fn default() -> Self {
        FeatureSets {
            geometric: true,
            covariance: true,
            octant: true,
        }
    }
}

impl FeatureSets {
    pub fn any(&self) -> bool {
        self.geometric || self.covariance || self.octant
    }
}

/// N×68 matrix of per-point features.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFeatureMatrix {
    values: Array2<f64>,
}

impl PointFeatureMatrix {
    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn octant(&self) -> ArrayView2<'_, f64> {
        self.values.slice(s![.., OCTANT_COLUMNS])
    }

    pub fn eigen(&self) -> ArrayView2<'_, f64> {
        self.values.slice(s![.., EIGEN_COLUMNS])
    }

    pub fn geometric(&self) -> ArrayView2<'_, f64> {
        self.values.slice(s![.., GEOMETRIC_COLUMNS])
    }
}

/// Concatenates the three blocks column-wise.
pub fn assemble_features(
    octant: ArrayView2<'_, f64>,
    eigen: ArrayView2<'_, f64>,
    geometric: ArrayView2<'_, f64>,
) -> Result<PointFeatureMatrix> {
    let n = octant.nrows();
    if eigen.nrows() != n || geometric.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "feature blocks have {}, {} and {} rows",
            n,
            eigen.nrows(),
            geometric.nrows()
        )));
    }
    let widths = [octant.ncols(), eigen.ncols(), geometric.ncols()];
    if widths != [OCTANT_DIM, EIGEN_DIM, GEOMETRIC_DIM] {
        return Err(Error::ShapeMismatch(format!("feature block widths {widths:?}")));
    }
    let values = ndarray::concatenate(ndarray::Axis(1), &[octant, eigen, geometric])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    Ok(PointFeatureMatrix { values })
}

/// Computes the enabled feature sets for a canonically aligned, centered
/// cloud. One neighbor query per point and feature set.
pub fn point_features(
    cloud: &PointCloud,
    index: &NeighborIndex,
    config: &FeatureConfig,
    sets: &FeatureSets,
) -> Result<PointFeatureMatrix> {
    config.validate()?;
    let n = cloud.len();
    let octant = if sets.octant {
        octant_features(cloud, index, config.k_octant)
    } else {
        Array2::zeros((n, OCTANT_DIM))
    };
    let eigen = if sets.covariance {
        eigen_features(cloud, index, config.k_covariance)
    } else {
        Array2::zeros((n, EIGEN_DIM))
    };
    let geometric = if sets.geometric {
        geometric_features(cloud, index, config.k_geometric)
    } else {
        Array2::zeros((n, GEOMETRIC_DIM))
    };
    assemble_features(octant.view(), eigen.view(), geometric.view())
}
