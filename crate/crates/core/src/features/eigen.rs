//! Covariance ("eigen") features of a local neighborhood.

use ndarray::Array2;

use crate::align::{covariance, sorted_eigen};
use crate::geometry::{Point3, PointCloud};
use crate::knn::NeighborIndex;

pub const EIGEN_DIM: usize = 8;

/// Column order of the eigen block.
pub const EIGEN_NAMES: [&str; EIGEN_DIM] = [
    "linearity",
    "planarity",
    "anisotropy",
    "sphericity",
    "omnivariance",
    "verticality",
    "surface_variation",
    "eigen_entropy",
];

/// The eight eigen features of one neighborhood. Eigenvalues are
/// normalized by their sum; verticality is measured against the third
/// coordinate axis of the (aligned) frame.
pub fn eigen_row(neighbors: &[Point3]) -> [f64; EIGEN_DIM] {
    let (lambda, vectors) = sorted_eigen(covariance(neighbors));
    let total: f64 = lambda.iter().sum();
    if !(total > 0.0 && lambda[0] > 0.0) {
        return [0.0; EIGEN_DIM];
    }
    let [e1, e2, e3] = lambda.map(|l| l / total);
    let entropy: f64 = [e1, e2, e3].iter().filter(|&&e| e > 0.0).map(|&e| -e * e.ln()).sum();
    [
        (e1 - e2) / e1,
        (e2 - e3) / e1,
        (e1 - e3) / e1,
        e3 / e1,
        (e1 * e2 * e3).cbrt(),
        1.0 - vectors[2].z.abs().min(1.0),
        e3,
        entropy,
    ]
}

pub fn eigen_features(cloud: &PointCloud, index: &NeighborIndex, k: usize) -> Array2<f64> {
    let mut out = Array2::zeros((cloud.len(), EIGEN_DIM));
    let mut neighborhood = Vec::with_capacity(k);
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        neighborhood.clear();
        neighborhood.extend(index.query_point(i, k, true).into_iter().map(|j| cloud.points[j]));
        row.assign(&ndarray::ArrayView1::from(&eigen_row(&neighborhood)[..]));
    }
    out
}
