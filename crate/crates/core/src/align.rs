//! Coarse alignment of a cloud with its principal axes.
//!
//! PCA leaves each axis defined only up to sign. The first two axes are
//! oriented so the third central moment of the projections is non-negative,
//! falling back to the farthest projected point when the cloud is nearly
//! symmetric along that axis. The third axis is their cross product, which
//! keeps the frame right-handed.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{normalize, Point3, PointCloud};

const DEGENERATE_GAP: f64 = 1e-6;
const SKEW_TOLERANCE: f64 = 1e-9;

/// Principal frame of a cloud. Rows of `axes` are the principal directions
/// in descending eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentFrame {
    pub axes: Matrix3<f64>,
    pub eigenvalues: [f64; 3],
    /// Set when two eigenvalues are too close for the axes to be stable.
    pub degenerate: bool,
}

impl AlignmentFrame {
    pub fn identity() -> Self {
        AlignmentFrame {
            axes: Matrix3::identity(),
            eigenvalues: [0.0; 3],
            degenerate: false,
        }
    }

    pub fn axis(&self, i: usize) -> Point3 {
        self.axes.row(i).transpose()
    }
}

/// Population covariance of the points around their centroid.
pub fn covariance(points: &[Point3]) -> Matrix3<f64> {
    let n = points.len().max(1) as f64;
    let mean = points.iter().fold(Point3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov / n
}

/// Eigenpairs of a symmetric 3x3 matrix, sorted by descending eigenvalue.
pub(crate) fn sorted_eigen(m: Matrix3<f64>) -> ([f64; 3], [Point3; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.map(|i| eig.eigenvalues[i].max(0.0));
    let vectors = order.map(|i| eig.eigenvectors.column(i).into_owned());
    (values, vectors)
}

pub fn fit_frame(cloud: &PointCloud) -> Result<AlignmentFrame> {
    let n = cloud.len();
    if n < 3 {
        return Err(Error::DegenerateCloud(format!(
            "principal axes need at least 3 points, got {n}"
        )));
    }
    let mean = cloud.centroid();
    let centered: Vec<Point3> = cloud.points.iter().map(|p| p - mean).collect();
    let (eigenvalues, mut vectors) = sorted_eigen(covariance(&centered));

    let lead = eigenvalues[0];
    let degenerate =
        lead.is_nan() || lead <= 0.0 || (0..2).any(|i| (eigenvalues[i] - eigenvalues[i + 1]) / lead < DEGENERATE_GAP);

    for (axis, &lambda) in vectors.iter_mut().zip(&eigenvalues).take(2) {
        let skew: f64 = centered.iter().map(|p| axis.dot(p).powi(3)).sum();
        let threshold = SKEW_TOLERANCE * n as f64 * lambda.powf(1.5);
        let flip = if skew.abs() >= threshold && skew != 0.0 {
            skew < 0.0
        } else {
            let (_, proj) = centered
                .iter()
                .map(|p| axis.dot(p))
                .fold(
                    (0.0f64, 0.0f64),
                    |(best, bp), v| {
                        if v.abs() > best {
                            (v.abs(), v)
                        } else {
                            (best, bp)
                        }
                    },
                );
            proj < 0.0
        };
        if flip {
            *axis = -*axis;
        }
    }
    vectors[2] = vectors[0].cross(&vectors[1]).normalize();

    let axes = Matrix3::from_rows(&[vectors[0].transpose(), vectors[1].transpose(), vectors[2].transpose()]);
    Ok(AlignmentFrame {
        axes,
        eigenvalues,
        degenerate,
    })
}

/// Expresses every point in the principal frame.
pub fn align(cloud: &PointCloud, frame: &AlignmentFrame) -> PointCloud {
    cloud.map_points(|p| frame.axes * p)
}

/// Normalizes, aligns with the principal frame and rescales into the unit
/// ball. Returns the canonical cloud with the frame that produced it.
pub fn canonicalize(cloud: &PointCloud) -> Result<(PointCloud, AlignmentFrame)> {
    let centered = normalize(cloud)?;
    let frame = fit_frame(&centered)?;
    if frame.degenerate {
        log::debug!("near-degenerate principal spectrum {:?}", frame.eigenvalues);
    }
    Ok((align(&centered, &frame).rescale_unit(), frame))
}
