//! Point clouds, rotations and normalization.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Point3 = Vector3<f64>;

/// An ordered set of 3D points with an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub label: Option<usize>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points, label: None }
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self.points.iter().fold(Point3::zeros(), |acc, p| acc + p);
        sum / self.points.len().max(1) as f64
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Checks the basic invariants: at least one point, all coordinates finite.
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::DegenerateCloud("cloud has no points".into()));
        }
        if let Some(i) = self.points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(format!("point {i} has a non-finite coordinate")));
        }
        Ok(())
    }

    /// Scales every point so the largest norm becomes one. Leaves the cloud
    /// untouched when all points sit at the origin.
    pub fn rescale_unit(&self) -> PointCloud {
        let max = self.max_norm();
        if max > 0.0 {
            self.map_points(|p| p / max)
        } else {
            self.clone()
        }
    }

    pub fn map_points(&self, f: impl Fn(&Point3) -> Point3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(f).collect(),
            label: self.label,
        }
    }
}

/// Centers the cloud at its centroid and scales it into the unit ball.
pub fn normalize(cloud: &PointCloud) -> Result<PointCloud> {
    cloud.validate()?;
    let centroid = cloud.centroid();
    let centered = cloud.map_points(|p| p - centroid);
    let max = centered.max_norm();
    if max <= 0.0 {
        return Err(Error::DegenerateCloud("all points coincide after centering".into()));
    }
    Ok(centered.map_points(|p| p / max))
}

/// A proper rotation, i.e. a member of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix after checking orthogonality and a positive determinant.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let residual = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if residual > 1e-9 || (det - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "not a rotation: orthogonality residual {residual:e}, det {det}"
            )));
        }
        Ok(Rotation(m))
    }

    pub fn about_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Extrinsic rotation about the fixed X, then Y, then Z axes.
    pub fn from_euler_xyz(x: f64, y: f64, z: f64) -> Self {
        Rotation::about_z(z)
            .compose(&Rotation::about_y(y))
            .compose(&Rotation::about_x(x))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        self.0 * p
    }
}

/// How clouds are rotated before training or testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationProtocol {
    #[default]
    None,
    /// Random angle about the azimuthal (third) axis.
    Z,
    /// Random angles about all three axes.
    So3,
}

impl RotationProtocol {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Rotation {
        match self {
            RotationProtocol::None => Rotation::identity(),
            RotationProtocol::Z => Rotation::about_z(rng.random_range(0.0..TAU)),
            RotationProtocol::So3 => {
                let x = rng.random_range(0.0..TAU);
                let y = rng.random_range(0.0..TAU);
                let z = rng.random_range(0.0..TAU);
                Rotation::from_euler_xyz(x, y, z)
            }
        }
    }
}

impl fmt::Display for RotationProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RotationProtocol::None => "none",
            RotationProtocol::Z => "z",
            RotationProtocol::So3 => "so3",
        })
    }
}

impl FromStr for RotationProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(RotationProtocol::None),
            "z" => Ok(RotationProtocol::Z),
            "so3" | "so(3)" => Ok(RotationProtocol::So3),
            other => Err(Error::Config(format!(
                "unknown rotation protocol '{other}' (expected none, z or so3)"
            ))),
        }
    }
}

/// Deterministic random rotation for `protocol` from `seed`.
pub fn random_rotation(protocol: RotationProtocol, seed: u64) -> Rotation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    protocol.sample(&mut rng)
}

pub fn apply_rotation(cloud: &PointCloud, rotation: &Rotation) -> PointCloud {
    cloud.map_points(|p| rotation.apply(p))
}
