//! Regional pooling of per-point features over cones and spheres.
//!
//! Per principal axis direction there are four regions, in this order: a
//! cone with its apex at the origin, a cone with its apex at the unit point
//! on the axis opening back toward the origin, and spheres of radius 1/4
//! centered at 1/4 and 3/4 along the axis. Six directions give 24 regions.
//! Each region contributes max, mean, variance, l1 and l2 of every channel
//! over the points inside it.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::geometry::Point3;

pub const REGIONAL_STATS: usize = 5;
pub const GLOBAL_STATS: usize = 4;
pub const REGIONAL_STAT_NAMES: [&str; REGIONAL_STATS] = ["max", "mean", "variance", "l1", "l2"];
pub const GLOBAL_STAT_NAMES: [&str; GLOBAL_STATS] = ["max", "mean", "l1", "l2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisDirection {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl AxisDirection {
    pub const ALL: [AxisDirection; 6] = [
        AxisDirection::PosX,
        AxisDirection::NegX,
        AxisDirection::PosY,
        AxisDirection::NegY,
        AxisDirection::PosZ,
        AxisDirection::NegZ,
    ];

    pub fn unit(self) -> Point3 {
        match self {
            AxisDirection::PosX => Point3::x(),
            AxisDirection::NegX => -Point3::x(),
            AxisDirection::PosY => Point3::y(),
            AxisDirection::NegY => -Point3::y(),
            AxisDirection::PosZ => Point3::z(),
            AxisDirection::NegZ => -Point3::z(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionKind {
    /// Apex at the origin, opening along the axis.
    ConeApexOrigin,
    /// Apex at the unit point on the axis, opening toward the origin.
    ConeApexUnit,
    Sphere {
        center_offset: f64,
        radius: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub kind: RegionKind,
    pub axis: AxisDirection,
}

/// cos²(45°): a unit-height cone with a unit base radius.
const CONE_COS_SQ: f64 = 0.5;

impl Region {
    /// Membership test in the aligned, unit-normalized frame. Boundary
    /// points are inside.
    pub fn contains(&self, point: &Point3) -> bool {
        let u = self.axis.unit();
        match self.kind {
            RegionKind::ConeApexOrigin => in_cone(point, &u),
            RegionKind::ConeApexUnit => in_cone(&(point - u), &-u),
            RegionKind::Sphere { center_offset, radius } => {
                (point - u * center_offset).norm_squared() <= radius * radius
            }
        }
    }
}

#[inline]
fn in_cone(v: &Point3, axis: &Point3) -> bool {
    let along = v.dot(axis);
    along >= 0.0 && along * along >= v.norm_squared() * CONE_COS_SQ
}

/// Ordered list of pooling regions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSet {
    regions: Vec<Region>,
}

impl Default for RegionSet {
    fn default() -> Self {
        Self::with_sphere_centers([0.25, 0.75], 0.25)
    }
}

impl RegionSet {
    pub fn with_sphere_centers(offsets: [f64; 2], radius: f64) -> Self {
        let mut regions = Vec::with_capacity(24);
        for axis in AxisDirection::ALL {
            regions.push(Region {
                kind: RegionKind::ConeApexOrigin,
                axis,
            });
            regions.push(Region {
                kind: RegionKind::ConeApexUnit,
                axis,
            });
            for center_offset in offsets {
                regions.push(Region {
                    kind: RegionKind::Sphere { center_offset, radius },
                    axis,
                });
            }
        }
        RegionSet { regions }
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn descriptor_len(&self, channels: usize) -> usize {
        self.len() * REGIONAL_STATS * channels
    }
}

/// Fixed-length cloud descriptor. Regional layout: region-major, then
/// statistic, then channel. Global layout: statistic, then channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudDescriptor {
    pub values: Array1<f64>,
    pub channels: usize,
}

impl CloudDescriptor {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Flat index of (region, statistic, channel) in a regional descriptor.
pub fn regional_index(region: usize, stat: usize, channel: usize, channels: usize) -> usize {
    (region * REGIONAL_STATS + stat) * channels + channel
}

pub fn aggregate_regional(
    features: ArrayView2<'_, f64>,
    points: &[Point3],
    regions: &RegionSet,
) -> Result<CloudDescriptor> {
    if features.nrows() != points.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows for {} points",
            features.nrows(),
            points.len()
        )));
    }
    let channels = features.ncols();
    let mut values = Array1::zeros(regions.descriptor_len(channels));
    let mut members = Vec::with_capacity(points.len());
    for (r, region) in regions.regions().iter().enumerate() {
        members.clear();
        members.extend((0..points.len()).filter(|&i| region.contains(&points[i])));
        if members.is_empty() {
            continue;
        }
        let count = members.len() as f64;
        for c in 0..channels {
            let column = features.column(c);
            let mut max = f64::NEG_INFINITY;
            let (mut sum, mut l1, mut sq) = (0.0, 0.0, 0.0);
            for &i in &members {
                let v = column[i];
                max = max.max(v);
                sum += v;
                l1 += v.abs();
                sq += v * v;
            }
            let mean = sum / count;
            let variance = members.iter().map(|&i| (column[i] - mean).powi(2)).sum::<f64>() / count;
            let stats = [max, mean, variance, l1, sq.sqrt()];
            for (s, v) in stats.into_iter().enumerate() {
                values[regional_index(r, s, c, channels)] = v;
            }
        }
    }
    Ok(CloudDescriptor { values, channels })
}

/// Channel-wise max, mean, l1 and l2 over all points.
pub fn aggregate_global(features: ArrayView2<'_, f64>) -> Result<CloudDescriptor> {
    let n = features.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("global pooling of an empty feature matrix".into()));
    }
    let channels = features.ncols();
    let mut values = Array1::zeros(GLOBAL_STATS * channels);
    for (c, column) in features.columns().into_iter().enumerate() {
        let stats = pool_column(column);
        for (s, v) in stats.into_iter().enumerate() {
            values[s * channels + c] = v;
        }
    }
    Ok(CloudDescriptor { values, channels })
}

fn pool_column(column: ArrayView1<'_, f64>) -> [f64; GLOBAL_STATS] {
    let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = column.sum() / column.len() as f64;
    let l1 = column.iter().map(|v| v.abs()).sum();
    let l2 = column.iter().map(|v| v * v).sum::<f64>().sqrt();
    [max, mean, l1, l2]
}
