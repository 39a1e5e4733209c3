//! Distance and angle features among the origin, a point, its
//! neighborhood mean and each of its neighbors.

use ndarray::Array2;

use crate::geometry::{Point3, PointCloud};
use crate::knn::NeighborIndex;

pub const GEOMETRIC_CHANNELS: usize = 12;
pub const GEOMETRIC_DIM: usize = 3 * GEOMETRIC_CHANNELS;

const MIN_NORM: f64 = 1e-12;

/// Cosine of the angle between `u` and `v`, or 0 when either is (nearly) zero.
#[inline]
pub fn safe_cos(u: &Point3, v: &Point3) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu < MIN_NORM || nv < MIN_NORM {
        0.0
    } else {
        (u.dot(v) / (nu * nv)).clamp(-1.0, 1.0)
    }
}

/// The twelve channels for one neighbor `n` of point `p` with neighborhood
/// mean `m`, anchored at the origin: six distances followed by six cosines.
pub fn neighbor_channels(p: &Point3, m: &Point3, n: &Point3) -> [f64; GEOMETRIC_CHANNELS] {
    let o = Point3::zeros();
    [
        (p - n).norm(),
        (m - n).norm(),
        n.norm(),
        (p - m).norm(),
        p.norm(),
        m.norm(),
        safe_cos(&(n - p), &(m - p)),
        safe_cos(&(n - p), &(o - p)),
        safe_cos(&(m - p), &(o - p)),
        safe_cos(&(p - n), &(m - n)),
        safe_cos(&(p - n), &(o - n)),
        safe_cos(&(m - n), &(o - n)),
    ]
}

/// Channel-wise max, mean and l2 norm of the neighbor channels, in that
/// order. `neighbors` must not contain `p` itself.
pub fn geometric_row(p: &Point3, neighbors: &[Point3]) -> [f64; GEOMETRIC_DIM] {
    let mut row = [0.0; GEOMETRIC_DIM];
    if neighbors.is_empty() {
        return row;
    }
    let m = neighbors.iter().sum::<Point3>() / neighbors.len() as f64;
    let (max, rest) = row.split_at_mut(GEOMETRIC_CHANNELS);
    let (mean, l2) = rest.split_at_mut(GEOMETRIC_CHANNELS);
    max.fill(f64::NEG_INFINITY);
    for n in neighbors {
        let ch = neighbor_channels(p, &m, n);
        for c in 0..GEOMETRIC_CHANNELS {
            max[c] = max[c].max(ch[c]);
            mean[c] += ch[c];
            l2[c] += ch[c] * ch[c];
        }
    }
    let k = neighbors.len() as f64;
    for c in 0..GEOMETRIC_CHANNELS {
        mean[c] /= k;
        l2[c] = l2[c].sqrt();
    }
    row
}

/// Geometric block for every point of a centered cloud from its `k` nearest
/// neighbors (the point itself excluded).
pub fn geometric_features(cloud: &PointCloud, index: &NeighborIndex, k: usize) -> Array2<f64> {
    let mut out = Array2::zeros((cloud.len(), GEOMETRIC_DIM));
    let mut neighborhood = Vec::with_capacity(k);
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        neighborhood.clear();
        neighborhood.extend(index.query_point(i, k, false).into_iter().map(|j| cloud.points[j]));
        let values = geometric_row(&cloud.points[i], &neighborhood);
        row.assign(&ndarray::ArrayView1::from(&values[..]));
    }
    out
}
