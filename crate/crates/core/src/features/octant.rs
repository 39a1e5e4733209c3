use ndarray::Array2;

use crate::geometry::{Point3, PointCloud};
use crate::knn::NeighborIndex;

pub const OCTANT_DIM: usize = 24;

/// Octant of `v` as a 3-bit code: x sign in bit 2, y in bit 1, z in bit 0.
/// Zero coordinates count as positive.
#[inline]
pub fn octant_code(v: &Point3) -> usize {
    (usize::from(v.x >= 0.0) << 2) | (usize::from(v.y >= 0.0) << 1) | usize::from(v.z >= 0.0)
}

/// Per-octant mean offset of `neighbors` relative to `center`. Empty
/// octants contribute zeros.
pub fn octant_row(center: &Point3, neighbors: impl IntoIterator<Item = Point3>) -> [f64; OCTANT_DIM] {
    let mut sums = [Point3::zeros(); 8];
    let mut counts = [0usize; 8];
    for n in neighbors {
        let offset = n - center;
        let code = octant_code(&offset);
        sums[code] += offset;
        counts[code] += 1;
    }
    let mut row = [0.0; OCTANT_DIM];
    for code in 0..8 {
        if counts[code] > 0 {
            let mean = sums[code] / counts[code] as f64;
            row[3 * code..3 * code + 3].copy_from_slice(mean.as_slice());
        }
    }
    row
}

/// 24-dimensional octant descriptor of every point from its `k` nearest
/// neighbors (the point itself included).
pub fn octant_features(cloud: &PointCloud, index: &NeighborIndex, k: usize) -> Array2<f64> {
    let mut out = Array2::zeros((cloud.len(), OCTANT_DIM));
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let neighbors = index.query_point(i, k, true);
        let values = octant_row(&cloud.points[i], neighbors.iter().map(|&j| cloud.points[j]));
        row.assign(&ndarray::ArrayView1::from(&values[..]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_point_per_octant() {
        let eps = 0.01;
        let mut corners = Vec::new();
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    corners.push(Point3::new(sx * eps, sy * eps, sz * eps));
                }
            }
        }
        let row = octant_row(&Point3::zeros(), corners.iter().copied());
        for c in &corners {
            let code = octant_code(c);
            assert_eq!(&row[3 * code..3 * code + 3], c.as_slice());
        }
        // code 0 is the all-negative octant, code 7 the all-positive one
        assert_eq!(&row[0..3], &[-eps, -eps, -eps]);
        assert_eq!(&row[21..24], &[eps, eps, eps]);
    }

    #[test]
    fn coincident_neighbors_give_zeros() {
        let p = Point3::new(0.3, -0.2, 0.1);
        assert_eq!(octant_row(&p, vec![p; 5]), [0.0; OCTANT_DIM]);
    }

    #[test]
    fn boundary_counts_as_positive() {
        assert_eq!(octant_code(&Point3::zeros()), 7);
        assert_eq!(octant_code(&Point3::new(-0.0, -1.0, 0.0)), 5);
        assert_eq!(octant_code(&Point3::new(-1.0, 0.0, -1.0)), 2);
    }

    #[test]
    fn matches_brute_force_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud = PointCloud::new(
            (0..300)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect(),
        );
        let index = NeighborIndex::build(&cloud.points);
        let k = 40;
        let features = octant_features(&cloud, &index, k);
        for i in 0..cloud.len() {
            // brute-force neighbors
            let mut order: Vec<usize> = (0..cloud.len()).collect();
            let p = cloud.points[i];
            order.sort_by(|&a, &b| {
                let da = (cloud.points[a] - p).norm_squared();
                let db = (cloud.points[b] - p).norm_squared();
                da.total_cmp(&db).then(a.cmp(&b))
            });
            for oct in 0..8 {
                let (bx, by, bz) = (oct & 4 != 0, oct & 2 != 0, oct & 1 != 0);
                let members: Vec<Point3> = order[..k]
                    .iter()
                    .map(|&j| cloud.points[j] - p)
                    .filter(|d| (d.x >= 0.0) == bx && (d.y >= 0.0) == by && (d.z >= 0.0) == bz)
                    .collect();
                for axis in 0..3 {
                    let expected = if members.is_empty() {
                        0.0
                    } else {
                        members.iter().map(|d| d[axis]).sum::<f64>() / members.len() as f64
                    };
                    assert_eq!(features[(i, 3 * oct + axis)], expected);
                }
            }
        }
    }
}
