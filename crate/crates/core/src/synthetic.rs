//! Procedural labelled shapes for tests, benchmarks and demos.
//!
//! Each instance gets jittered proportions and Gaussian surface noise, so a
//! class is a family of shapes rather than one template.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::derive_seed;
use crate::geometry::{Point3, PointCloud};
use crate::mesh::{sample_surface, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Sphere,
    Box,
    Cylinder,
    Plane,
    Cone,
    Torus,
    Dumbbell,
    Ell,
    Tee,
    Cross,
    /// A bar with a small block on top; the four kinds differ only in where
    /// the block sits along the bar.
    BumpMid,
    BumpNear,
    BumpFar,
    BumpEnd,
}

impl ShapeKind {
    pub const BASIC: [ShapeKind; 4] = [ShapeKind::Sphere, ShapeKind::Box, ShapeKind::Cylinder, ShapeKind::Plane];

    pub const ALL: [ShapeKind; 10] = [
        ShapeKind::Sphere,
        ShapeKind::Box,
        ShapeKind::Cylinder,
        ShapeKind::Plane,
        ShapeKind::Cone,
        ShapeKind::Torus,
        ShapeKind::Dumbbell,
        ShapeKind::Ell,
        ShapeKind::Tee,
        ShapeKind::Cross,
    ];

    /// Classes that share all local geometry and differ in layout only.
    pub const NUISANCE: [ShapeKind; 4] = [
        ShapeKind::BumpMid,
        ShapeKind::BumpNear,
        ShapeKind::BumpFar,
        ShapeKind::BumpEnd,
    ];

    /// Six distinct solids plus the nuisance family.
    pub const MIXED: [ShapeKind; 10] = [
        ShapeKind::Sphere,
        ShapeKind::Box,
        ShapeKind::Cylinder,
        ShapeKind::Plane,
        ShapeKind::Cone,
        ShapeKind::Torus,
        ShapeKind::BumpMid,
        ShapeKind::BumpNear,
        ShapeKind::BumpFar,
        ShapeKind::BumpEnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::Box => "box",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Plane => "plane",
            ShapeKind::Cone => "cone",
            ShapeKind::Torus => "torus",
            ShapeKind::Dumbbell => "dumbbell",
            ShapeKind::Ell => "ell",
            ShapeKind::Tee => "tee",
            ShapeKind::Cross => "cross",
            ShapeKind::BumpMid => "bump_mid",
            ShapeKind::BumpNear => "bump_near",
            ShapeKind::BumpFar => "bump_far",
            ShapeKind::BumpEnd => "bump_end",
        }
    }

    pub fn from_name(name: &str) -> Option<ShapeKind> {
        ShapeKind::ALL
            .into_iter()
            .chain(ShapeKind::NUISANCE)
            .find(|k| k.name() == name)
    }

    /// One noisy instance with `n` points.
    pub fn sample(self, n: usize, rng: &mut ChaCha8Rng) -> PointCloud {
        let mut jitter = |base: f64| base * rng.random_range(0.85..1.15);
        let points = match self {
            ShapeKind::Sphere => {
                let radii = [jitter(1.0), jitter(0.95), jitter(0.9)];
                (0..n).map(|_| ellipsoid_point(radii, rng)).collect()
            }
            ShapeKind::Box => {
                let mesh = box_mesh(&[(Point3::zeros(), [jitter(1.0), jitter(0.7), jitter(0.45)])]);
                sample_mesh(&mesh, n, rng)
            }
            ShapeKind::Cylinder => cylinder_points(jitter(0.35), jitter(2.0), n, rng),
            ShapeKind::Plane => {
                let (a, b) = (jitter(1.0), jitter(0.6));
                (0..n)
                    .map(|_| Point3::new(rng.random_range(-a..a), rng.random_range(-b..b), 0.0))
                    .collect()
            }
            ShapeKind::Cone => cone_points(jitter(0.6), jitter(1.5), n, rng),
            ShapeKind::Torus => torus_points(jitter(1.0), jitter(0.3), n, rng),
            ShapeKind::Dumbbell => {
                let (r, gap) = (jitter(0.45), jitter(1.0));
                let rod = jitter(0.08);
                // areas: two spheres and the connecting rod
                let sphere_area = 4.0 * PI * r * r;
                let rod_area = TAU * rod * gap;
                let total = 2.0 * sphere_area + rod_area;
                (0..n)
                    .map(|_| {
                        let u = rng.random_range(0.0..total);
                        if u < rod_area {
                            let t = rng.random_range(0.0..TAU);
                            Point3::new(rng.random_range(-gap / 2.0..gap / 2.0), rod * t.cos(), rod * t.sin())
                        } else {
                            let side = if u < rod_area + sphere_area { -1.0 } else { 1.0 };
                            ellipsoid_point([r; 3], rng) + Point3::new(side * (gap / 2.0 + r), 0.0, 0.0)
                        }
                    })
                    .collect()
            }
            ShapeKind::Ell => {
                let (len, w) = (jitter(1.6), jitter(0.3));
                let arm = jitter(1.0);
                let mesh = box_mesh(&[
                    (Point3::zeros(), [len / 2.0, w / 2.0, w / 2.0]),
                    (
                        Point3::new(-len / 2.0 + w / 2.0, arm / 2.0, 0.0),
                        [w / 2.0, arm / 2.0, w / 2.0],
                    ),
                ]);
                sample_mesh(&mesh, n, rng)
            }
            ShapeKind::Tee => {
                let (len, w) = (jitter(1.6), jitter(0.3));
                let stem = jitter(1.2);
                let mesh = box_mesh(&[
                    (Point3::zeros(), [len / 2.0, w / 2.0, w / 2.0]),
                    (Point3::new(0.0, -stem / 2.0, 0.0), [w / 2.0, stem / 2.0, w / 2.0]),
                ]);
                sample_mesh(&mesh, n, rng)
            }
            ShapeKind::Cross => {
                let (len, w) = (jitter(1.6), jitter(0.3));
                let across = jitter(1.0);
                let mesh = box_mesh(&[
                    (Point3::zeros(), [len / 2.0, w / 2.0, w / 2.0]),
                    (Point3::new(len * 0.15, 0.0, 0.0), [w / 2.0, across / 2.0, w / 2.0]),
                ]);
                sample_mesh(&mesh, n, rng)
            }
            ShapeKind::BumpMid | ShapeKind::BumpNear | ShapeKind::BumpFar | ShapeKind::BumpEnd => {
                let fraction = match self {
                    ShapeKind::BumpMid => 0.0,
                    ShapeKind::BumpNear => 0.3,
                    ShapeKind::BumpFar => 0.55,
                    _ => 0.8,
                };
                let (len, w) = (jitter(1.0), jitter(0.25));
                let block = jitter(0.12);
                let at = len * fraction + rng.random_range(-0.04..0.04);
                let mesh = box_mesh(&[
                    (Point3::zeros(), [len, w, w]),
                    (Point3::new(at, w + block, 0.0), [block; 3]),
                ]);
                sample_mesh(&mesh, n, rng)
            }
        };
        add_noise(points, 0.01, rng)
    }
}

fn add_noise(points: Vec<Point3>, sigma: f64, rng: &mut ChaCha8Rng) -> PointCloud {
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    PointCloud::new(
        points
            .into_iter()
            .map(|p| p + Point3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng)))
            .collect(),
    )
}

fn ellipsoid_point(radii: [f64; 3], rng: &mut ChaCha8Rng) -> Point3 {
    loop {
        let v = Point3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let norm = v.norm();
        if norm > 1e-9 {
            let u = v / norm;
            return Point3::new(u.x * radii[0], u.y * radii[1], u.z * radii[2]);
        }
    }
}

fn cylinder_points(radius: f64, height: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    let side = TAU * radius * height;
    let cap = PI * radius * radius;
    (0..n)
        .map(|_| {
            let u = rng.random_range(0.0..side + 2.0 * cap);
            let t = rng.random_range(0.0..TAU);
            if u < side {
                Point3::new(
                    radius * t.cos(),
                    radius * t.sin(),
                    rng.random_range(-height / 2.0..height / 2.0),
                )
            } else {
                let r = radius * rng.random::<f64>().sqrt();
                let z = if u < side + cap { -height / 2.0 } else { height / 2.0 };
                Point3::new(r * t.cos(), r * t.sin(), z)
            }
        })
        .collect()
}

fn cone_points(radius: f64, height: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    let slant = (radius * radius + height * height).sqrt();
    let side = PI * radius * slant;
    let base = PI * radius * radius;
    (0..n)
        .map(|_| {
            let t = rng.random_range(0.0..TAU);
            if rng.random_range(0.0..side + base) < side {
                // distance from the apex grows like sqrt for uniform area
                let s = rng.random::<f64>().sqrt();
                Point3::new(s * radius * t.cos(), s * radius * t.sin(), height * (1.0 - s))
            } else {
                let r = radius * rng.random::<f64>().sqrt();
                Point3::new(r * t.cos(), r * t.sin(), 0.0)
            }
        })
        .collect()
}

fn torus_points(major: f64, minor: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let (theta, phi) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        // accept proportionally to the local area element
        if rng.random_range(0.0..major + minor) <= major + minor * phi.cos() {
            let ring = major + minor * phi.cos();
            points.push(Point3::new(ring * theta.cos(), ring * theta.sin(), minor * phi.sin()));
        }
    }
    points
}

/// Axis-aligned boxes given as (center, half extents).
fn box_mesh(boxes: &[(Point3, [f64; 3])]) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    const QUADS: [[usize; 4]; 6] = [
        [0, 1, 3, 2],
        [4, 6, 7, 5],
        [0, 4, 5, 1],
        [2, 3, 7, 6],
        [0, 2, 6, 4],
        [1, 5, 7, 3],
    ];
    for (center, half) in boxes {
        let base = vertices.len();
        for corner in 0..8 {
            let sign = |bit: usize| if corner & bit != 0 { 1.0 } else { -1.0 };
            vertices.push(center + Point3::new(sign(4) * half[0], sign(2) * half[1], sign(1) * half[2]));
        }
        for q in QUADS {
            faces.push([base + q[0], base + q[1], base + q[2]]);
            faces.push([base + q[0], base + q[2], base + q[3]]);
        }
    }
    TriangleMesh { vertices, faces }
}

fn sample_mesh(mesh: &TriangleMesh, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point3> {
    sample_surface(mesh, n, rng.random())
        .expect("procedural meshes have positive area")
        .points
}

/// Labelled clouds, `per_class` instances of every kind, grouped by class.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub clouds: Vec<PointCloud>,
    pub class_names: Vec<String>,
}

impl SyntheticDataset {
    pub fn generate(kinds: &[ShapeKind], per_class: usize, n_points: usize, seed: u64) -> Self {
        let mut clouds = Vec::with_capacity(kinds.len() * per_class);
        for (label, kind) in kinds.iter().enumerate() {
            for i in 0..per_class {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, label * 1_000_003 + i, 0x5_1A7E));
                clouds.push(kind.sample(n_points, &mut rng).with_label(label));
            }
        }
        SyntheticDataset {
            clouds,
            class_names: kinds.iter().map(|k| k.name().to_string()).collect(),
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        self.clouds.iter().map(|c| c.label.unwrap_or(0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_labelled() {
        let a = SyntheticDataset::generate(&ShapeKind::BASIC, 3, 64, 1);
        let b = SyntheticDataset::generate(&ShapeKind::BASIC, 3, 64, 1);
        assert_eq!(a.clouds, b.clouds);
        assert_eq!(a.clouds.len(), 12);
        assert_eq!(a.labels(), vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3]);
        assert_eq!(a.class_names, vec!["sphere", "box", "cylinder", "plane"]);
    }

    #[test]
    fn every_kind_produces_finite_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kind in ShapeKind::ALL.into_iter().chain(ShapeKind::NUISANCE) {
            let cloud = kind.sample(200, &mut rng);
            assert_eq!(cloud.len(), 200);
            cloud.validate().unwrap();
            assert_eq!(ShapeKind::from_name(kind.name()), Some(kind));
        }
    }

    #[test]
    fn plane_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud = ShapeKind::Plane.sample(500, &mut rng);
        let spread = cloud.points.iter().map(|p| p.z.abs()).fold(0.0, f64::max);
        assert!(spread < 0.1);
    }
}
