//! Triangle meshes: ASCII OFF parsing and area-weighted surface sampling.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn triangle_area(&self, face: &[usize; 3]) -> f64 {
        let [a, b, c] = face.map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|f| self.triangle_area(f)).sum()
    }
}

pub fn load_off(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(&text, path)
}

/// Parses an ASCII OFF mesh. Polygons with more than three vertices are
/// fan-triangulated around their first vertex.
pub fn parse_off(text: &str, origin: &Path) -> Result<TriangleMesh> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    // (1-based line number, tokens) for every non-blank, non-comment line
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("").trim();
        (!content.is_empty()).then(|| (i + 1, content))
    });

    let (header_line, header) = lines.next().ok_or_else(|| Error::EmptyMesh("file is empty".into()))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| err(header_line, format!("expected OFF header, found '{header}'")))?;

    // Some exporters glue the counts onto the header ("OFF490 518 0").
    let (count_line, counts) = if rest.trim().is_empty() {
        lines
            .next()
            .ok_or_else(|| err(header_line, "missing vertex/face counts".into()))?
    } else if rest.starts_with(|c: char| c.is_ascii_digit() || c.is_whitespace()) {
        (header_line, rest.trim())
    } else {
        return Err(err(header_line, format!("expected OFF header, found '{header}'")));
    };

    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(count_line, format!("bad count: {e}")))?;
    let (n_vertices, n_faces) = match counts.as_slice() {
        [v, f] | [v, f, _] => (*v, *f),
        _ => return Err(err(count_line, "expected '<vertices> <faces> [edges]'".into())),
    };

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (line, content) = lines
            .next()
            .ok_or_else(|| err(count_line, format!("expected {n_vertices} vertices")))?;
        let coords: Vec<f64> = content
            .split_whitespace()
            .take(3)
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(line, format!("bad vertex coordinate: {e}")))?;
        if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
            return Err(err(line, "vertex needs three finite coordinates".into()));
        }
        vertices.push(Point3::new(coords[0], coords[1], coords[2]));
    }

    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (line, content) = lines
            .next()
            .ok_or_else(|| err(count_line, format!("expected {n_faces} faces")))?;
        let mut tokens = content.split_whitespace();
        let arity: usize = tokens
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|e| err(line, format!("bad face arity: {e}")))?;
        if arity < 3 {
            return Err(err(line, format!("face with {arity} vertices")));
        }
        let indices: Vec<usize> = tokens
            .take(arity)
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(line, format!("bad face index: {e}")))?;
        if indices.len() != arity {
            return Err(err(line, format!("face lists {} of {arity} indices", indices.len())));
        }
        if let Some(bad) = indices.iter().find(|&&i| i >= n_vertices) {
            return Err(err(line, format!("vertex index {bad} out of range")));
        }
        for k in 1..arity - 1 {
            faces.push([indices[0], indices[k], indices[k + 1]]);
        }
    }

    if vertices.is_empty() || faces.is_empty() {
        return Err(Error::EmptyMesh(format!(
            "{} has {} vertices and {} faces",
            origin.display(),
            vertices.len(),
            faces.len()
        )));
    }
    Ok(TriangleMesh { vertices, faces })
}

/// Draws `n_points` points uniformly over the mesh surface: triangles are
/// picked with probability proportional to their area, then a point is drawn
/// uniformly inside the triangle.
pub fn sample_surface(mesh: &TriangleMesh, n_points: usize, seed: u64) -> Result<PointCloud> {
    if n_points == 0 {
        return Err(Error::InvalidInput("n_points must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for face in &mesh.faces {
        total += mesh.triangle_area(face);
        cumulative.push(total);
    }
    if total.is_nan() || total <= 0.0 {
        return Err(Error::EmptyMesh("total surface area is zero".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n_points)
        .map(|_| {
            let target = rng.random_range(0.0..total);
            let idx = cumulative.partition_point(|&c| c <= target).min(mesh.faces.len() - 1);
            let [a, b, c] = mesh.faces[idx].map(|i| mesh.vertices[i]);
            let (mut r1, mut r2): (f64, f64) = (rng.random(), rng.random());
            if r1 + r2 > 1.0 {
                r1 = 1.0 - r1;
                r2 = 1.0 - r2;
            }
            a + (b - a) * r1 + (c - a) * r2
        })
        .collect();
    Ok(PointCloud::new(points))
}
