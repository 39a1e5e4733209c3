//! Dataset manifests, XYZ point files and per-cloud seed derivation.

use std::collections::{BTreeSet, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::mesh;

/// Salts that keep the random streams of different stages apart.
pub mod stream {
    pub const SAMPLING: u64 = 1;
    pub const TRAIN_ROTATION: u64 = 2;
    pub const TEST_ROTATION: u64 = 3;
    pub const PREPARE_ROTATION: u64 = 4;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: usize,
}

/// A labelled list of cloud files. Labels index into `class_names`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, class_names: Vec<String>) -> Result<Self> {
        let manifest = Self { entries, class_names };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for entry in &self.entries {
            if entry.label >= self.class_names.len() {
                return Err(Error::InvalidInput(format!(
                    "label {} of {} exceeds {} classes",
                    entry.label,
                    entry.path.display(),
                    self.class_names.len()
                )));
            }
            if !seen.insert(&entry.path) {
                return Err(Error::InvalidInput(format!(
                    "duplicate manifest path {}",
                    entry.path.display()
                )));
            }
        }
        Ok(())
    }

    /// Reads a `path,label` CSV. Labels are class names; the class list is
    /// their sorted set. Relative paths resolve against the manifest's
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with_classes(path, None)
    }

    /// Like [`DatasetManifest::load`], but maps labels onto a fixed class list
    /// (e.g. the classes a model was trained on). Unknown labels are errors.
    pub fn load_with_classes(path: impl AsRef<Path>, classes: Option<&[String]>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new(""));
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if headers.len() != 2 || &headers[0] != "path" || &headers[1] != "label" {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "expected header 'path,label'".into(),
            });
        }

        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(path, e))?;
            if record.len() != 2 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: "expected two columns".into(),
                });
            }
            rows.push((base.join(&record[0]), record[1].to_string(), i + 2));
        }

        let class_names: Vec<String> = match classes {
            Some(c) => c.to_vec(),
            None => rows
                .iter()
                .map(|(_, l, _)| l.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        };
        let entries = rows
            .into_iter()
            .map(|(path_buf, label, line)| {
                let idx = class_names
                    .iter()
                    .position(|c| *c == label)
                    .ok_or_else(|| Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("unknown class '{label}'"),
                    })?;
                Ok(ManifestEntry {
                    path: path_buf,
                    label: idx,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries, class_names)
    }

    /// Writes the manifest with paths relative to `path`'s directory when possible.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new(""));
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        writer.write_record(["path", "label"]).map_err(|e| csv_error(path, e))?;
        for entry in &self.entries {
            let rel = entry.path.strip_prefix(base).unwrap_or(&entry.path);
            writer
                .write_record([rel.to_string_lossy().as_ref(), self.class_names[entry.label].as_str()])
                .map_err(|e| csv_error(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads one point per line. Coordinates are separated by whitespace or
/// commas; columns beyond the third (normals, colors) are ignored.
pub fn read_xyz(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .take(3)
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("bad coordinate: {e}"),
            })?;
        if coords.len() != 3 || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected three finite coordinates".into(),
            });
        }
        points.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    if points.is_empty() {
        return Err(Error::DegenerateCloud(format!("{} has no points", path.display())));
    }
    Ok(PointCloud::new(points))
}

/// Writes `x y z` lines using the shortest representation that parses back
/// to the same `f64`.
pub fn write_xyz(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(cloud.len() * 64);
    for p in &cloud.points {
        out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Loads one manifest entry: OFF meshes are surface-sampled with
/// `n_points`, point files are read as they are.
pub fn load_cloud(entry: &ManifestEntry, n_points: usize, seed: u64) -> Result<PointCloud> {
    let ext = entry
        .path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let cloud = match ext.as_deref() {
        Some("off") => mesh::sample_surface(&mesh::load_off(&entry.path)?, n_points, seed)?,
        Some("xyz") | Some("txt") | Some("pts") => read_xyz(&entry.path)?,
        _ => {
            return Err(Error::InvalidInput(format!(
                "unsupported file type: {}",
                entry.path.display()
            )))
        }
    };
    Ok(cloud.with_label(entry.label))
}

/// Loads every entry in parallel; the result follows manifest order.
pub fn load_dataset(manifest: &DatasetManifest, n_points: usize, master_seed: u64) -> Result<Vec<PointCloud>> {
    manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| load_cloud(entry, n_points, derive_seed(master_seed, i, stream::SAMPLING)))
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-item seed: the master seed XOR a stable hash of (index, stream).
pub fn derive_seed(master: u64, index: usize, stream: u64) -> u64 {
    master ^ splitmix64(splitmix64(index as u64) ^ stream.rotate_left(32))
}
