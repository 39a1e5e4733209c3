//! Binary model files.
//!
//! Layout: magic, `u32` version, `u32` record count, named records, and a
//! trailing SHA-256 over every preceding byte. A record is a `u16` name
//! length, the UTF-8 name, a kind byte, a `u8` rank, `u64` dimensions and a
//! little-endian payload. All integers are little-endian.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use super::{PipelineConfig, TrainedModel};
use crate::classifier::LinearModel;
use crate::error::{Error, Result};
use crate::saab::SaabModel;

pub const MAGIC: [u8; 4] = *b"S3I1";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

const KIND_F64: u8 = 0;
const KIND_U64: u8 = 1;
const KIND_TEXT: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    F64(Vec<f64>),
    U64(Vec<u64>),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Record {
    dims: Vec<u64>,
    payload: Payload,
}

impl Record {
    fn f64s(dims: &[usize], values: impl IntoIterator<Item = f64>) -> Self {
        Record {
            dims: dims.iter().map(|&d| d as u64).collect(),
            payload: Payload::F64(values.into_iter().collect()),
        }
    }

    fn u64s(values: Vec<u64>) -> Self {
        Record {
            dims: vec![values.len() as u64],
            payload: Payload::U64(values),
        }
    }

    fn text(value: String) -> Self {
        Record {
            dims: vec![value.len() as u64],
            payload: Payload::Text(value),
        }
    }
}

fn encode(records: &[(&str, Record)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for (name, record) in records {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let kind = match record.payload {
            Payload::F64(_) => KIND_F64,
            Payload::U64(_) => KIND_U64,
            Payload::Text(_) => KIND_TEXT,
        };
        out.push(kind);
        out.push(record.dims.len() as u8);
        for d in &record.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        match &record.payload {
            Payload::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Payload::U64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Payload::Text(s) => out.extend_from_slice(s.as_bytes()),
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::ModelFormat("unexpected end of model data".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn decode(bytes: &[u8]) -> Result<BTreeMap<String, Record>> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    if bytes.len() < MAGIC.len() + 8 + DIGEST_LEN {
        return Err(Error::Checksum);
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum);
    }
    let mut reader = Reader {
        bytes: body,
        pos: MAGIC.len(),
    };
    let version = reader.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let count = reader.u32()?;
    let mut records = BTreeMap::new();
    for _ in 0..count {
        let name_len = reader.u16()? as usize;
        let name = std::str::from_utf8(reader.take(name_len)?)
            .map_err(|_| Error::ModelFormat("record name is not UTF-8".into()))?
            .to_string();
        let kind = reader.u8()?;
        let rank = reader.u8()? as usize;
        let dims = (0..rank).map(|_| reader.u64()).collect::<Result<Vec<_>>>()?;
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(usize::try_from(d).ok()?))
            .ok_or_else(|| Error::ModelFormat(format!("record '{name}' is too large")))?;
        let payload = match kind {
            KIND_F64 | KIND_U64 => {
                let raw = reader.take(
                    len.checked_mul(8)
                        .ok_or_else(|| Error::ModelFormat("overflow".into()))?,
                )?;
                let words = raw.chunks_exact(8).map(|c| c.try_into().expect("8 bytes"));
                if kind == KIND_F64 {
                    Payload::F64(words.map(f64::from_le_bytes).collect())
                } else {
                    Payload::U64(words.map(u64::from_le_bytes).collect())
                }
            }
            KIND_TEXT => Payload::Text(
                String::from_utf8(reader.take(len)?.to_vec())
                    .map_err(|_| Error::ModelFormat(format!("record '{name}' is not UTF-8")))?,
            ),
            other => return Err(Error::ModelFormat(format!("unknown record kind {other}"))),
        };
        if records.insert(name.clone(), Record { dims, payload }).is_some() {
            return Err(Error::ModelFormat(format!("duplicate record '{name}'")));
        }
    }
    if reader.pos != body.len() {
        return Err(Error::ModelFormat("trailing bytes after the last record".into()));
    }
    Ok(records)
}

/// Serializes a model. Identical models produce identical bytes.
pub fn model_to_bytes(model: &TrainedModel) -> Vec<u8> {
    let saab = &model.saab;
    let ac = &saab.ac_kernels;
    let weights = &model.classifier.weights;
    let records = [
        ("config", Record::text(model.config.to_kv())),
        ("class_names", Record::text(model.class_names.join("\n"))),
        (
            "saab.mean",
            Record::f64s(&[saab.feature_mean.len()], saab.feature_mean.iter().copied()),
        ),
        (
            "saab.dc",
            Record::f64s(&[saab.dc_kernel.len()], saab.dc_kernel.iter().copied()),
        ),
        ("saab.ac", Record::f64s(&[ac.nrows(), ac.ncols()], ac.iter().copied())),
        (
            "saab.energies",
            Record::f64s(&[saab.energies.len()], saab.energies.iter().copied()),
        ),
        ("saab.bias", Record::f64s(&[1], [saab.bias])),
        ("saab.flags", Record::u64s(vec![u64::from(saab.rank_deficient)])),
        (
            "dft.selected",
            Record::u64s(model.selected.iter().map(|&i| i as u64).collect()),
        ),
        (
            "classifier.weights",
            Record::f64s(&[weights.nrows(), weights.ncols()], weights.iter().copied()),
        ),
    ];
    encode(&records)
}

struct Records(BTreeMap<String, Record>);

impl Records {
    fn get(&self, name: &str) -> Result<&Record> {
        self.0
            .get(name)
            .ok_or_else(|| Error::ModelFormat(format!("missing record '{name}'")))
    }

    fn text(&self, name: &str) -> Result<&str> {
        match &self.get(name)?.payload {
            Payload::Text(s) => Ok(s),
            _ => Err(Error::ModelFormat(format!("record '{name}' is not text"))),
        }
    }

    fn u64s(&self, name: &str) -> Result<&[u64]> {
        match &self.get(name)?.payload {
            Payload::U64(v) => Ok(v),
            _ => Err(Error::ModelFormat(format!("record '{name}' is not integer"))),
        }
    }

    fn vector(&self, name: &str) -> Result<Array1<f64>> {
        let record = self.get(name)?;
        match (&record.payload, record.dims.len()) {
            (Payload::F64(v), 1) => Ok(Array1::from(v.clone())),
            _ => Err(Error::ModelFormat(format!("record '{name}' is not a float vector"))),
        }
    }

    fn matrix(&self, name: &str) -> Result<Array2<f64>> {
        let record = self.get(name)?;
        match (&record.payload, record.dims.as_slice()) {
            (Payload::F64(v), &[r, c]) => Array2::from_shape_vec((r as usize, c as usize), v.clone())
                .map_err(|e| Error::ModelFormat(format!("record '{name}': {e}"))),
            _ => Err(Error::ModelFormat(format!("record '{name}' is not a float matrix"))),
        }
    }
}

/// Parses and validates a serialized model.
pub fn model_from_bytes(bytes: &[u8]) -> Result<TrainedModel> {
    let records = Records(decode(bytes)?);
    let config = PipelineConfig::from_kv(records.text("config")?)?;
    let class_names: Vec<String> = records.text("class_names")?.split('\n').map(str::to_string).collect();
    let bias = records.vector("saab.bias")?;
    let flags = records.u64s("saab.flags")?;
    let saab = SaabModel {
        feature_mean: records.vector("saab.mean")?,
        dc_kernel: records.vector("saab.dc")?,
        ac_kernels: records.matrix("saab.ac")?,
        energies: records.vector("saab.energies")?.to_vec(),
        bias: *bias
            .first()
            .ok_or_else(|| Error::ModelFormat("empty saab.bias".into()))?,
        rank_deficient: flags.first().is_some_and(|&f| f & 1 == 1),
    };
    let selected: Vec<usize> = records.u64s("dft.selected")?.iter().map(|&i| i as usize).collect();
    let classifier = LinearModel {
        weights: records.matrix("classifier.weights")?,
    };

    let dim = saab.feature_mean.len();
    if saab.dc_kernel.len() != dim || saab.ac_kernels.ncols() != dim || saab.energies.len() != saab.num_channels() {
        return Err(Error::ModelFormat("inconsistent Saab shapes".into()));
    }
    if dim != crate::features::FEATURE_DIM {
        return Err(Error::ModelFormat(format!(
            "Saab input dimension {dim} is not {}",
            crate::features::FEATURE_DIM
        )));
    }
    let descriptor_len = config.descriptor_len(saab.num_channels());
    if selected.iter().any(|&i| i >= descriptor_len) {
        return Err(Error::ModelFormat("selected index outside the descriptor".into()));
    }
    if classifier.weights.nrows() != selected.len() + 1 || classifier.num_classes() != class_names.len() {
        return Err(Error::ModelFormat(
            "classifier shape does not match selection or classes".into(),
        ));
    }
    Ok(TrainedModel {
        config,
        class_names,
        saab,
        selected,
        classifier,
    })
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<(&'static str, Record)> {
        vec![
            ("a", Record::f64s(&[2, 2], [1.0, -0.0, f64::MIN_POSITIVE, 3.5])),
            ("b", Record::u64s(vec![7, u64::MAX])),
            ("c", Record::text("héllo".into())),
        ]
    }

    #[test]
    fn records_round_trip() {
        let bytes = encode(&sample());
        let decoded = decode(&bytes).unwrap();
        for (name, record) in sample() {
            assert_eq!(decoded[name], record);
        }
    }

    #[test]
    fn flipped_byte_fails_checksum() {
        let mut bytes = encode(&sample());
        bytes[20] ^= 1;
        assert!(matches!(decode(&bytes), Err(Error::Checksum)));
    }

    #[test]
    fn truncation_fails_checksum() {
        let bytes = encode(&sample());
        assert!(matches!(decode(&bytes[..bytes.len() - 5]), Err(Error::Checksum)));
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = encode(&sample());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn future_version_rejected() {
        let mut bytes = encode(&sample());
        bytes[4] = 2;
        let body_len = bytes.len() - DIGEST_LEN;
        let digest = Sha256::digest(&bytes[..body_len]);
        bytes[body_len..].copy_from_slice(&digest);
        assert!(matches!(decode(&bytes), Err(Error::Version { found: 2, expected: 1 })));
    }
}
