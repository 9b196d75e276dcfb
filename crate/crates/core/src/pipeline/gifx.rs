//! The GIFX dataset container.
//!
//! Layout (all little-endian): magic `GIFX`, u32 version, u32 N, u32 H, u32 W,
//! u32 C, u32 class_count, class names as (u32 byte length, UTF-8 bytes), then
//! N records of (u32 label, H·W·C f32 pixels).

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::backends::{Image, LabeledDataset};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"GIFX";
pub const VERSION: u32 = 1;

/// Serialize to GIFX bytes.
pub fn encode_dataset(dataset: &LabeledDataset) -> Vec<u8> {
    let (h, w, c) = dataset.image_shape().unwrap_or((0, 0, 0));
    let mut out = Vec::with_capacity(32 + dataset.len() * (4 + 4 * h * w * c));
    out.extend_from_slice(&MAGIC);
    for v in [VERSION, dataset.len() as u32, h as u32, w as u32, c as u32, dataset.classes() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for name in dataset.class_names() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for (image, label) in dataset.iter() {
        out.extend_from_slice(&(label as u32).to_le_bytes());
        out.extend_from_slice(&image.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail(&self, offset: usize, reason: impl Into<String>) -> Error {
        Error::Format { offset: offset as u64, reason: reason.into() }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.fail(self.bytes.len(), format!("truncated while reading {what}"))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Parse GIFX bytes. Any defect yields a format error naming its byte offset.
pub fn decode_dataset(bytes: &[u8]) -> Result<LabeledDataset> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(r.fail(0, "bad magic, expected GIFX"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(r.fail(4, format!("unsupported version {version}")));
    }
    let n = r.u32("sample count")? as usize;
    let (h, w, c) = (r.u32("height")? as usize, r.u32("width")? as usize, r.u32("channels")? as usize);
    let class_count = r.u32("class count")? as usize;
    if class_count < 2 {
        return Err(r.fail(24, format!("class count {class_count} is below 2")));
    }
    if n > 0 && h * w * c == 0 {
        return Err(r.fail(12, format!("empty image shape {h}x{w}x{c}")));
    }
    let mut class_names = Vec::with_capacity(class_count.min(1 << 16));
    for k in 0..class_count {
        let at = r.pos;
        let len = r.u32("class name length")? as usize;
        let raw = r.take(len, "class name")?;
        let name = std::str::from_utf8(raw).map_err(|_| r.fail(at + 4, format!("class name {k} is not UTF-8")))?;
        class_names.push(name.to_string());
    }
    let pixels = h * w * c;
    let record = 4 + 4 * pixels;
    let remaining = bytes.len() - r.pos;
    if remaining < n.saturating_mul(record) {
        return Err(r.fail(bytes.len(), format!("truncated: {n} records need {} bytes, {remaining} left", n * record)));
    }
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let at = r.pos;
        let label = r.u32("label")? as usize;
        if label >= class_count {
            return Err(r.fail(at, format!("label {label} of sample {i} exceeds class count {class_count}")));
        }
        let raw = r.take(4 * pixels, "pixels")?;
        let px: Vec<f32> = raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        if let Some(j) = px.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(r.fail(at + 4 + 4 * j, format!("pixel value {} outside [0, 1]", px[j])));
        }
        images.push(Image::new(h, w, c, px)?);
        labels.push(label);
    }
    if r.pos != bytes.len() {
        return Err(r.fail(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    LabeledDataset::new(images, labels, class_names)
}

pub fn write_dataset(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_dataset(dataset)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dataset(&bytes)
}

/// Lowercase hex SHA-256 of the dataset's GIFX encoding.
pub fn dataset_digest(dataset: &LabeledDataset) -> String {
    hex::encode(Sha256::digest(encode_dataset(dataset)))
}

pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// 64-bit digest of one sample's label and pixels.
pub fn sample_digest(image: &Image, label: usize) -> u64 {
    let mut h = Sha256::new();
    h.update((label as u32).to_le_bytes());
    h.update(image.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes([d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7]])
}
