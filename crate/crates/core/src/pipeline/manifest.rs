use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{file_digest, to_canonical_json, ExpansionConfig, MethodId};
use crate::error::{Error, Result};
use crate::guidance::VariantRecord;

pub const TOOL_VERSION: &str = concat!("expandforge ", env!("CARGO_PKG_VERSION"));

/// Provenance for one expansion run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionManifest {
    pub tool_version: String,
    pub global_seed: u64,
    pub method: MethodId,
    pub config: ExpansionConfig,
    pub seed_count: usize,
    pub ratio_k: usize,
    pub record_count: usize,
    /// One record per synthetic sample, in output order.
    pub records: Vec<VariantRecord>,
    /// SHA-256 of the GIFX encoding of the input dataset.
    pub original_digest: String,
    /// SHA-256 of the GIFX encoding of the expanded dataset.
    pub expanded_digest: String,
}

impl ExpansionManifest {
    /// Internal consistency: counts, grouping, consistency of guided records, digest syntax.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Input(format!("manifest: {msg}")));
        if self.ratio_k != self.config.ratio_k() {
            return bad(format!("ratio {} disagrees with config ratio {}", self.ratio_k, self.config.ratio_k()));
        }
        if self.record_count != self.records.len() || self.record_count != self.ratio_k * self.seed_count {
            return bad(format!(
                "record count {} ({} listed) differs from K·N = {}",
                self.record_count,
                self.records.len(),
                self.ratio_k * self.seed_count
            ));
        }
        let mut prev = 0;
        for (i, r) in self.records.iter().enumerate() {
            if r.seed_index >= self.seed_count || r.seed_index < prev {
                return bad(format!("record {i} has seed index {} out of order", r.seed_index));
            }
            prev = r.seed_index;
            if r.method != self.method.name() {
                return bad(format!("record {i} has method {}", r.method));
            }
            if r.streams.is_empty() {
                return bad(format!("record {i} lists no RNG stream"));
            }
            if self.method.is_guided() && !r.consistent {
                return bad(format!("guided record {i} changed the predicted class"));
            }
        }
        for d in [&self.original_digest, &self.expanded_digest] {
            if d.len() != 64 || !d.bytes().all(|b| b.is_ascii_hexdigit()) {
                return bad(format!("malformed digest `{d}`"));
            }
        }
        Ok(())
    }

    /// Compare the recorded digests with files on disk.
    pub fn verify_files(&self, original: impl AsRef<Path>, expanded: impl AsRef<Path>) -> Result<()> {
        for (path, want) in [(original.as_ref(), &self.original_digest), (expanded.as_ref(), &self.expanded_digest)] {
            let got = file_digest(path)?;
            if &got != want {
                return Err(Error::Input(format!("{}: digest {got} does not match manifest {want}", path.display())));
            }
        }
        Ok(())
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        to_canonical_json(self)
    }
}

pub fn write_manifest(manifest: &ExpansionManifest, path: impl AsRef<Path>) -> Result<()> {
    manifest.check()?;
    let path = path.as_ref();
    fs::write(path, manifest.to_canonical_json()?).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<ExpansionManifest> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let m: ExpansionManifest =
        serde_json::from_slice(&bytes).map_err(|e| Error::Json { path: path.to_path_buf(), source: e })?;
    m.check()?;
    Ok(m)
}
