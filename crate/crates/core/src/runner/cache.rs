//! Feature cache files.
//!
//! ```text
//! magic        8 bytes  "FCACHE01"
//! N            u32      rows
//! D            u32      feature dimension
//! K            u32      label count (number of classes)
//! id_len       u16      extractor id length in bytes
//! id           id_len   UTF-8 extractor id
//! labels       N × u32
//! values       N·D × f32, row-major
//! ```
//!
//! Everything is little-endian.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::featurex::FeatureMatrix;

pub const CACHE_MAGIC: &[u8; 8] = b"FCACHE01";

/// Size of a cache file for an `n × d` matrix whose extractor id is
/// `id_len` bytes long.
pub fn cache_file_size(n: usize, d: usize, id_len: usize) -> usize {
    CACHE_MAGIC.len() + 3 * 4 + 2 + id_len + n * 4 + n * d * 4
}

pub fn encode_features(fm: &FeatureMatrix) -> Result<Vec<u8>> {
    let id = fm.extractor_id().as_bytes();
    let id_len = u16::try_from(id.len()).map_err(|_| Error::Format("extractor id longer than 65535 bytes".into()))?;
    let too_big = |what: &str| Error::Format(format!("{what} does not fit in u32"));
    let mut w = ByteWriter::new();
    w.bytes(CACHE_MAGIC);
    w.u32(u32::try_from(fm.rows()).map_err(|_| too_big("row count"))?);
    w.u32(u32::try_from(fm.dim()).map_err(|_| too_big("dimension"))?);
    w.u32(fm.n_classes());
    w.u16(id_len);
    w.bytes(id);
    w.u32s(fm.labels());
    w.f32s(fm.values());
    Ok(w.into_inner())
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    let mut r = ByteReader::new(bytes);
    let magic = r
        .take(CACHE_MAGIC.len())
        .map_err(|_| Error::Format("file too short for a feature cache header".into()))?;
    if magic != CACHE_MAGIC {
        return Err(Error::Format(format!("bad feature cache magic {magic:02x?}")));
    }
    let n = r.u32()? as usize;
    let d = r.u32()? as usize;
    let k = r.u32()?;
    let id_len = r.u16()? as usize;
    let id = std::str::from_utf8(r.take(id_len)?)
        .map_err(|_| Error::Format("extractor id is not UTF-8".into()))?
        .to_string();
    let expected = n
        .checked_mul(d)
        .and_then(|nd| nd.checked_add(n))
        .and_then(|words| words.checked_mul(4));
    if expected != Some(r.remaining()) {
        return Err(Error::Format(format!(
            "{} body bytes do not match {n} rows of dimension {d}",
            r.remaining()
        )));
    }
    let labels = r.u32s(n)?;
    let values = r.f32s(n * d)?;
    r.finish()?;
    FeatureMatrix::new(d, k, values, labels, id).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_features(path: impl AsRef<Path>, fm: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    // Write to a sibling and rename so a crash never leaves a torn cache file.
    let tmp = path.with_extension("partial");
    fs::write(&tmp, encode_features(fm)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    decode_features(&fs::read(path)?)
}

/// Cache file for one side (`"train"` or `"test"`) of one split under one
/// extractor.
pub fn cache_path(cache_dir: &Path, extractor_id: &str, split_signature: &str, side: &str) -> PathBuf {
    let mut h = Sha256::new();
    for part in [extractor_id, split_signature, side] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    let key = hex::encode(h.finalize());
    cache_dir.join(format!("{side}-{}.fcache", &key[..32]))
}
