//! Binary cache for fitted representations.
//!
//! Layout: 8-byte magic, little-endian `u32` format version, then a bincode
//! payload holding the cache key, the model and the document rows.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{DocMatrix, FeatureVec, RepModel};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"EXPBREP\0";
pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Payload {
    key: String,
    model: RepModel,
    rows: Vec<FeatureVec>,
}

/// Writes atomically via a temporary sibling file.
pub fn save_doc_matrix(matrix: &DocMatrix, key: &str, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    let payload = Payload {
        key: key.to_string(),
        model: (**matrix.model()).clone(),
        rows: matrix.rows().to_vec(),
    };
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC).map_err(|e| Error::io(&tmp, e))?;
    w.write_all(&CACHE_FORMAT_VERSION.to_le_bytes())
        .map_err(|e| Error::io(&tmp, e))?;
    bincode::serialize_into(&mut w, &payload).map_err(|e| Error::Cache(e.to_string()))?;
    w.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(w);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Loads a cached matrix. Returns `Ok(None)` when the file is absent or was
/// written for a different key or format version.
pub fn load_doc_matrix(path: &Path, expected_key: &str) -> Result<Option<DocMatrix>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut r = BufReader::new(file);
    let mut header = [0u8; 12];
    if r.read_exact(&mut header).is_err() || &header[..8] != MAGIC {
        return Err(Error::Cache(format!("{}: not a representation cache", path.display())));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != CACHE_FORMAT_VERSION {
        return Ok(None);
    }
    let mut payload: Payload =
        bincode::deserialize_from(r).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
    if payload.key != expected_key {
        return Ok(None);
    }
    payload.model.vocab.rebuild_index();
    Ok(Some(DocMatrix::from_parts(Arc::new(payload.model), payload.rows)))
}
