//! Compiled transducers on disk.
//!
//! A versioned JSON document holding the transducer, its root graph and a
//! digest of the raw source files it was built from, so a stale file can be
//! detected instead of silently reused.

use std::path::Path;

use lgg_core::{CountedFst, Fst, FstError};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "lgg-fst";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompiledFile {
    pub format: String,
    pub version: u32,
    pub root: String,
    pub source_digest: String,
    pub total_paths: String,
    pub fst: Fst,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}: not a compiled transducer: {1}")]
    Json(String, serde_json::Error),
    #[error("{0}: unsupported format `{1}` version {2}")]
    Version(String, String, u32),
    #[error("{0}: {1}")]
    Invalid(String, FstError),
    #[error("{0}: recorded path total {1} does not match the transducer")]
    Total(String, String),
}

impl CompiledFile {
    pub fn new(root: &str, source_digest: &str, cf: &CountedFst) -> Self {
        CompiledFile {
            format: FORMAT.into(),
            version: VERSION,
            root: root.into(),
            source_digest: source_digest.into(),
            total_paths: cf.total().to_string(),
            fst: cf.fst().clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("compiled transducers serialize") + "\n"
    }

    /// Reads and re-checks a compiled file.
    pub fn read(path: &Path) -> Result<(CompiledFile, CountedFst), CacheError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| CacheError::Io(name.clone(), e))?;
        let file: CompiledFile = serde_json::from_str(&text).map_err(|e| CacheError::Json(name.clone(), e))?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(CacheError::Version(name, file.format, file.version));
        }
        file.fst.check().map_err(|e| CacheError::Invalid(name.clone(), e))?;
        let cf = CountedFst::new(file.fst.clone()).map_err(|e| CacheError::Invalid(name.clone(), e))?;
        if cf.total().to_string() != file.total_paths {
            return Err(CacheError::Total(name, file.total_paths));
        }
        Ok((file, cf))
    }
}
