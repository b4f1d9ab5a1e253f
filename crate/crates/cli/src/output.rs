//! Report files: CSV with 17 significant digits, JSON, and a hash manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use beurling_core::counting::fmt17;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub struct OutputDir {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), hashes: BTreeMap::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.dir.join(name);
        fs::write(&p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        self.hashes.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    /// Numeric CSV; every value printed with 17 significant digits.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let mut s = header.join(",");
        s.push('\n');
        for r in rows {
            let line: Vec<String> = r.iter().map(|v| fmt17(*v)).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        self.write_bytes(name, s.as_bytes())
    }

    /// CSV produced by a writer callback (core types that stream themselves).
    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        self.write_bytes(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    /// Writes `manifest.json` (file → sha256) and returns the combined hash.
    pub fn finish(mut self) -> Result<String, CliError> {
        let mut all = Sha256::new();
        for (k, v) in &self.hashes {
            all.update(k.as_bytes());
            all.update(v.as_bytes());
        }
        let combined = hex::encode(all.finalize());
        let manifest = serde_json::json!({ "files": self.hashes, "combined": combined });
        self.write_json("manifest.json", &manifest)?;
        Ok(combined)
    }
}
