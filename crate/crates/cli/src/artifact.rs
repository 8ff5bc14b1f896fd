//! Output staging and provenance records.
//!
//! Every output is written to a temporary file in the destination directory
//! and renamed into place only after the whole command has succeeded, so a
//! failed run never leaves half-written artifacts behind.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

pub const TOOL: &str = "scg";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    /// File name only, so identical inputs in different directories agree.
    pub name: String,
    pub sha256: String,
}

/// Who made an artifact and from what. Deliberately carries no wall-clock
/// time or absolute path, so reruns are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl Provenance {
    pub fn new(command: &'static str, seed: Option<u64>) -> Self {
        Provenance {
            tool: TOOL,
            version: VERSION,
            command,
            seed,
            inputs: Vec::new(),
            details: serde_json::Map::new(),
        }
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("provenance details serialize");
        self.details.insert(key.to_string(), v);
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Reads an input file whole and records its digest.
pub fn read_input(path: &Path, prov: &mut Provenance) -> Result<Vec<u8>> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    prov.inputs.push(InputDigest {
        name: file_name(path),
        sha256: hex::encode(Sha256::digest(&bytes)),
    });
    Ok(bytes)
}

/// Outputs of one command, committed together.
pub struct Staged {
    dir: PathBuf,
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Staged {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let target = self.dir.join(name);
        let mut tmp = NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("cannot create a temporary file in {}", self.dir.display()))?;
        {
            let mut w = BufWriter::new(tmp.as_file_mut());
            fill(&mut w).with_context(|| format!("cannot write {}", target.display()))?;
            w.flush()?;
        }
        self.files.push((tmp, target.clone()));
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    /// Writes `name` plus its `name.provenance.json` sidecar.
    pub fn write_with_sidecar<F>(&mut self, name: &str, prov: &Provenance, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let path = self.write(name, fill)?;
        self.write_json(&format!("{name}.provenance.json"), prov)?;
        Ok(path)
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::with_capacity(self.files.len());
        for (tmp, target) in self.files {
            tmp.persist(&target)
                .with_context(|| format!("cannot move output into {}", target.display()))?;
            log::info!("wrote {}", target.display());
            out.push(target);
        }
        Ok(out)
    }
}
