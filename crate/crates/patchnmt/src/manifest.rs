//! Provenance stamped next to every artifact. Manifests hold only content
//! hashes and parameters, never paths or clock readings, so reruns with
//! the same inputs produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest";
pub const TOOL: &str = "patchnmt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub step: String,
    /// Every option that influences the output.
    pub parameters: serde_json::Value,
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    /// Role name to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Step-specific results: counts, statistics.
    #[serde(default)]
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn new(step: &str, parameters: serde_json::Value) -> Manifest {
        let config_sha256 = sha256_hex(canonical_json(&parameters).as_bytes());
        Manifest {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            step: step.to_string(),
            parameters,
            config_sha256,
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn seed(mut self, name: &str, seed: u64) -> Self {
        self.seeds.insert(name.to_string(), seed);
        self
    }

    pub fn input(mut self, role: &str, sha256: String) -> Self {
        self.inputs.insert(role.to_string(), sha256);
        self
    }

    pub fn summary(mut self, summary: serde_json::Value) -> Self {
        self.summary = summary;
        self
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }

    /// For single-file artifacts: `<file>.manifest`.
    pub fn write_beside(&self, file: &Path) -> Result<()> {
        write_json(&beside(file), self)
    }

    pub fn read_dir(dir: &Path) -> Result<Manifest> {
        let p = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
    }
}

pub fn beside(file: &Path) -> PathBuf {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    file.with_file_name(name)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// serde_json maps are sorted (no `preserve_order`), so compact output is
/// canonical.
pub fn canonical_json(v: &serde_json::Value) -> String {
    v.to_string()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
