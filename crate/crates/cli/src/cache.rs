//! On-disk cache of expensive tables.
//!
//! Entries are `<module>-<hash>.bin`, keyed by the SHA-256 of the module name
//! and the JSON of the inputs. A file is `MAGIC`, a little-endian u32 format
//! version, a u64 payload length and the payload. `manifest.json` maps file
//! names to their module and inputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use sha2::{Digest, Sha256};

const MAGIC: &[u8; 8] = b"HYPLABC\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub module: String,
    pub version: u32,
    pub inputs: Json,
}

#[derive(Clone, Debug, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    /// A cache that never stores anything.
    pub fn disabled() -> Self {
        Cache { dir: None }
    }

    pub fn at(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref()).with_context(|| format!("creating cache dir {}", dir.as_ref().display()))?;
        Ok(Cache { dir: Some(dir.as_ref().to_path_buf()) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn key(module: &str, inputs: &Json) -> String {
        let mut h = Sha256::new();
        h.update(module.as_bytes());
        h.update([0]);
        h.update(inputs.to_string().as_bytes());
        h.update(FORMAT_VERSION.to_le_bytes());
        let digest = h.finalize();
        digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
    }

    fn file_name(module: &str, inputs: &Json) -> String {
        format!("{module}-{}.bin", Self::key(module, inputs))
    }

    pub fn load(&self, module: &str, inputs: &Json) -> Result<Option<Vec<u8>>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let path = dir.join(Self::file_name(module, inputs));
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            bail!("{}: not a cache file", path.display());
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Ok(None);
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        if bytes.len() != 20 + len {
            bail!("{}: truncated cache file", path.display());
        }
        Ok(Some(bytes[20..].to_vec()))
    }

    pub fn store(&self, module: &str, inputs: &Json, payload: &[u8]) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let name = Self::file_name(module, inputs);
        let mut bytes = Vec::with_capacity(20 + payload.len());
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        bytes.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        bytes.extend_from_slice(payload);
        let tmp = dir.join(format!("{name}.tmp"));
        fs::write(&tmp, &bytes).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, dir.join(&name))?;
        let manifest_path = dir.join("manifest.json");
        let mut manifest: BTreeMap<String, ManifestEntry> = match fs::read_to_string(&manifest_path) {
            Ok(s) => serde_json::from_str(&s).unwrap_or_default(),
            Err(_) => BTreeMap::new(),
        };
        manifest.insert(name, ManifestEntry { module: module.into(), version: FORMAT_VERSION, inputs: inputs.clone() });
        fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }

    /// Loads the entry, or computes and stores it. The flag reports a hit.
    pub fn get_or_insert<F>(&self, module: &str, inputs: &Json, compute: F) -> Result<(Vec<u8>, bool)>
    where
        F: FnOnce() -> Result<Vec<u8>>,
    {
        if let Some(b) = self.load(module, inputs)? {
            return Ok((b, true));
        }
        let b = compute()?;
        self.store(module, inputs, &b)?;
        Ok((b, false))
    }

    pub fn get_or_insert_f64<F>(&self, module: &str, inputs: &Json, compute: F) -> Result<(Vec<f64>, bool)>
    where
        F: FnOnce() -> Result<Vec<f64>>,
    {
        let (b, hit) = self.get_or_insert(module, inputs, || Ok(encode_f64(&compute()?)))?;
        Ok((decode_f64(&b)?, hit))
    }
}

pub fn encode_f64(xs: &[f64]) -> Vec<u8> {
    xs.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub fn decode_f64(b: &[u8]) -> Result<Vec<f64>> {
    if !b.len().is_multiple_of(8) {
        bail!("f64 payload of {} bytes", b.len());
    }
    Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}
