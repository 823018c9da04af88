use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest as _, Sha256};

use crate::error::Result;

/// SHA-256 over length-framed `(label, bytes)` pairs.
pub struct Digest(Sha256);

impl Digest {
    pub fn new() -> Self {
        Digest(Sha256::new())
    }

    pub fn add(&mut self, label: &str, bytes: &[u8]) {
        self.0.update((label.len() as u64).to_le_bytes());
        self.0.update(label.as_bytes());
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    pub fn hex(self) -> String {
        self.0
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl Default for Digest {
    fn default() -> Self {
        Self::new()
    }
}

/// Fields are serialized in declaration order; `results` objects have
/// sorted keys. The timestamp goes last.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub toolkit_version: &'static str,
    pub config_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Report {
    pub fn new(
        command: &str,
        config_digest: String,
        seed: Option<u64>,
        results: serde_json::Value,
        warnings: Vec<String>,
    ) -> Self {
        Report {
            command: command.into(),
            toolkit_version: env!("CARGO_PKG_VERSION"),
            config_digest,
            seed,
            results,
            warnings,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Writes to a temporary file in the target directory, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_framed() {
        let hex = |parts: &[(&str, &[u8])]| {
            let mut d = Digest::new();
            for (l, b) in parts {
                d.add(l, b);
            }
            d.hex()
        };
        assert_eq!(hex(&[("a", b"bc")]), hex(&[("a", b"bc")]));
        assert_ne!(hex(&[("a", b"bc")]), hex(&[("ab", b"c")]));
        assert_ne!(hex(&[("a", b"bc")]), hex(&[("a", b"bd")]));
        assert_eq!(hex(&[]).len(), 64);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
