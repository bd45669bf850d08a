//! Versioned JSON envelope around every persisted result.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "citedyn";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope<T> {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    /// `sha256:<hex>` over the input files, if any.
    pub input_digest: Option<String>,
    pub subcommand: String,
    pub payload: T,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl<T> ResultEnvelope<T> {
    pub fn new(subcommand: impl Into<String>, payload: T) -> Self {
        ResultEnvelope {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_NAME.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            input_digest: None,
            subcommand: subcommand.into(),
            payload,
            warnings: Vec::new(),
        }
    }

    pub fn with_digest(mut self, digest: Option<String>) -> Self {
        self.input_digest = digest;
        self
    }

    pub fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
    }
}

impl<T: Serialize> ResultEnvelope<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

impl<T: DeserializeOwned> ResultEnvelope<T> {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_bytes(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        // length prefix keeps ("ab", "c") and ("a", "bc") apart
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    format!("sha256:{}", hex(&h.finalize()))
}

/// Digest of file contents, in the given order. File names do not enter it.
pub fn digest_files<P: AsRef<Path>>(paths: &[P]) -> Result<Option<String>> {
    if paths.is_empty() {
        return Ok(None);
    }
    let contents = paths.iter().map(fs::read).collect::<std::io::Result<Vec<_>>>()?;
    let refs: Vec<&[u8]> = contents.iter().map(Vec::as_slice).collect();
    Ok(Some(digest_bytes(&refs)))
}
