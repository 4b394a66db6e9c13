//! Run manifests: the seeds, hashes, and settings that make every output
//! reproducible bit-for-bit.

use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct FileStamp {
    pub path: String,
    pub sha256: String,
}

impl FileStamp {
    pub fn new(path: &Path, contents: &[u8]) -> Self {
        Self { path: path.display().to_string(), sha256: crate::output::sha256_hex(contents) }
    }
}

#[derive(Debug, Serialize)]
pub struct FitSettings {
    pub layer_count: usize,
    pub layer_kind: String,
    pub step_size: f64,
    pub max_iters: usize,
    pub grad_tolerance: f64,
    pub fd_step: f64,
}

/// Rerunning the named command with this config, input, seed, and chunk
/// count writes the listed outputs byte-for-byte.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: FileStamp,
    /// Data input for `logprob` and `fit`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<FileStamp>,
    /// Absent for commands that draw no randomness.
    pub seed: Option<u64>,
    pub chunk_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitSettings>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }

    /// The manifest lands next to the command's primary output.
    pub fn path_for(out: &Path) -> PathBuf {
        out.with_extension("manifest.json")
    }
}
