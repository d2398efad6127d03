//! Run directories and manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "NLKG_OUT";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants {
    pub kappa: f64,
    pub c1: f64,
    pub g0: f64,
    pub nu0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub started: String,
    pub finished: String,
    pub constants: Option<Constants>,
    pub outputs: Vec<OutputFile>,
    pub versions: Value,
}

/// What a pipeline produced, before anything touches the disk.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub summary: Value,
    pub files: Vec<(String, Vec<u8>)>,
    pub constants: Option<Constants>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// `--out`, else `$NLKG_OUT`, else `./runs`.
pub fn output_root(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// `<root>/<UTC timestamp>-<first 8 hex of the config hash>`, with a counter
/// appended if that exists already.
pub fn create_run_dir(root: &Path, command: &str, config: &Value) -> CliResult<PathBuf> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let key = serde_json::to_vec(&(command, config)).expect("json");
    let hash = &sha256_hex(&key)[..8];
    std::fs::create_dir_all(root)?;
    let base = root.join(format!("{stamp}-{hash}"));
    let mut dir = base.clone();
    let mut n = 1;
    loop {
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                dir = PathBuf::from(format!("{}-{n}", base.display()));
                n += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Writes the outputs and `manifest.json`; returns the manifest.
pub fn persist(dir: &Path, command: &str, config: Value, started: String, outcome: &Outcome) -> CliResult<RunManifest> {
    let mut outputs = Vec::new();
    let mut files = outcome.files.clone();
    files.push(("summary.json".into(), pretty(&outcome.summary)));
    for (name, bytes) in &files {
        std::fs::write(dir.join(name), bytes)?;
        outputs.push(OutputFile { file: name.clone(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
    }
    let manifest = RunManifest {
        command: command.into(),
        config,
        started,
        finished: now(),
        constants: outcome.constants.clone(),
        outputs,
        versions: serde_json::json!({ "nlkg": env!("CARGO_PKG_VERSION"), "nlkg-core": nlkg_core_version() }),
    };
    std::fs::write(dir.join("manifest.json"), pretty(&serde_json::to_value(&manifest).expect("json")))?;
    Ok(manifest)
}

fn nlkg_core_version() -> &'static str {
    // The two crates share the workspace version.
    env!("CARGO_PKG_VERSION")
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn pretty(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("json");
    out.push(b'\n');
    out
}
