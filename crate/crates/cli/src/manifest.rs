//! Run provenance and output plumbing.
//!
//! Datasets carry a one-line `#` comment with the manifest hash; the full
//! manifest, including the wall-clock timestamp, goes to a
//! `<out>.manifest.json` sidecar so the dataset itself stays byte-stable.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const HEADER_TAG: &str = "# wqed";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub args: Value,
    pub hash: String,
}

impl RunManifest {
    pub fn new<A: Serialize>(command: &str, config_hash: &str, seed: Option<u64>, args: &A) -> Self {
        let args = serde_json::to_value(args).expect("arguments serialize");
        let material = serde_json::json!([command, config_hash, seed, TOOL_VERSION, args]);
        let hash = hex::encode(Sha256::digest(material.to_string().as_bytes()));
        Self {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            tool_version: TOOL_VERSION.to_string(),
            args,
            hash,
        }
    }

    pub fn header_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        format!(
            "{HEADER_TAG} manifest={} command={} config={} seed={seed} version={}\n",
            self.hash, self.command, self.config_hash, self.tool_version
        )
    }

    fn sidecar(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        v.as_object_mut()
            .expect("manifest is an object")
            .insert("timestamp".into(), Value::String(chrono::Utc::now().to_rfc3339()));
        v
    }
}

/// Key/value pairs of a dataset's manifest comment, if the first line is one.
pub fn parse_header(text: &str) -> Option<Map<String, Value>> {
    let line = text.lines().next()?;
    let rest = line.strip_prefix(HEADER_TAG)?;
    let mut map = Map::new();
    for token in rest.split_whitespace() {
        let (k, v) = token.split_once('=')?;
        map.insert(k.to_string(), Value::String(v.to_string()));
    }
    map.contains_key("manifest").then_some(map)
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Write-then-rename within the destination directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let ctx = || format!("writing {}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(ctx(), e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(ctx(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(ctx(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(ctx(), e.error))?;
    Ok(())
}

/// Writes a finished dataset (and its sidecar) to `out`, or to stdout.
pub fn emit(out: Option<&Path>, body: &[u8], manifest: &RunManifest) -> CliResult<()> {
    match out {
        Some(path) => {
            write_atomic(path, body)?;
            write_atomic(&sidecar_path(path), &to_json_bytes(&manifest.sidecar()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body).map_err(|e| CliError::io("writing stdout", e))?;
            stdout.flush().map_err(|e| CliError::io("writing stdout", e))
        }
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report serializes");
    v.push(b'\n');
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trips() {
        let m = RunManifest::new("spectrum", "abc", Some(7), &serde_json::json!({"points": 3}));
        let parsed = parse_header(&m.header_line()).unwrap();
        assert_eq!(parsed["manifest"], Value::String(m.hash.clone()));
        assert_eq!(parsed["seed"], Value::String("7".into()));
        assert_eq!(parsed["command"], Value::String("spectrum".into()));
    }

    #[test]
    fn hash_depends_on_arguments_only() {
        let a = RunManifest::new("spectrum", "abc", None, &serde_json::json!({"points": 3}));
        let b = RunManifest::new("spectrum", "abc", None, &serde_json::json!({"points": 3}));
        let c = RunManifest::new("spectrum", "abc", None, &serde_json::json!({"points": 4}));
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
    }

    #[test]
    fn non_manifest_comment_ignored() {
        assert!(parse_header("# just a note\n1,2").is_none());
        assert!(parse_header("a,b\n1,2").is_none());
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar_path(Path::new("out/data.csv")), PathBuf::from("out/data.csv.manifest.json"));
    }
}
