//! Run provenance attached to every artifact the CLI writes.

use std::collections::BTreeMap;
use std::fs;
use std::hash::Hasher;
use std::path::Path;
use std::time::Instant;

use fnv::FnvHasher;
use presto::{Error, Result};
use serde::Serialize;

/// 64-bit FNV-1a of a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub fnv1a64: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunProvenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Fully resolved flags.
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    /// Wall-clock milliseconds per stage.
    pub stage_ms: BTreeMap<String, f64>,
}

impl RunProvenance {
    pub fn new(command: &'static str, config: &impl Serialize) -> Self {
        RunProvenance {
            tool: "presto",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            inputs: Vec::new(),
            stage_ms: BTreeMap::new(),
        }
    }

    /// Records the digest of an input file.
    pub fn digest(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            fnv1a64: format!("{:016x}", fnv1a64(&bytes)),
        });
        Ok(())
    }

    pub fn add_ms(&mut self, stage: &str, ms: f64) {
        *self.stage_ms.entry(stage.to_string()).or_default() += ms;
    }

    /// Runs `f`, charging its wall-clock time to `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.add_ms(stage, t.elapsed().as_secs_f64() * 1e3);
        out
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    provenance: &'a RunProvenance,
    result: &'a T,
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes `{"provenance": .., "result": ..}`.
pub fn write_json<T: Serialize>(path: &Path, prov: &RunProvenance, result: &T) -> Result<()> {
    let doc = Document {
        provenance: prov,
        result,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
    write(path, text + "\n")
}

/// Writes a CSV body behind a `# provenance: {json}` comment line.
pub fn write_csv(path: &Path, prov: &RunProvenance, body: &str) -> Result<()> {
    let line = serde_json::to_string(prov).map_err(|e| Error::Format(e.to_string()))?;
    write(path, format!("# provenance: {line}\n{body}"))
}

/// The payload of a JSON document written by [`write_json`], or the whole
/// value for bare files.
pub fn payload(mut v: serde_json::Value) -> serde_json::Value {
    match v.as_object_mut() {
        Some(o) if o.contains_key("provenance") && o.contains_key("result") => {
            o.remove("result").expect("checked")
        }
        _ => v,
    }
}
