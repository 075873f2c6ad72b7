use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::Failure;

/// Files written by one run, in write order.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::structural(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| Failure::structural(format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| Failure::structural(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

/// Run record. Everything except `timestamp` is a function of the command
/// line and the inputs.
pub fn manifest<C: Serialize>(
    command: &str,
    config: &C,
    threads: usize,
    outputs: &[String],
    extra: Value,
) -> Value {
    let unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "tool": "ostf",
        "versions": {
            "ostf": env!("CARGO_PKG_VERSION"),
            "onsager-core": onsager_core::VERSION,
            "container": onsager_core::container::VERSION,
        },
        "command": command,
        "config": config,
        "threads": threads,
        "outputs": outputs,
        "details": extra,
        "timestamp": { "unix_seconds": unix },
    })
}

pub fn write_manifest(path: &Path, manifest: &Value) -> Result<(), Failure> {
    let mut text =
        serde_json::to_string_pretty(manifest).map_err(|e| Failure::structural(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::structural(format!("{}: {e}", path.display())))
}

/// File-name tag of a test-function mode: `m0`, `cos1_3_0`.
pub fn mode_tag(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            ':' => None,
            ',' => Some('_'),
            '-' => Some('n'),
            c => Some(c),
        })
        .collect()
}
