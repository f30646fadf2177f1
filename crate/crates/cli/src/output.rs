//! Deterministic file emission: CSV bodies are formatted with 17 significant
//! digits, '.' decimal separator, no locale — rerunning an identical config
//! reproduces them byte for byte. The manifest echoes the effective config
//! and records the SHA-256 of every emitted file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

/// Fixed numeric formatting: 17 significant digits in scientific notation.
/// Negative zero is canonicalized so equal values print identically.
pub fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else if x == 0.0 {
        "0.0000000000000000e0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_bool(b: bool) -> &'static str {
    if b { "1" } else { "0" }
}

pub struct CsvWriter {
    name: String,
    body: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            body: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width mismatch in {}", self.name);
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Clone)]
pub struct EmittedFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn write_file(dir: &Path, name: &str, body: &str) -> std::io::Result<EmittedFile> {
    fs::create_dir_all(dir)?;
    let path: PathBuf = dir.join(name);
    let mut f = fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    Ok(EmittedFile {
        name: name.to_string(),
        sha256: sha256_hex(body.as_bytes()),
        bytes: body.len(),
    })
}

pub fn unix_time_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Structured-text manifest; the reproducibility record of a run.
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self { lines: Vec::new() };
        m.push("run.version", env!("CARGO_PKG_VERSION"));
        m.push("run.command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn push_config(&mut self, flat: &std::collections::BTreeMap<String, String>) {
        for (k, v) in flat {
            self.push(&format!("config.{k}"), v);
        }
    }

    pub fn push_files(&mut self, files: &[EmittedFile]) {
        for f in files {
            self.push(&format!("file.{}.sha256", f.name), &f.sha256);
            self.push(&format!("file.{}.bytes", f.name), f.bytes);
        }
    }

    pub fn body(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}
