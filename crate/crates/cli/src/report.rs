//! Deterministic report emission. Report bodies are byte-identical across
//! reruns with the same config and seed; wall-clock time appears only in the
//! manifest.

use std::fmt::Write as FmtWrite;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use fracfill::space::FiniteMetricMeasureSpace;
use sha2::{Digest, Sha256};

/// Content hash of a space: bit-exact distances and masses.
pub fn fixture_hash(space: &FiniteMetricMeasureSpace) -> String {
    let mut hasher = Sha256::new();
    hasher.update((space.n() as u64).to_le_bytes());
    for i in 0..space.n() {
        for j in 0..space.n() {
            hasher.update(space.dist(i, j).to_bits().to_le_bytes());
        }
        hasher.update(space.mass(i).to_bits().to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

/// Accumulates `key: value` lines.
#[derive(Default)]
pub struct TextReport {
    body: String,
}

impl TextReport {
    pub fn new(title: &str) -> Self {
        let mut r = Self::default();
        r.line("report", title);
        r
    }

    pub fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.body, "{key}: {value}").unwrap();
    }

    pub fn blank(&mut self) {
        self.body.push('\n');
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, &self.body)
    }
}

/// Minimal CSV writer with a fixed header.
pub struct CsvReport {
    body: String,
    columns: usize,
}

impl CsvReport {
    pub fn new(header: &[&str]) -> Self {
        Self {
            body: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[String]) {
        assert_eq!(values.len(), self.columns, "csv row width mismatch");
        writeln!(self.body, "{}", values.join(",")).unwrap();
    }

    pub fn row_display(&mut self, values: &[&dyn std::fmt::Display]) {
        let rendered: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.row(&rendered);
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, &self.body)
    }
}

/// Manifest: config echo, versions, fixture hash, rng identity, timestamp.
pub fn write_manifest(
    out_dir: &Path,
    kind: &str,
    config_raw: &str,
    seed: u64,
    space: &FiniteMetricMeasureSpace,
    space_desc: &str,
) -> std::io::Result<()> {
    let mut m = String::new();
    writeln!(m, "experiment: {kind}").unwrap();
    writeln!(m, "version: {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(
        m,
        "rng: {} v{}",
        fracfill::rng::GENERATOR_NAME,
        fracfill::rng::GENERATOR_VERSION
    )
    .unwrap();
    writeln!(m, "seed: {seed}").unwrap();
    writeln!(m, "space: {space_desc}").unwrap();
    writeln!(m, "fixture_hash: {}", fixture_hash(space)).unwrap();
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    writeln!(m, "generated_unix: {stamp}").unwrap();
    writeln!(m, "--- config ---").unwrap();
    m.push_str(config_raw);
    std::fs::write(out_dir.join("manifest.txt"), m)
}

/// Machine-readable error record written next to the reports.
pub fn write_error_record(out_dir: &Path, kind: &str, error: &str) -> std::io::Result<()> {
    std::fs::write(
        out_dir.join("error.txt"),
        format!("experiment: {kind}\nerror: {error}\n"),
    )
}
