//! Run manifests: a JSON record of the resolved configuration, engine
//! conventions, and an inventory of every artifact with a content hash.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;

/// FNV-1a 64-bit content hash, hex encoded; deterministic and cheap.
pub fn fnv1a64(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub bytes: u64,
    pub fnv1a64: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConventionFlags {
    /// Doublon branch used by all closed forms and the lattice operator.
    pub branch: String,
    /// Shaping-constant convention of transfer pulses.
    pub shaping: String,
    /// Time-origin convention of the receiver pulse.
    pub time_origin: String,
    /// Units statement recorded in every manifest.
    pub units: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub kind: String,
    pub status: String,
    pub conventions: ConventionFlags,
    pub config: RunConfig,
    pub wall_clock_seconds: f64,
    pub step_count: u64,
    pub warnings: Vec<String>,
    pub artifacts: Vec<ArtifactRecord>,
}

/// Collects artifacts while a run executes and writes the manifest
/// before (preliminary) and after (final) the run.
pub struct ManifestWriter {
    out_dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl ManifestWriter {
    pub fn begin(
        out_dir: &Path,
        config: &RunConfig,
        conventions: ConventionFlags,
    ) -> std::io::Result<Self> {
        fs::create_dir_all(out_dir)?;
        let manifest = RunManifest {
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            kind: config.kind.label().to_string(),
            status: "running".to_string(),
            conventions,
            config: config.clone(),
            wall_clock_seconds: 0.0,
            step_count: 0,
            warnings: Vec::new(),
            artifacts: Vec::new(),
        };
        let writer = Self {
            out_dir: out_dir.to_path_buf(),
            manifest,
            started: Instant::now(),
        };
        writer.write()?;
        Ok(writer)
    }

    /// Write an artifact file and record it in the inventory.
    pub fn write_artifact(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.out_dir.join(name);
        let mut file = fs::File::create(&path)?;
        file.write_all(bytes)?;
        self.manifest.artifacts.push(ArtifactRecord {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            fnv1a64: fnv1a64(bytes),
        });
        Ok(())
    }

    pub fn add_warnings(&mut self, warnings: &[String]) {
        for w in warnings {
            if !self.manifest.warnings.contains(w) {
                self.manifest.warnings.push(w.clone());
            }
        }
    }

    pub fn set_step_count(&mut self, steps: u64) {
        self.manifest.step_count = steps;
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.manifest.status = "complete".to_string();
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        self.write()
    }

    pub fn finish_failed(mut self, error: &str) -> std::io::Result<()> {
        self.manifest.status = format!("failed: {error}");
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        self.write()
    }

    fn write(&self) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(self.out_dir.join("manifest.json"), json)
    }
}

/// Render one float with full round-trip precision (17 significant
/// digits), the fixed format every CSV artifact uses so identical
/// configs hash identically.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Render a CSV from a header and rows of floats.
pub fn csv_table(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = String::with_capacity(1 << 16);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&fmt_float(v));
            first = false;
        }
        out.push('\n');
    }
    out
}
