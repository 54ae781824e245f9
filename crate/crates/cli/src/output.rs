use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::AnalysisConfig;
use crate::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub path: String,
    pub kind: &'static str,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ConsistencySummary {
    pub rows: usize,
    pub consistent: usize,
    pub inconsistent: usize,
    pub undetermined: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub wall_ms: f64,
}

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a AnalysisConfig,
    pub exit_code: i32,
    pub files: &'a [ManifestFile],
    pub consistency: Option<ConsistencySummary>,
    pub timings: &'a [StageTiming],
}

pub const MANIFEST: &str = "manifest.json";

/// Serialized writer for one run's artifacts.
pub struct Outputs {
    dir: PathBuf,
    command: &'static str,
    files: Vec<ManifestFile>,
    timings: Vec<StageTiming>,
}

impl Outputs {
    pub fn create(dir: PathBuf, command: &'static str) -> Result<Self, Failure> {
        fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        Ok(Self {
            dir,
            command,
            files: Vec::new(),
            timings: Vec::new(),
        })
    }

    pub fn timed<T>(&mut self, stage: &str, work: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = work();
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        eprintln!("{}: {stage} {wall_ms:.0} ms", self.command);
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            wall_ms,
        });
        value
    }

    fn target(&mut self, rel: &str, kind: &'static str) -> Result<PathBuf, Failure> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
        }
        self.files.push(ManifestFile {
            path: rel.to_string(),
            kind,
        });
        Ok(path)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, rel: &str, kind: &'static str, value: &T) -> Result<(), Failure> {
        let path = self.target(rel, kind)?;
        write_json(&path, value)
    }

    /// Writes a CSV through `fill`, which receives the open file.
    pub fn csv(
        &mut self,
        rel: &str,
        kind: &'static str,
        fill: impl FnOnce(fs::File) -> Result<(), Failure>,
    ) -> Result<(), Failure> {
        let path = self.target(rel, kind)?;
        let file = fs::File::create(&path).map_err(|e| Failure::io(&path, e))?;
        fill(file)
    }

    pub fn finish(
        mut self,
        cfg: &AnalysisConfig,
        exit_code: i32,
        consistency: Option<ConsistencySummary>,
    ) -> Result<(), Failure> {
        let path = self.target(MANIFEST, "manifest")?;
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: cfg,
            exit_code,
            files: &self.files,
            consistency,
            timings: &self.timings,
        };
        write_json(&path, &manifest)
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}
