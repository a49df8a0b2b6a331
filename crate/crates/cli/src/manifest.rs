use std::path::{Path, PathBuf};
use std::time::Instant;

use arc_core::alpha_rank::SweepConfig;
use arc_core::collections::SampleRecord;
use arc_core::io::GameSpec;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Everything needed to rerun a command, written next to its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub version: String,
    pub threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<GameSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_pre: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub samples: Vec<SampleRecord>,
    pub outputs: Vec<String>,
    pub phases: Vec<Phase>,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String], threads: usize) -> Self {
        Self {
            command: command.into(),
            args: args.to_vec(),
            version: env!("CARGO_PKG_VERSION").into(),
            threads,
            game: None,
            sweep: None,
            seed: None,
            n_samples: None,
            skipped: None,
            alpha_pre: None,
            samples: vec![],
            outputs: vec![],
            phases: vec![],
        }
    }

    /// Runs `f` and records its wall-clock time under `name`.
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases.push(Phase {
            name: name.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf, Failure> {
        let path = sibling(out, "manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n")
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// `dir/name.csv` -> `dir/name.<suffix>`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}
