//! The dataset split manifest written by `synth-dataset` and consumed by
//! `train` / `eval-offline`.

use crate::errors::CliError;
use har_core::dataset::compact_windows;
use har_core::ingest::Recording;
use har_core::model::Dataset;
use har_core::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitManifest {
    pub version: u32,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    /// Recording directory names per split, relative to the manifest.
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    /// Continuous recordings for online evaluation.
    #[serde(default)]
    pub online: Vec<String>,
}

impl SplitManifest {
    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(SplitManifest, PathBuf), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::data(format!("cannot read manifest {}: {e}", path.display())))?;
        let manifest: SplitManifest = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::data(format!("manifest parse: {e}")))?;
        let dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((manifest, dir))
    }

    /// Load one split into a dataset of segmented windows.
    pub fn load_split(&self, dir: &Path, names: &[String]) -> Result<Dataset, CliError> {
        let mut samples = Vec::new();
        for name in names {
            let recording = Recording::load(&dir.join(name))?;
            samples.extend(compact_windows(
                &recording,
                &self.pipeline,
                self.pipeline.window_len,
            )?);
        }
        Ok(Dataset::new(samples))
    }
}
