//! Versioned binary parameter checkpoints with the configuration embedded.
//!
//! Layout: 8-byte magic, u16 version, u32 JSON metadata length, metadata,
//! u64 parameter count, f64 little-endian values.

use crate::model::layout::{Layout, Params};
use crate::model::{FusionConfig, ModelError};
use crate::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"HARCKPT\x00";
const VERSION: u16 = 1;

/// Everything needed to run the model on new streams: the architecture and
/// the pipeline settings (split statistics, IMU ranges) it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub fusion: FusionConfig,
    pub pipeline: PipelineConfig,
}

pub fn save_checkpoint(path: &Path, params: &Params, meta: &CheckpointMeta) -> Result<(), ModelError> {
    if meta.fusion != params.config {
        return Err(ModelError::Checkpoint(
            "metadata config differs from parameter config".into(),
        ));
    }
    let json = serde_json::to_vec(meta)
        .map_err(|e| ModelError::Checkpoint(format!("metadata serialization: {e}")))?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&(json.len() as u32).to_le_bytes())?;
    file.write_all(&json)?;
    file.write_all(&(params.flat.len() as u64).to_le_bytes())?;
    for v in &params.flat {
        file.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Params, CheckpointMeta), ModelError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Checkpoint("bad magic".into()));
    }
    let mut version = [0u8; 2];
    file.read_exact(&mut version)?;
    let version = u16::from_le_bytes(version);
    if version != VERSION {
        return Err(ModelError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut len = [0u8; 4];
    file.read_exact(&mut len)?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    file.read_exact(&mut json)?;
    let meta: CheckpointMeta = serde_json::from_slice(&json)
        .map_err(|e| ModelError::Checkpoint(format!("metadata parse: {e}")))?;
    meta.fusion.validate()?;

    let mut count = [0u8; 8];
    file.read_exact(&mut count)?;
    let count = u64::from_le_bytes(count) as usize;
    let layout = Layout::new(&meta.fusion);
    if layout.total != count {
        return Err(ModelError::Checkpoint(format!(
            "checkpoint holds {count} values but the config implies {}",
            layout.total
        )));
    }
    let mut flat = vec![0.0f64; count];
    let mut buf = [0u8; 8];
    for v in flat.iter_mut() {
        file.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
        if !v.is_finite() {
            return Err(ModelError::Checkpoint("non-finite parameter value".into()));
        }
    }
    Ok((
        Params {
            config: meta.fusion.clone(),
            layout,
            flat,
        },
        meta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_params_and_meta() {
        let config = FusionConfig {
            window_len: 6,
            side: 8,
            tubelet_t: 3,
            patch: 4,
            embed_dim: 8,
            heads: 2,
            depth: 1,
            imu_group: 3,
            feature_dim: 4,
            ..FusionConfig::default()
        };
        let params = Params::init(&config).unwrap();
        let meta = CheckpointMeta {
            fusion: config,
            pipeline: PipelineConfig::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &params, &meta).unwrap();
        let (back, back_meta) = load_checkpoint(&path).unwrap();
        assert_eq!(back.flat, params.flat);
        assert_eq!(back_meta, meta);
    }

    #[test]
    fn config_param_count_mismatch_detected() {
        let config = FusionConfig {
            window_len: 6,
            side: 8,
            tubelet_t: 3,
            patch: 4,
            embed_dim: 8,
            heads: 2,
            depth: 1,
            imu_group: 3,
            feature_dim: 4,
            ..FusionConfig::default()
        };
        let params = Params::init(&config).unwrap();
        // Claim a different architecture in the metadata.
        let meta = CheckpointMeta {
            fusion: FusionConfig { depth: 2, ..config },
            pipeline: PipelineConfig::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let err = save_checkpoint(&path, &params, &meta).unwrap_err();
        assert!(matches!(err, ModelError::Checkpoint(_)));
    }

    #[test]
    fn truncated_checkpoint_fails_cleanly() {
        let config = FusionConfig {
            window_len: 6,
            side: 8,
            tubelet_t: 3,
            patch: 4,
            embed_dim: 8,
            heads: 2,
            depth: 1,
            imu_group: 3,
            feature_dim: 4,
            ..FusionConfig::default()
        };
        let params = Params::init(&config).unwrap();
        let meta = CheckpointMeta {
            fusion: config,
            pipeline: PipelineConfig::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &params, &meta).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
