//! Three-branch late-fusion classifier: two video branches over the tactile
//! camera streams and one inertial branch, encoder features concatenated
//! into a single fully connected classification layer.

pub mod checkpoint;
pub mod dataset;
pub mod layout;
pub mod math;
pub mod network;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use dataset::{CompactSample, Dataset};
pub use layout::{Layout, ParamGroup, Params};
pub use network::{loss_and_grad, predict, predict_window, ModelInput, Prediction};
pub use train::{train, EpochMetrics, Optimizer, TrainOptions, TrainedModel};

use crate::action::ActionClass;
use crate::sample::IMU_CHANNELS;
use serde::{Deserialize, Serialize};

/// Which branch features are zeroed, mirroring unimodal baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    None,
    /// Zero both video features.
    ImuOnly,
    /// Zero the inertial feature.
    VideoOnly,
}

/// Architecture hyperparameters. Defaults are the toy scale: all shape and
/// fusion contracts of the full-size network at a desk-trainable size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Samples per window (T).
    pub window_len: usize,
    /// Video frame side (H = W) consumed by the branches.
    pub side: usize,
    /// Tubelet temporal extent t.
    pub tubelet_t: usize,
    /// Tubelet spatial patch side p.
    pub patch: usize,
    /// Token embedding width D.
    pub embed_dim: usize,
    /// Attention heads.
    pub heads: usize,
    /// Encoder blocks per branch.
    pub depth: usize,
    /// Feed-forward hidden width as a multiple of D.
    pub ffn_mult: usize,
    /// Timesteps grouped into one inertial token.
    pub imu_group: usize,
    /// Per-branch feature width F.
    pub feature_dim: usize,
    /// Output classes.
    pub classes: usize,
    /// Parameter initialization seed.
    pub seed: u64,
    #[serde(default)]
    pub ablation: Ablation,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            window_len: 90,
            side: 32,
            tubelet_t: 10,
            patch: 8,
            embed_dim: 32,
            heads: 4,
            depth: 2,
            ffn_mult: 2,
            imu_group: 10,
            feature_dim: 32,
            classes: ActionClass::COUNT,
            seed: 0,
            ablation: Ablation::None,
        }
    }
}

/// Width of one flattened IMU timestep (8 modules x 9 channels).
pub const IMU_STEP_DIM: usize = crate::sample::IMU_MODULES * IMU_CHANNELS;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("non-finite value in {place}")]
    NonFinite { place: String },
    #[error("input shape mismatch: {0}")]
    InputShape(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::Config(msg));
        if self.side % self.patch != 0 {
            return fail(format!("side {} not divisible by patch {}", self.side, self.patch));
        }
        if self.window_len % self.tubelet_t != 0 {
            return fail(format!(
                "window length {} not divisible by tubelet t {}",
                self.window_len, self.tubelet_t
            ));
        }
        if self.window_len % self.imu_group != 0 {
            return fail(format!(
                "window length {} not divisible by imu group {}",
                self.window_len, self.imu_group
            ));
        }
        if self.embed_dim % self.heads != 0 {
            return fail(format!(
                "embed dim {} not divisible by heads {}",
                self.embed_dim, self.heads
            ));
        }
        if self.classes != ActionClass::COUNT {
            return fail(format!("expected {} classes, got {}", ActionClass::COUNT, self.classes));
        }
        if self.depth == 0 || self.embed_dim == 0 || self.feature_dim == 0 || self.ffn_mult == 0 {
            return fail("zero-sized dimension".into());
        }
        Ok(())
    }

    /// Tokens per video branch: (T/t) * (side/p)^2.
    pub fn video_tokens(&self) -> usize {
        (self.window_len / self.tubelet_t) * (self.side / self.patch) * (self.side / self.patch)
    }

    /// Flattened voxels per tubelet: t * p * p.
    pub fn video_token_dim(&self) -> usize {
        self.tubelet_t * self.patch * self.patch
    }

    pub fn imu_tokens(&self) -> usize {
        self.window_len / self.imu_group
    }

    pub fn imu_token_dim(&self) -> usize {
        self.imu_group * IMU_STEP_DIM
    }

    pub fn ffn_dim(&self) -> usize {
        self.ffn_mult * self.embed_dim
    }
}
