//! Raw streams to classifier-ready windows: temporal alignment at camera
//! rate, image preprocessing, IMU normalization, stride-one windowing.

pub mod preprocess;
pub mod sync;
pub mod window;

pub use preprocess::{
    crop_rect, crop_square, normalize_imu, resize_bilinear, to_model_input, CropRect,
    PreprocessError, SplitStats, StatsAccumulator,
};
pub use sync::{
    Preprocessor, SyncCounters, SyncError, SyncMode, SyncOptions, SyncedSample, Synchronizer,
    DEFAULT_STALENESS_BUDGET_US, DEFAULT_TOLERANCE_US,
};
pub use window::{Window, WindowBuffer, WindowError, DEFAULT_WINDOW_LEN, NOMINAL_SPAN_US};

use crate::sample::ImuRanges;
use serde::{Deserialize, Serialize};

/// The pipeline configuration document (serialized as clear-text JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub window_len: usize,
    pub tolerance_us: u64,
    pub staleness_budget_us: u64,
    pub model_side: u16,
    pub imu_ranges: ImuRanges,
    pub split_stats: SplitStats,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window_len: DEFAULT_WINDOW_LEN,
            tolerance_us: DEFAULT_TOLERANCE_US,
            staleness_budget_us: DEFAULT_STALENESS_BUDGET_US,
            model_side: 32,
            imu_ranges: ImuRanges::default(),
            split_stats: SplitStats::default(),
        }
    }
}

impl PipelineConfig {
    pub fn sync_options(&self, mode: SyncMode) -> SyncOptions {
        SyncOptions {
            tolerance_us: self.tolerance_us,
            staleness_budget_us: self.staleness_budget_us,
            mode,
        }
    }
}
