//! Compact labeled-window storage for training and evaluation.
//!
//! Frames are kept as resized, unstandardized 8-bit grayscale; the split's
//! pixel statistics are applied when a sample is expanded to model input.
//! This keeps a 600-window dataset around 100 MB instead of a gigabyte.

use crate::action::ActionClass;
use crate::model::network::ModelInput;
use crate::model::{FusionConfig, ModelError, IMU_STEP_DIM};
use crate::pipeline::preprocess::SplitStats;

/// One labeled window: quantized video, normalized IMU block, label.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSample {
    /// T x side x side, pixel in [0,1] quantized to u8.
    pub frames_top: Vec<u8>,
    pub frames_bottom: Vec<u8>,
    /// T x 72 normalized channels.
    pub imu: Vec<f32>,
    pub label: ActionClass,
}

impl CompactSample {
    pub fn to_input(&self, stats: &SplitStats) -> ModelInput {
        let mean = stats.mean;
        let inv_std = 1.0 / stats.effective_std();
        let expand = |frames: &[u8]| -> Vec<f64> {
            frames
                .iter()
                .map(|&p| (p as f64 / 255.0 - mean) * inv_std)
                .collect()
        };
        ModelInput {
            video_top: expand(&self.frames_top),
            video_bottom: expand(&self.frames_bottom),
            imu: self.imu.iter().map(|&v| v as f64).collect(),
        }
    }

    /// Mean of the raw unit-interval pixels (both cameras), used when
    /// accumulating split statistics.
    pub fn pixel_sums(&self) -> (u64, f64, f64) {
        let mut count = 0u64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for frames in [&self.frames_top, &self.frames_bottom] {
            for &p in frames.iter() {
                let v = p as f64 / 255.0;
                count += 1;
                sum += v;
                sum_sq += v * v;
            }
        }
        (count, sum, sum_sq)
    }
}

/// A split of labeled windows plus the pixel statistics computed over it.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<CompactSample>,
    pub stats: SplitStats,
}

impl Dataset {
    pub fn new(samples: Vec<CompactSample>) -> Dataset {
        let mut count = 0u64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for s in &samples {
            let (c, a, q) = s.pixel_sums();
            count += c;
            sum += a;
            sum_sq += q;
        }
        let stats = if count == 0 {
            SplitStats::default()
        } else {
            let n = count as f64;
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0);
            SplitStats { mean, std: var.sqrt() }
        };
        Dataset { samples, stats }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Classes present in this split.
    pub fn class_histogram(&self) -> [usize; ActionClass::COUNT] {
        let mut hist = [0usize; ActionClass::COUNT];
        for s in &self.samples {
            hist[s.label.index()] += 1;
        }
        hist
    }

    pub fn missing_classes(&self) -> Vec<ActionClass> {
        let hist = self.class_histogram();
        ActionClass::ALL
            .iter()
            .copied()
            .filter(|c| hist[c.index()] == 0)
            .collect()
    }

    /// Validate shape consistency against a model configuration.
    pub fn check_shapes(&self, config: &FusionConfig) -> Result<(), ModelError> {
        let frame_len = config.window_len * config.side * config.side;
        let imu_len = config.window_len * IMU_STEP_DIM;
        for (i, s) in self.samples.iter().enumerate() {
            if s.frames_top.len() != frame_len
                || s.frames_bottom.len() != frame_len
                || s.imu.len() != imu_len
            {
                return Err(ModelError::Dataset(format!(
                    "sample {i} has shapes ({}, {}, {}), expected ({frame_len}, {frame_len}, {imu_len})",
                    s.frames_top.len(),
                    s.frames_bottom.len(),
                    s.imu.len()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(label: ActionClass, fill: u8) -> CompactSample {
        CompactSample {
            frames_top: vec![fill; 4],
            frames_bottom: vec![fill; 4],
            imu: vec![0.0; 8],
            label,
        }
    }

    #[test]
    fn stats_over_all_pixels() {
        let ds = Dataset::new(vec![sample(ActionClass::Idle, 0), sample(ActionClass::Idle, 255)]);
        assert!((ds.stats.mean - 0.5).abs() < 1e-9);
        assert!((ds.stats.std - 0.5).abs() < 1e-9);
    }

    #[test]
    fn missing_classes_reported() {
        let ds = Dataset::new(vec![sample(ActionClass::Pinching, 10)]);
        let missing = ds.missing_classes();
        assert_eq!(missing.len(), 14);
        assert!(!missing.contains(&ActionClass::Pinching));
    }

    #[test]
    fn to_input_standardizes() {
        let s = sample(ActionClass::Idle, 255);
        let input = s.to_input(&SplitStats { mean: 0.5, std: 0.5 });
        for &v in &input.video_top {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }
}
