//! Dataset assembly: synthetic recordings through the synchronization and
//! preprocessing pipeline into labeled windows, split 60/20/20 by recording.

use crate::action::ActionClass;
use crate::ingest::recording::Recording;
use crate::model::dataset::{CompactSample, Dataset};
use crate::pipeline::preprocess::SplitStats;
use crate::pipeline::sync::{SyncMode, Preprocessor, Synchronizer};
use crate::pipeline::window::{Window, WindowBuffer};
use crate::pipeline::PipelineConfig;
use crate::sample::SensorGeometry;
use crate::synth::{gen_recording, SynthScript};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("recording has no ground-truth labels")]
    NoLabels,
    #[error(transparent)]
    Sync(#[from] crate::pipeline::sync::SyncError),
    #[error(transparent)]
    Window(#[from] crate::pipeline::window::WindowError),
    #[error(transparent)]
    Preprocess(#[from] crate::pipeline::preprocess::PreprocessError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
    #[error("split needs at least {needed} recordings per class, got {got}")]
    TooFewRecordings { needed: usize, got: usize },
}

/// Synchronize a recording and emit windows at the given stride (1 = every
/// frame, `window_len` = non-overlapping segments).
pub fn extract_windows(
    recording: &Recording,
    pipe: &PipelineConfig,
    stats: SplitStats,
    stride: usize,
) -> Result<Vec<Window>, DatasetError> {
    let preproc = Preprocessor::new(
        &recording.meta.geometry,
        pipe.model_side,
        stats,
        pipe.imu_ranges,
    )?;
    let sync = Synchronizer::new(
        recording.imu.iter().cloned(),
        recording.top.iter().cloned(),
        recording.bottom.iter().cloned(),
        pipe.sync_options(SyncMode::Replay),
        preproc,
    );
    let mut buffer = WindowBuffer::new(pipe.window_len);
    let mut windows = Vec::new();
    let mut emission = 0usize;
    for item in sync {
        if let Some(window) = buffer.push(item?)? {
            if emission % stride == 0 {
                windows.push(window);
            }
            emission += 1;
        }
    }
    Ok(windows)
}

/// A stride-one pass over a recording: every synced sample timestamp plus
/// the window at each position (the first `window_len - 1` timestamps carry
/// no window).
pub struct OnlineStream {
    pub timestamps: Vec<u64>,
    pub windows: Vec<Window>,
    pub counters: crate::pipeline::sync::SyncCounters,
}

/// Synchronize and window a recording at stride 1 with the given
/// (training-split) statistics, keeping the full camera-rate timeline.
pub fn online_windows(
    recording: &Recording,
    pipe: &PipelineConfig,
    stats: SplitStats,
) -> Result<OnlineStream, DatasetError> {
    let preproc = Preprocessor::new(
        &recording.meta.geometry,
        pipe.model_side,
        stats,
        pipe.imu_ranges,
    )?;
    let mut sync = Synchronizer::new(
        recording.imu.iter().cloned(),
        recording.top.iter().cloned(),
        recording.bottom.iter().cloned(),
        pipe.sync_options(SyncMode::Replay),
        preproc,
    );
    let mut buffer = WindowBuffer::new(pipe.window_len);
    let mut timestamps = Vec::new();
    let mut windows = Vec::new();
    for item in sync.by_ref() {
        let sample = item?;
        timestamps.push(sample.timestamp_us);
        if let Some(window) = buffer.push(sample)? {
            windows.push(window);
        }
    }
    let counters = sync.counters();
    Ok(OnlineStream {
        timestamps,
        windows,
        counters,
    })
}

/// Quantize a window into compact storage, labeling it by the ground truth
/// at its newest frame.
pub fn window_to_compact(window: &Window, label: ActionClass) -> CompactSample {
    let quantize = |pixels: &[f32]| -> Vec<u8> {
        pixels
            .iter()
            .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    };
    let mut frames_top = Vec::with_capacity(window.len() * 1024);
    let mut frames_bottom = Vec::with_capacity(window.len() * 1024);
    let mut imu = Vec::with_capacity(window.len() * 72);
    for s in window.samples() {
        frames_top.extend(quantize(&s.frame_top.pixels));
        frames_bottom.extend(quantize(&s.frame_bottom.pixels));
        for module in &s.imu_block {
            imu.extend_from_slice(module);
        }
    }
    CompactSample {
        frames_top,
        frames_bottom,
        imu,
        label,
    }
}

/// Windows of a labeled recording as compact samples (identity statistics:
/// pixels stay in the unit interval until a split standardizes them).
pub fn compact_windows(
    recording: &Recording,
    pipe: &PipelineConfig,
    stride: usize,
) -> Result<Vec<CompactSample>, DatasetError> {
    let labels = recording.meta.labels.as_ref().ok_or(DatasetError::NoLabels)?;
    let identity = SplitStats { mean: 0.0, std: 1.0 };
    let windows = extract_windows(recording, pipe, identity, stride)?;
    Ok(windows
        .iter()
        .map(|w| {
            let label = labels
                .label_at(w.newest_ts_us())
                .unwrap_or(ActionClass::Idle);
            window_to_compact(w, label)
        })
        .collect())
}

/// Parameters of the segmented (offline-style) synthetic dataset: per class,
/// several recordings of back-to-back 3-second instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfflineDatasetSpec {
    pub recordings_per_class: usize,
    pub windows_per_recording: usize,
    pub instance_s: f64,
    pub seed: u64,
}

impl Default for OfflineDatasetSpec {
    fn default() -> Self {
        OfflineDatasetSpec {
            recordings_per_class: 5,
            windows_per_recording: 8,
            instance_s: 3.0,
            seed: 0,
        }
    }
}

impl OfflineDatasetSpec {
    /// Deterministic per-recording script.
    pub fn script(&self, class: ActionClass, recording_idx: usize) -> SynthScript {
        let seed = self
            .seed
            .wrapping_mul(0x0100_0000_01B3)
            .wrapping_add((class.index() * 1000 + recording_idx) as u64);
        SynthScript::repeated(class, self.windows_per_recording, self.instance_s, seed)
    }

    /// 60/20/20 split of recording indices.
    pub fn split_counts(&self) -> Result<(usize, usize, usize), DatasetError> {
        let r = self.recordings_per_class;
        if r < 3 {
            return Err(DatasetError::TooFewRecordings { needed: 3, got: r });
        }
        let val = (r as f64 * 0.2).round().max(1.0) as usize;
        let test = val;
        let train = r - val - test;
        Ok((train, val, test))
    }
}

/// Generate the three splits, assigning whole recordings 60/20/20 per class.
pub fn gen_offline_splits(
    spec: &OfflineDatasetSpec,
    pipe: &PipelineConfig,
    geometry: &SensorGeometry,
) -> Result<(Dataset, Dataset, Dataset), DatasetError> {
    use rayon::prelude::*;
    let (n_train, n_val, _) = spec.split_counts()?;

    let jobs: Vec<(ActionClass, usize)> = ActionClass::ALL
        .iter()
        .flat_map(|&c| (0..spec.recordings_per_class).map(move |r| (c, r)))
        .collect();
    let per_recording: Vec<Result<(usize, Vec<CompactSample>), DatasetError>> = jobs
        .par_iter()
        .map(|&(class, idx)| {
            let recording = gen_recording(&spec.script(class, idx), geometry)?;
            let samples = compact_windows(&recording, pipe, pipe.window_len)?;
            Ok((idx, samples))
        })
        .collect();

    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for item in per_recording {
        let (idx, samples) = item?;
        let bucket = if idx < n_train {
            &mut train
        } else if idx < n_train + n_val {
            &mut val
        } else {
            &mut test
        };
        bucket.extend(samples);
    }
    Ok((Dataset::new(train), Dataset::new(val), Dataset::new(test)))
}
