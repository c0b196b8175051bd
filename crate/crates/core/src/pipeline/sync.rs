//! Temporal alignment of the three sensor streams at camera rate.
//!
//! One synced sample is emitted per Top-camera frame. The Bottom frame is
//! the nearest by timestamp within tolerance; each IMU module contributes
//! its nearest sample (replay) or its latest at-or-before sample (live),
//! falling back to held-last with a staleness flag. Held values older than
//! the staleness budget end the stream with an error.
//!
//! The stage is a pure function of the input logs: identical logs produce an
//! identical synced stream regardless of how producers interleaved.

use crate::pipeline::preprocess::{
    crop_rect, normalize_imu, to_model_input, CropRect, PreprocessError, SplitStats,
};
use crate::sample::{
    CameraId, ImuRanges, ImuSample, ProcessedFrame, SensorGeometry, TactileFrame, IMU_CHANNELS,
    IMU_MODULES,
};
use std::collections::VecDeque;
use std::iter::Peekable;

/// Half a frame period: the default pairing tolerance.
pub const DEFAULT_TOLERANCE_US: u64 = 16_667;
/// Default staleness budget before a held-last value is an error.
pub const DEFAULT_STALENESS_BUDGET_US: u64 = 100_000;

/// Pairing behavior for the IMU streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncMode {
    /// Symmetric nearest-neighbor within tolerance (ties to the earlier
    /// sample). Used when processing recorded logs.
    Replay,
    /// Causal: latest sample at-or-before the frame, stale when older than
    /// the tolerance. Never waits for future IMU samples.
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncOptions {
    pub tolerance_us: u64,
    pub staleness_budget_us: u64,
    pub mode: SyncMode,
}

impl Default for SyncOptions {
    fn default() -> Self {
        SyncOptions {
            tolerance_us: DEFAULT_TOLERANCE_US,
            staleness_budget_us: DEFAULT_STALENESS_BUDGET_US,
            mode: SyncMode::Replay,
        }
    }
}

/// One camera-rate fused sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncedSample {
    /// Timestamp of the Top-camera frame.
    pub timestamp_us: u64,
    pub frame_top: ProcessedFrame,
    pub frame_bottom: ProcessedFrame,
    /// Normalized channel values, [module][channel], in [-1, 1].
    pub imu_block: [[f32; IMU_CHANNELS]; IMU_MODULES],
    /// Held-last indicator per module.
    pub stale: [bool; IMU_MODULES],
}

impl SyncedSample {
    pub fn any_stale(&self) -> bool {
        self.stale.iter().any(|&s| s)
    }
}

/// Data-health counters exposed by the synchronizer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SyncCounters {
    pub emitted: u64,
    pub dropped_no_bottom: u64,
    pub dropped_no_imu: u64,
    pub stale_module_flags: u64,
    pub imu_saturated_channels: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SyncError {
    #[error("module {module} held-last for {gap_us} us at frame {frame_ts_us} (budget {budget_us} us)")]
    StaleBeyondBudget {
        module: usize,
        frame_ts_us: u64,
        gap_us: u64,
        budget_us: u64,
    },
    #[error("{stream} stream timestamps decrease: {prev} then {next}")]
    InputOrder { stream: &'static str, prev: u64, next: u64 },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

/// Fixed per-camera preprocessing applied to every synced frame.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub rect_top: CropRect,
    pub rect_bottom: CropRect,
    pub side: u16,
    pub stats: SplitStats,
    pub ranges: ImuRanges,
}

impl Preprocessor {
    pub fn new(
        geometry: &SensorGeometry,
        side: u16,
        stats: SplitStats,
        ranges: ImuRanges,
    ) -> Result<Preprocessor, PreprocessError> {
        Ok(Preprocessor {
            rect_top: crop_rect(geometry, CameraId::Top)?,
            rect_bottom: crop_rect(geometry, CameraId::Bottom)?,
            side,
            stats,
            ranges,
        })
    }

    pub fn frame(&self, f: &TactileFrame) -> Result<ProcessedFrame, PreprocessError> {
        let rect = match f.camera_id {
            CameraId::Top => &self.rect_top,
            CameraId::Bottom => &self.rect_bottom,
        };
        to_model_input(f, rect, self.side, &self.stats)
    }
}

struct ModuleBuffer {
    samples: VecDeque<ImuSample>,
}

/// Pull-based synchronizer over three ordered streams.
pub struct Synchronizer<I, T, B>
where
    I: Iterator<Item = ImuSample>,
    T: Iterator<Item = TactileFrame>,
    B: Iterator<Item = TactileFrame>,
{
    imu: Peekable<I>,
    top: T,
    bottom: Peekable<B>,
    opts: SyncOptions,
    preproc: Preprocessor,
    modules: Vec<ModuleBuffer>,
    bottom_buf: VecDeque<TactileFrame>,
    counters: SyncCounters,
    last_top_ts: Option<u64>,
    last_imu_ts: Option<u64>,
    failed: bool,
}

impl<I, T, B> Synchronizer<I, T, B>
where
    I: Iterator<Item = ImuSample>,
    T: Iterator<Item = TactileFrame>,
    B: Iterator<Item = TactileFrame>,
{
    pub fn new(imu: I, top: T, bottom: B, opts: SyncOptions, preproc: Preprocessor) -> Self {
        Synchronizer {
            imu: imu.peekable(),
            top,
            bottom: bottom.peekable(),
            opts,
            preproc,
            modules: (0..IMU_MODULES)
                .map(|_| ModuleBuffer {
                    samples: VecDeque::new(),
                })
                .collect(),
            bottom_buf: VecDeque::new(),
            counters: SyncCounters::default(),
            last_top_ts: None,
            last_imu_ts: None,
            failed: false,
        }
    }

    pub fn counters(&self) -> SyncCounters {
        self.counters
    }

    /// Pull IMU samples into per-module buffers up to `horizon_us`.
    fn fill_imu(&mut self, horizon_us: u64) -> Result<(), SyncError> {
        while let Some(peek) = self.imu.peek() {
            if peek.timestamp_us > horizon_us {
                break;
            }
            let s = self.imu.next().unwrap();
            if let Some(prev) = self.last_imu_ts {
                if s.timestamp_us < prev {
                    return Err(SyncError::InputOrder {
                        stream: "imu",
                        prev,
                        next: s.timestamp_us,
                    });
                }
            }
            self.last_imu_ts = Some(s.timestamp_us);
            let m = s.module_id as usize % IMU_MODULES;
            self.modules[m].samples.push_back(s);
        }
        Ok(())
    }

    fn fill_bottom(&mut self, horizon_us: u64) -> Result<(), SyncError> {
        while let Some(peek) = self.bottom.peek() {
            if peek.timestamp_us > horizon_us {
                break;
            }
            let f = self.bottom.next().unwrap();
            if let Some(back) = self.bottom_buf.back() {
                if f.timestamp_us < back.timestamp_us {
                    return Err(SyncError::InputOrder {
                        stream: "cam_bottom",
                        prev: back.timestamp_us,
                        next: f.timestamp_us,
                    });
                }
            }
            self.bottom_buf.push_back(f);
        }
        Ok(())
    }

    /// Nearest element of `buf` (by `|ts - t|`, strict tolerance, ties to the
    /// earlier sample).
    fn nearest_bottom(&self, t: u64) -> Option<usize> {
        let tol = self.opts.tolerance_us;
        let mut best: Option<(usize, u64)> = None;
        for (i, f) in self.bottom_buf.iter().enumerate() {
            let d = f.timestamp_us.abs_diff(t);
            if d >= tol {
                continue;
            }
            // Strictly-better keeps the earlier sample on ties.
            if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }

    fn trim(&mut self, t: u64) {
        let tol = self.opts.tolerance_us;
        while self.bottom_buf.len() >= 2
            && self.bottom_buf[1].timestamp_us <= t
            && self.bottom_buf[0].timestamp_us + tol < t
        {
            self.bottom_buf.pop_front();
        }
        for m in &mut self.modules {
            while m.samples.len() >= 2
                && m.samples[1].timestamp_us <= t
                && m.samples[0].timestamp_us + tol < t
            {
                m.samples.pop_front();
            }
        }
    }

    /// Pick the IMU sample for module `m` at frame time `t`.
    /// Returns (channels, actual sample ts, stale flag) or None.
    fn pick_imu(&self, m: usize, t: u64) -> Option<(ImuSample, bool)> {
        let tol = self.opts.tolerance_us;
        let buf = &self.modules[m].samples;
        match self.opts.mode {
            SyncMode::Replay => {
                let mut best: Option<(&ImuSample, u64)> = None;
                for s in buf {
                    let d = s.timestamp_us.abs_diff(t);
                    if d < tol && best.map(|(_, bd)| d < bd).unwrap_or(true) {
                        best = Some((s, d));
                    }
                }
                if let Some((s, _)) = best {
                    return Some((*s, false));
                }
                // Held-last: latest at-or-before, any distance.
                buf.iter()
                    .rev()
                    .find(|s| s.timestamp_us <= t)
                    .map(|s| (*s, true))
            }
            SyncMode::Live => buf
                .iter()
                .rev()
                .find(|s| s.timestamp_us <= t)
                .map(|s| (*s, t.abs_diff(s.timestamp_us) >= tol)),
        }
    }
}

impl<I, T, B> Iterator for Synchronizer<I, T, B>
where
    I: Iterator<Item = ImuSample>,
    T: Iterator<Item = TactileFrame>,
    B: Iterator<Item = TactileFrame>,
{
    type Item = Result<SyncedSample, SyncError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let top = self.top.next()?;
            let t = top.timestamp_us;
            if let Some(prev) = self.last_top_ts {
                if t < prev {
                    self.failed = true;
                    return Some(Err(SyncError::InputOrder {
                        stream: "cam_top",
                        prev,
                        next: t,
                    }));
                }
            }
            self.last_top_ts = Some(t);

            let imu_horizon = match self.opts.mode {
                SyncMode::Replay => t + self.opts.tolerance_us,
                SyncMode::Live => t,
            };
            if let Err(e) = self.fill_imu(imu_horizon) {
                self.failed = true;
                return Some(Err(e));
            }
            if let Err(e) = self.fill_bottom(t + self.opts.tolerance_us) {
                self.failed = true;
                return Some(Err(e));
            }

            let Some(bottom_idx) = self.nearest_bottom(t) else {
                self.counters.dropped_no_bottom += 1;
                self.trim(t);
                continue;
            };

            let mut imu_block = [[0f32; IMU_CHANNELS]; IMU_MODULES];
            let mut stale = [false; IMU_MODULES];
            let mut missing = false;
            for m in 0..IMU_MODULES {
                match self.pick_imu(m, t) {
                    Some((sample, is_stale)) => {
                        if is_stale {
                            let gap = t.abs_diff(sample.timestamp_us);
                            if gap >= self.opts.staleness_budget_us {
                                self.failed = true;
                                return Some(Err(SyncError::StaleBeyondBudget {
                                    module: m,
                                    frame_ts_us: t,
                                    gap_us: gap,
                                    budget_us: self.opts.staleness_budget_us,
                                }));
                            }
                            stale[m] = true;
                            self.counters.stale_module_flags += 1;
                        }
                        let (channels, saturated) = normalize_imu(&sample, &self.preproc.ranges);
                        self.counters.imu_saturated_channels += saturated as u64;
                        imu_block[m] = channels;
                    }
                    None => {
                        // Nothing usable for this module yet (stream head).
                        if t >= self.opts.staleness_budget_us {
                            self.failed = true;
                            return Some(Err(SyncError::StaleBeyondBudget {
                                module: m,
                                frame_ts_us: t,
                                gap_us: t,
                                budget_us: self.opts.staleness_budget_us,
                            }));
                        }
                        missing = true;
                        break;
                    }
                }
            }
            if missing {
                self.counters.dropped_no_imu += 1;
                self.trim(t);
                continue;
            }

            let frame_top = match self.preproc.frame(&top) {
                Ok(f) => f,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e.into()));
                }
            };
            let frame_bottom = match self.preproc.frame(&self.bottom_buf[bottom_idx]) {
                Ok(f) => f,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e.into()));
                }
            };
            self.trim(t);
            self.counters.emitted += 1;
            return Some(Ok(SyncedSample {
                timestamp_us: t,
                frame_top,
                frame_bottom,
                imu_block,
                stale,
            }));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preproc() -> Preprocessor {
        Preprocessor::new(
            &SensorGeometry::default(),
            32,
            SplitStats::default(),
            ImuRanges::default(),
        )
        .unwrap()
    }

    fn frame(camera_id: CameraId, t: u64) -> TactileFrame {
        TactileFrame::new(camera_id, t, 256, 144)
    }

    /// IMU grid for all 8 modules; channel 0 stores the sample's grid index
    /// (scaled) so tests can identify which sample was chosen.
    fn imu_grid(times: &[u64]) -> Vec<ImuSample> {
        let mut out = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            for m in 0..IMU_MODULES as u8 {
                let mut ch = [0f32; 9];
                ch[0] = i as f32 / 1000.0;
                out.push(ImuSample::from_channels(m, t, ch));
            }
        }
        out
    }

    /// Recover the grid index stashed by `imu_grid` from a normalized block
    /// value (channel 0 was divided by the 8 g accel full scale).
    fn grid_index(v: f32) -> usize {
        (v * 1000.0 * 8.0).round() as usize
    }

    fn run(
        imu: Vec<ImuSample>,
        top: Vec<TactileFrame>,
        bottom: Vec<TactileFrame>,
        opts: SyncOptions,
    ) -> (Vec<SyncedSample>, SyncCounters, Option<SyncError>) {
        let mut sync = Synchronizer::new(
            imu.into_iter(),
            top.into_iter(),
            bottom.into_iter(),
            opts,
            preproc(),
        );
        let mut samples = Vec::new();
        let mut err = None;
        for item in sync.by_ref() {
            match item {
                Ok(s) => samples.push(s),
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        let counters = sync.counters();
        (samples, counters, err)
    }

    #[test]
    fn ideal_grids_pair_to_nearest() {
        // IMU every 25 ms, frames every 33,333 us: frame 1 (t=33,333) pairs
        // with the IMU sample at 25,000 (distance 8,333 < 16,667).
        let imu_times: Vec<u64> = (0..40).map(|i| i * 25_000).collect();
        let tops: Vec<_> = (0..24).map(|i| frame(CameraId::Top, i * 33_333)).collect();
        let bots: Vec<_> = (0..24)
            .map(|i| frame(CameraId::Bottom, i * 33_333))
            .collect();
        let (samples, counters, err) = run(
            imu_grid(&imu_times),
            tops,
            bots,
            SyncOptions::default(),
        );
        assert!(err.is_none(), "{err:?}");
        assert_eq!(samples.len(), 24);
        assert_eq!(counters.emitted, 24);
        assert_eq!(counters.stale_module_flags, 0);

        // Frame at 33,333 chose grid index 1 (t=25,000).
        let s = &samples[1];
        assert_eq!(s.timestamp_us, 33_333);
        let idx = grid_index(s.imu_block[0][0]);
        assert_eq!(idx, 1);

        // Every pairing distance is at most half the IMU period.
        for s in &samples {
            let idx = grid_index(s.imu_block[0][0]);
            let d = s.timestamp_us.abs_diff(imu_times[idx]);
            assert!(d <= 12_500, "frame {} paired at distance {}", s.timestamp_us, d);
        }
    }

    #[test]
    fn identical_grids_have_zero_distance_and_no_flags() {
        let times: Vec<u64> = (0..30).map(|i| i * 33_333).collect();
        let tops: Vec<_> = times.iter().map(|&t| frame(CameraId::Top, t)).collect();
        let bots: Vec<_> = times.iter().map(|&t| frame(CameraId::Bottom, t)).collect();
        let (samples, counters, err) = run(
            imu_grid(&times),
            tops,
            bots,
            SyncOptions::default(),
        );
        assert!(err.is_none());
        assert_eq!(counters.stale_module_flags, 0);
        for (i, s) in samples.iter().enumerate() {
            let idx = grid_index(s.imu_block[0][0]);
            assert_eq!(idx, i);
            assert!(!s.any_stale());
        }
    }

    #[test]
    fn gap_flags_stale_then_budget_errors() {
        // 60 ms IMU gap: affected frames flagged stale but stream continues.
        let mut times: Vec<u64> = (0..8).map(|i| i * 25_000).collect();
        times.extend((0..8).map(|i| 235_000 + i * 25_000)); // gap 175k..235k
        let tops: Vec<_> = (0..12).map(|i| frame(CameraId::Top, i * 33_333)).collect();
        let bots: Vec<_> = (0..12)
            .map(|i| frame(CameraId::Bottom, i * 33_333))
            .collect();
        let (samples, counters, err) = run(
            imu_grid(&times),
            tops,
            bots,
            SyncOptions::default(),
        );
        assert!(err.is_none(), "{err:?}");
        assert_eq!(samples.len(), 12);
        assert!(counters.stale_module_flags > 0);

        // >= 100 ms gap: stream error naming the module and gap.
        let times: Vec<u64> = vec![0, 25_000, 300_000];
        let tops: Vec<_> = (0..9).map(|i| frame(CameraId::Top, i * 33_333)).collect();
        let bots: Vec<_> = (0..9)
            .map(|i| frame(CameraId::Bottom, i * 33_333))
            .collect();
        let (_, _, err) = run(imu_grid(&times), tops, bots, SyncOptions::default());
        match err {
            Some(SyncError::StaleBeyondBudget { gap_us, .. }) => assert!(gap_us >= 100_000),
            other => panic!("expected staleness error, got {other:?}"),
        }
    }

    #[test]
    fn missing_bottom_frame_drops_and_counts() {
        let times: Vec<u64> = (0..10).map(|i| i * 33_333).collect();
        let tops: Vec<_> = times.iter().map(|&t| frame(CameraId::Top, t)).collect();
        // Bottom missing around frame 5.
        let bots: Vec<_> = times
            .iter()
            .filter(|&&t| t != 5 * 33_333)
            .map(|&t| frame(CameraId::Bottom, t))
            .collect();
        let (samples, counters, err) = run(
            imu_grid(&times),
            tops,
            bots,
            SyncOptions::default(),
        );
        assert!(err.is_none());
        assert_eq!(samples.len(), 9);
        assert_eq!(counters.dropped_no_bottom, 1);
    }

    #[test]
    fn live_mode_is_causal() {
        // Live mode never selects an IMU sample after the frame time.
        let times: Vec<u64> = (0..40).map(|i| i * 25_000).collect();
        let tops: Vec<_> = (1..24).map(|i| frame(CameraId::Top, i * 33_333)).collect();
        let bots: Vec<_> = (1..24)
            .map(|i| frame(CameraId::Bottom, i * 33_333))
            .collect();
        let (samples, _, err) = run(
            imu_grid(&times),
            tops,
            bots,
            SyncOptions {
                mode: SyncMode::Live,
                ..SyncOptions::default()
            },
        );
        assert!(err.is_none());
        for s in &samples {
            let idx = grid_index(s.imu_block[0][0]);
            assert!(
                times[idx] <= s.timestamp_us,
                "live pairing looked ahead: frame {} got sample {}",
                s.timestamp_us,
                times[idx]
            );
        }
    }

    #[test]
    fn deterministic_over_reruns() {
        let times: Vec<u64> = (0..50).map(|i| i * 25_000 + (i % 3) * 900).collect();
        let tops: Vec<_> = (0..30).map(|i| frame(CameraId::Top, i * 33_333 + 17)).collect();
        let bots: Vec<_> = (0..30)
            .map(|i| frame(CameraId::Bottom, i * 33_333 + 400))
            .collect();
        let a = run(
            imu_grid(&times),
            tops.clone(),
            bots.clone(),
            SyncOptions::default(),
        );
        let b = run(imu_grid(&times), tops, bots, SyncOptions::default());
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }
}
