//! Stride-one sliding window over the synced sample stream.

use crate::pipeline::sync::SyncedSample;
use std::collections::VecDeque;
use std::sync::Arc;

/// Window length matching the 3-second segments at 30 fps.
pub const DEFAULT_WINDOW_LEN: usize = 90;
/// Nominal window span.
pub const NOMINAL_SPAN_US: u64 = 3_000_000;

/// A fixed-length, timestamp-ordered snapshot of the synced stream.
/// Emission shares no mutable state with the buffer: samples are immutable
/// and reference-counted.
#[derive(Debug, Clone)]
pub struct Window {
    samples: Vec<Arc<SyncedSample>>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Arc<SyncedSample>] {
        &self.samples
    }

    pub fn first_ts_us(&self) -> u64 {
        self.samples.first().map(|s| s.timestamp_us).unwrap_or(0)
    }

    /// Timestamp of the newest sample; online predictions label this frame.
    pub fn newest_ts_us(&self) -> u64 {
        self.samples.last().map(|s| s.timestamp_us).unwrap_or(0)
    }

    pub fn span_us(&self) -> u64 {
        self.newest_ts_us() - self.first_ts_us()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WindowError {
    #[error("out-of-order push: {pushed} after {last}")]
    OutOfOrder { pushed: u64, last: u64 },
    #[error("window span {span_us} us outside {nominal_us} us +- {tol_percent}%")]
    SpanOutOfTolerance {
        span_us: u64,
        nominal_us: u64,
        tol_percent: f64,
    },
}

/// Stride-one window buffer: fills to `window_len`, then emits one window
/// per push.
#[derive(Debug, Clone)]
pub struct WindowBuffer {
    window_len: usize,
    nominal_span_us: u64,
    span_tolerance: f64,
    buf: VecDeque<Arc<SyncedSample>>,
    last_ts: Option<u64>,
}

impl WindowBuffer {
    pub fn new(window_len: usize) -> Self {
        WindowBuffer {
            window_len,
            nominal_span_us: NOMINAL_SPAN_US,
            span_tolerance: 0.10,
            buf: VecDeque::with_capacity(window_len),
            last_ts: None,
        }
    }

    pub fn with_span_check(mut self, nominal_span_us: u64, tolerance: f64) -> Self {
        self.nominal_span_us = nominal_span_us;
        self.span_tolerance = tolerance;
        self
    }

    /// Disable the span invariant (used for non-realtime unit fixtures).
    pub fn without_span_check(mut self) -> Self {
        self.span_tolerance = f64::INFINITY;
        self
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn fill(&self) -> usize {
        self.buf.len()
    }

    /// Push the next synced sample; returns a window snapshot once full.
    pub fn push(&mut self, sample: SyncedSample) -> Result<Option<Window>, WindowError> {
        if let Some(last) = self.last_ts {
            if sample.timestamp_us <= last {
                return Err(WindowError::OutOfOrder {
                    pushed: sample.timestamp_us,
                    last,
                });
            }
        }
        self.last_ts = Some(sample.timestamp_us);

        if self.buf.len() == self.window_len {
            self.buf.pop_front();
        }
        self.buf.push_back(Arc::new(sample));
        if self.buf.len() < self.window_len {
            return Ok(None);
        }

        let window = Window {
            samples: self.buf.iter().cloned().collect(),
        };
        if self.span_tolerance.is_finite() {
            let span = window.span_us();
            let err = (span as f64 - self.nominal_span_us as f64).abs();
            if err > self.span_tolerance * self.nominal_span_us as f64 {
                return Err(WindowError::SpanOutOfTolerance {
                    span_us: span,
                    nominal_us: self.nominal_span_us,
                    tol_percent: self.span_tolerance * 100.0,
                });
            }
        }
        Ok(Some(window))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::ProcessedFrame;

    fn sample(t: u64) -> SyncedSample {
        SyncedSample {
            timestamp_us: t,
            frame_top: ProcessedFrame { side: 8, pixels: vec![0.0; 64] },
            frame_bottom: ProcessedFrame { side: 8, pixels: vec![0.0; 64] },
            imu_block: [[0.0; 9]; 8],
            stale: [false; 8],
        }
    }

    #[test]
    fn fill_rule_first_emission_at_90() {
        let mut buf = WindowBuffer::new(90);
        for i in 0..89u64 {
            assert!(buf.push(sample(i * 33_333)).unwrap().is_none());
        }
        let w = buf.push(sample(89 * 33_333)).unwrap().expect("90th push emits");
        assert_eq!(w.len(), 90);
        assert_eq!(w.first_ts_us(), 0);
        assert_eq!(w.newest_ts_us(), 89 * 33_333);
    }

    #[test]
    fn stride_one_slide() {
        let mut buf = WindowBuffer::new(90);
        for i in 0..90u64 {
            buf.push(sample(i * 33_333)).unwrap();
        }
        let w = buf.push(sample(90 * 33_333)).unwrap().unwrap();
        assert_eq!(w.first_ts_us(), 33_333);
        assert_eq!(w.newest_ts_us(), 90 * 33_333);
    }

    #[test]
    fn emission_count_is_pushes_minus_fill() {
        let mut buf = WindowBuffer::new(90);
        let mut emitted = 0;
        for i in 0..300u64 {
            if buf.push(sample(i * 33_333)).unwrap().is_some() {
                emitted += 1;
            }
        }
        assert_eq!(emitted, 300 - 90 + 1);
    }

    #[test]
    fn out_of_order_push_reports_both_timestamps() {
        let mut buf = WindowBuffer::new(90);
        buf.push(sample(1000)).unwrap();
        let err = buf.push(sample(500)).unwrap_err();
        assert_eq!(err, WindowError::OutOfOrder { pushed: 500, last: 1000 });
    }

    #[test]
    fn emitted_window_is_a_snapshot() {
        let mut buf = WindowBuffer::new(3).without_span_check();
        buf.push(sample(1)).unwrap();
        buf.push(sample(2)).unwrap();
        let w1 = buf.push(sample(3)).unwrap().unwrap();
        let w2 = buf.push(sample(4)).unwrap().unwrap();
        // The earlier snapshot is unaffected by later pushes.
        assert_eq!(w1.first_ts_us(), 1);
        assert_eq!(w2.first_ts_us(), 2);
    }

    #[test]
    fn span_violation_is_an_error() {
        let mut buf = WindowBuffer::new(90);
        for i in 0..89u64 {
            buf.push(sample(i * 33_333)).unwrap();
        }
        // Final sample lands far in the future: span blows the tolerance.
        let err = buf.push(sample(89 * 33_333 + 2_000_000)).unwrap_err();
        assert!(matches!(err, WindowError::SpanOutOfTolerance { .. }));
    }

    #[test]
    fn windows_tile_the_stream() {
        let mut buf = WindowBuffer::new(90);
        let mut starts = Vec::new();
        for i in 0..200u64 {
            if let Some(w) = buf.push(sample(i * 33_333)).unwrap() {
                starts.push(w.first_ts_us());
            }
        }
        for pair in starts.windows(2) {
            assert_eq!(pair[1] - pair[0], 33_333);
        }
    }
}
