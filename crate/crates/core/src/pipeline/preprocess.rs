//! Per-frame image preprocessing and IMU normalization.
//!
//! Frames go crop -> grayscale -> bilinear resize -> standardize. The crop
//! mask is fixed per camera, derived once from the sensor geometry; applying
//! it is pure per frame. Synthetic frames are single-channel, so the
//! grayscale step (mean of channels) is the identity here.

use crate::sample::{CameraId, ImuRanges, ImuSample, ProcessedFrame, SensorGeometry, TactileFrame, IMU_CHANNELS};
use serde::{Deserialize, Serialize};

/// Scalar pixel statistics of one dataset split, used for standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub mean: f64,
    pub std: f64,
}

impl SplitStats {
    pub const EPSILON: f64 = 1e-6;

    /// Standard deviation with the zero-variance guard applied.
    pub fn effective_std(&self) -> f64 {
        if self.std > Self::EPSILON {
            self.std
        } else {
            Self::EPSILON
        }
    }
}

impl Default for SplitStats {
    fn default() -> Self {
        SplitStats { mean: 0.0, std: 1.0 }
    }
}

/// Accumulates pixel mean/std over all pixels of a split.
#[derive(Debug, Clone, Copy, Default)]
pub struct StatsAccumulator {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

impl StatsAccumulator {
    pub fn push_pixels(&mut self, pixels: &[f32]) {
        for &p in pixels {
            self.count += 1;
            self.sum += p as f64;
            self.sum_sq += (p as f64) * (p as f64);
        }
    }

    pub fn merge(&mut self, other: &StatsAccumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn finish(&self) -> SplitStats {
        if self.count == 0 {
            return SplitStats::default();
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        SplitStats {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PreprocessError {
    #[error("crop geometry invalid: {0}")]
    Geometry(#[from] crate::sample::GeometryError),
    #[error("frame is {w}x{h} but the crop mask expects {expected_w}x{expected_h}")]
    FrameSize {
        w: u16,
        h: u16,
        expected_w: u16,
        expected_h: u16,
    },
    #[error("model side {0} too small (minimum 8)")]
    SideTooSmall(u16),
}

/// The fixed square crop for one camera, in source pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropRect {
    pub x0: u32,
    pub y0: u32,
    pub side: u32,
    pub source_width: u16,
    pub source_height: u16,
}

/// Derive the crop mask for `camera`: a square of side 2*ring_radius
/// centered on the outer marker ring. Fails at setup when the ring does not
/// fit inside the source frame.
pub fn crop_rect(geometry: &SensorGeometry, camera: CameraId) -> Result<CropRect, PreprocessError> {
    geometry.validate()?;
    let (cx, cy) = geometry.ring_center(camera);
    let r = geometry.outer_ring_radius_px;
    let x0 = (cx - r).round();
    let y0 = (cy - r).round();
    let side = (2.0 * r).round();
    debug_assert!(x0 >= 0.0 && y0 >= 0.0, "validated by SensorGeometry");
    Ok(CropRect {
        x0: x0 as u32,
        y0: y0 as u32,
        side: side as u32,
        source_width: geometry.source_width,
        source_height: geometry.source_height,
    })
}

/// Apply the fixed mask: returns the square crop as unit-interval scalars.
pub fn crop_square(frame: &TactileFrame, rect: &CropRect) -> Result<Vec<f32>, PreprocessError> {
    if frame.width != rect.source_width || frame.height != rect.source_height {
        return Err(PreprocessError::FrameSize {
            w: frame.width,
            h: frame.height,
            expected_w: rect.source_width,
            expected_h: rect.source_height,
        });
    }
    let side = rect.side as usize;
    let mut out = Vec::with_capacity(side * side);
    for row in 0..side {
        let src_row = rect.y0 as usize + row;
        let base = src_row * frame.width as usize + rect.x0 as usize;
        out.extend(
            frame.pixels[base..base + side]
                .iter()
                .map(|&p| p as f32 / 255.0),
        );
    }
    Ok(out)
}

/// Bilinear resize of a square single-channel image, pixel-center aligned.
pub fn resize_bilinear(src: &[f32], src_side: usize, dst_side: usize) -> Vec<f32> {
    if src_side == dst_side {
        return src.to_vec();
    }
    let scale = src_side as f32 / dst_side as f32;
    let mut out = Vec::with_capacity(dst_side * dst_side);
    let max = (src_side - 1) as f32;
    for dy in 0..dst_side {
        let sy = ((dy as f32 + 0.5) * scale - 0.5).clamp(0.0, max);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(src_side - 1);
        let fy = sy - y0 as f32;
        for dx in 0..dst_side {
            let sx = ((dx as f32 + 0.5) * scale - 0.5).clamp(0.0, max);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(src_side - 1);
            let fx = sx - x0 as f32;
            let top = src[y0 * src_side + x0] * (1.0 - fx) + src[y0 * src_side + x1] * fx;
            let bot = src[y1 * src_side + x0] * (1.0 - fx) + src[y1 * src_side + x1] * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }
    out
}

/// Full frame transform: crop, grayscale, resize to `side`, standardize with
/// the split statistics.
pub fn to_model_input(
    frame: &TactileFrame,
    rect: &CropRect,
    side: u16,
    stats: &SplitStats,
) -> Result<ProcessedFrame, PreprocessError> {
    if side < 8 {
        return Err(PreprocessError::SideTooSmall(side));
    }
    let cropped = crop_square(frame, rect)?;
    let resized = resize_bilinear(&cropped, rect.side as usize, side as usize);
    let mean = stats.mean as f32;
    let inv_std = (1.0 / stats.effective_std()) as f32;
    let pixels = resized.iter().map(|&p| (p - mean) * inv_std).collect();
    Ok(ProcessedFrame { side, pixels })
}

/// Resize + standardize an already-cropped unit-interval image (used when
/// building dataset statistics in two passes).
pub fn standardize(resized: &[f32], stats: &SplitStats) -> Vec<f32> {
    let mean = stats.mean as f32;
    let inv_std = (1.0 / stats.effective_std()) as f32;
    resized.iter().map(|&p| (p - mean) * inv_std).collect()
}

/// Normalize the nine channels of a sample to [-1, 1] by full-scale range,
/// clamping spikes. Returns the vector and the number of clamped channels.
pub fn normalize_imu(sample: &ImuSample, ranges: &ImuRanges) -> ([f32; IMU_CHANNELS], u32) {
    let mut out = [0f32; IMU_CHANNELS];
    let mut saturated = 0u32;
    let fs = ranges.per_channel();
    for (i, v) in sample.channels().iter().enumerate() {
        let scaled = *v as f64 / fs[i];
        if scaled.abs() > 1.0 {
            saturated += 1;
        }
        out[i] = scaled.clamp(-1.0, 1.0) as f32;
    }
    (out, saturated)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crop_geometry_oracle() {
        // 256x144 frame, center (128,72), ring radius 60:
        // rows 12..132, cols 68..188, 120x120 crop.
        let g = SensorGeometry::default();
        let rect = crop_rect(&g, CameraId::Top).unwrap();
        assert_eq!((rect.x0, rect.y0, rect.side), (68, 12, 120));
    }

    #[test]
    fn crop_extracts_expected_pixels() {
        let g = SensorGeometry::default();
        let rect = crop_rect(&g, CameraId::Top).unwrap();
        let mut frame = TactileFrame::new(CameraId::Top, 0, 256, 144);
        // Distinct value at the crop's top-left corner.
        frame.pixels[12 * 256 + 68] = 255;
        let cropped = crop_square(&frame, &rect).unwrap();
        assert_eq!(cropped.len(), 120 * 120);
        assert_eq!(cropped[0], 1.0);
        assert_eq!(cropped[1], 0.0);
    }

    #[test]
    fn full_central_square_boundary_case() {
        // Ring radius = height/2, centered: crop equals the full central square.
        let g = SensorGeometry {
            ring_center_top: (128.0, 72.0),
            outer_ring_radius_px: 72.0,
            ..SensorGeometry::default()
        };
        let rect = crop_rect(&g, CameraId::Top).unwrap();
        assert_eq!((rect.x0, rect.y0, rect.side), (56, 0, 144));
    }

    #[test]
    fn off_center_overflow_is_setup_error() {
        let g = SensorGeometry {
            ring_center_top: (230.0, 72.0),
            ..SensorGeometry::default()
        };
        assert!(crop_rect(&g, CameraId::Top).is_err());
    }

    #[test]
    fn checkerboard_halves_to_mid_gray() {
        // Closed-form bilinear oracle: 2x downscale of a 1-pixel checkerboard
        // averages each 2x2 block to exactly (a+b)/2.
        let side = 8;
        let src: Vec<f32> = (0..side * side)
            .map(|i| {
                let (r, c) = (i / side, i % side);
                if (r + c) % 2 == 0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let out = resize_bilinear(&src, side, side / 2);
        for &p in &out {
            assert!((p - 0.5).abs() < 1e-6, "expected mid-gray, got {p}");
        }
    }

    #[test]
    fn constant_image_standardizes_to_zero() {
        let g = SensorGeometry::default();
        let rect = crop_rect(&g, CameraId::Top).unwrap();
        let mut frame = TactileFrame::new(CameraId::Top, 0, 256, 144);
        frame.pixels.fill(100);
        let stats = SplitStats {
            mean: 100.0 / 255.0,
            std: 0.0,
        };
        let processed = to_model_input(&frame, &rect, 32, &stats).unwrap();
        assert_eq!(processed.side, 32);
        assert_eq!(processed.pixels.len(), 32 * 32);
        for &p in &processed.pixels {
            assert!(p.abs() < 1e-3, "expected ~0, got {p}");
        }
    }

    #[test]
    fn preprocessing_is_pure() {
        let g = SensorGeometry::default();
        let rect = crop_rect(&g, CameraId::Top).unwrap();
        let mut frame = TactileFrame::new(CameraId::Top, 7, 256, 144);
        for (i, p) in frame.pixels.iter_mut().enumerate() {
            *p = (i * 31 % 251) as u8;
        }
        let stats = SplitStats { mean: 0.4, std: 0.2 };
        let a = to_model_input(&frame, &rect, 32, &stats).unwrap();
        let b = to_model_input(&frame, &rect, 32, &stats).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn imu_normalization_and_clamping() {
        let ranges = ImuRanges::default();
        let full = ImuSample::from_channels(0, 0, [8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let (v, sat) = normalize_imu(&full, &ranges);
        assert_eq!(v[0], 1.0);
        assert_eq!(sat, 0);

        let zero = ImuSample::from_channels(0, 0, [0.0; 9]);
        assert_eq!(normalize_imu(&zero, &ranges).0, [0.0; 9]);

        // Sensor spike at 1.5x full scale clamps and is counted.
        let spike =
            ImuSample::from_channels(0, 0, [0.0, 0.0, 0.0, 3000.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let (v, sat) = normalize_imu(&spike, &ranges);
        assert_eq!(v[3], 1.0);
        assert_eq!(sat, 1);
    }

    #[test]
    fn split_stats_from_accumulator() {
        let mut acc = StatsAccumulator::default();
        acc.push_pixels(&[0.0, 1.0, 0.0, 1.0]);
        let stats = acc.finish();
        assert!((stats.mean - 0.5).abs() < 1e-12);
        assert!((stats.std - 0.5).abs() < 1e-12);
    }
}
