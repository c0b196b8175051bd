//! Raw sensor sample types and the tactile sensor geometry.
//!
//! Timestamps throughout the system are integer microseconds on a single
//! monotonic clock shared by all devices.

use serde::{Deserialize, Serialize};

/// Number of IMU modules on the glove.
pub const IMU_MODULES: usize = 8;
/// Channels per module: 3-axis accel, gyro and magnetometer.
pub const IMU_CHANNELS: usize = 9;
/// Glove sampling rate.
pub const IMU_RATE_HZ: f64 = 40.0;
/// Tactile camera frame rate.
pub const FRAME_RATE_HZ: f64 = 30.0;
/// Ideal IMU sample spacing in microseconds.
pub const IMU_PERIOD_US: u64 = 25_000;
/// Ideal camera frame spacing in microseconds.
pub const FRAME_PERIOD_US: u64 = 33_333;

/// One reading from a glove IMU module: timestamped 9-axis channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub module_id: u8,
    pub timestamp_us: u64,
    /// Acceleration in units of g.
    pub accel: [f32; 3],
    /// Angular velocity in degrees/second.
    pub gyro: [f32; 3],
    /// Magnetic field in microtesla.
    pub mag: [f32; 3],
}

impl ImuSample {
    /// The nine channel values in accel, gyro, mag order.
    pub fn channels(&self) -> [f32; IMU_CHANNELS] {
        [
            self.accel[0],
            self.accel[1],
            self.accel[2],
            self.gyro[0],
            self.gyro[1],
            self.gyro[2],
            self.mag[0],
            self.mag[1],
            self.mag[2],
        ]
    }

    pub fn from_channels(module_id: u8, timestamp_us: u64, ch: [f32; IMU_CHANNELS]) -> Self {
        ImuSample {
            module_id,
            timestamp_us,
            accel: [ch[0], ch[1], ch[2]],
            gyro: [ch[3], ch[4], ch[5]],
            mag: [ch[6], ch[7], ch[8]],
        }
    }

    /// All nine channels finite and within the given full-scale ranges.
    pub fn is_within(&self, ranges: &ImuRanges) -> bool {
        let ch = self.channels();
        ch.iter().all(|v| v.is_finite())
            && ch
                .iter()
                .zip(ranges.per_channel())
                .all(|(v, fs)| v.abs() as f64 <= fs)
    }
}

/// Full-scale range per sensor kind, used for normalization to [-1, 1].
///
/// The glove's configured ranges are not fixed by the hardware description,
/// so they are configuration with typical 9-axis defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuRanges {
    /// Accelerometer full scale, g.
    pub accel_g: f64,
    /// Gyroscope full scale, degrees/second.
    pub gyro_dps: f64,
    /// Magnetometer full scale, microtesla.
    pub mag_ut: f64,
}

impl Default for ImuRanges {
    fn default() -> Self {
        ImuRanges {
            accel_g: 8.0,
            gyro_dps: 2000.0,
            mag_ut: 4900.0,
        }
    }
}

impl ImuRanges {
    /// Full scale per channel in accel, gyro, mag order.
    pub fn per_channel(&self) -> [f64; IMU_CHANNELS] {
        [
            self.accel_g,
            self.accel_g,
            self.accel_g,
            self.gyro_dps,
            self.gyro_dps,
            self.gyro_dps,
            self.mag_ut,
            self.mag_ut,
            self.mag_ut,
        ]
    }
}

/// Which tactile camera a frame came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CameraId {
    Top,
    Bottom,
}

impl CameraId {
    pub const BOTH: [CameraId; 2] = [CameraId::Top, CameraId::Bottom];

    pub fn wire_byte(self) -> u8 {
        match self {
            CameraId::Top => 0,
            CameraId::Bottom => 1,
        }
    }

    pub fn from_wire_byte(b: u8) -> Option<CameraId> {
        match b {
            0 => Some(CameraId::Top),
            1 => Some(CameraId::Bottom),
            _ => None,
        }
    }
}

/// A raw tactile camera frame: row-major 8-bit intensity grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TactileFrame {
    pub camera_id: CameraId,
    pub timestamp_us: u64,
    pub width: u16,
    pub height: u16,
    pub pixels: Vec<u8>,
}

impl TactileFrame {
    pub fn new(camera_id: CameraId, timestamp_us: u64, width: u16, height: u16) -> Self {
        TactileFrame {
            camera_id,
            timestamp_us,
            width,
            height,
            pixels: vec![0; width as usize * height as usize],
        }
    }

    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width as usize + col]
    }
}

/// A processed (cropped, grayscaled, resized, standardized) square frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedFrame {
    pub side: u16,
    pub pixels: Vec<f32>,
}

/// Geometry of the cylindrical tactile sensor and its per-camera projection.
///
/// The default cylinder is 23 cm tall with a 4 cm radius; its lateral
/// sensing area is 2*pi*r*h = 578.05 cm^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub cylinder_height_cm: f64,
    pub cylinder_radius_cm: f64,
    pub marker_rows: usize,
    pub marker_cols: usize,
    /// Center of the outer marker ring in each camera image, pixels (x, y).
    pub ring_center_top: (f64, f64),
    pub ring_center_bottom: (f64, f64),
    /// Radius of the outer marker ring in the image, pixels.
    pub outer_ring_radius_px: f64,
    /// Source camera resolution.
    pub source_width: u16,
    pub source_height: u16,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        SensorGeometry {
            cylinder_height_cm: 23.0,
            cylinder_radius_cm: 4.0,
            marker_rows: 8,
            marker_cols: 16,
            ring_center_top: (128.0, 72.0),
            ring_center_bottom: (128.0, 72.0),
            outer_ring_radius_px: 60.0,
            source_width: 256,
            source_height: 144,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("lateral area {actual:.2} cm^2 deviates more than 0.1% from {expected:.2} cm^2")]
    AreaMismatch { actual: f64, expected: f64 },
    #[error("outer ring (center {cx},{cy}, radius {r}) exceeds {w}x{h} frame bounds for {camera:?} camera")]
    RingOutOfBounds {
        camera: CameraId,
        cx: f64,
        cy: f64,
        r: f64,
        w: u16,
        h: u16,
    },
    #[error("non-positive dimension: {0}")]
    NonPositive(&'static str),
}

impl SensorGeometry {
    /// Lateral (cylindrical side) sensing area in cm^2.
    pub fn lateral_area_cm2(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.cylinder_radius_cm * self.cylinder_height_cm
    }

    pub fn ring_center(&self, camera: CameraId) -> (f64, f64) {
        match camera {
            CameraId::Top => self.ring_center_top,
            CameraId::Bottom => self.ring_center_bottom,
        }
    }

    /// Validate dimensions and the ring-inside-frame requirement for both
    /// cameras. Ring overflow is a setup error, never a per-frame one.
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.cylinder_height_cm <= 0.0 || self.cylinder_radius_cm <= 0.0 {
            return Err(GeometryError::NonPositive("cylinder dimensions"));
        }
        if self.marker_rows == 0 || self.marker_cols == 0 {
            return Err(GeometryError::NonPositive("marker grid"));
        }
        if self.outer_ring_radius_px <= 0.0 {
            return Err(GeometryError::NonPositive("outer ring radius"));
        }
        for camera in CameraId::BOTH {
            let (cx, cy) = self.ring_center(camera);
            let r = self.outer_ring_radius_px;
            let (w, h) = (self.source_width, self.source_height);
            if cx - r < 0.0 || cy - r < 0.0 || cx + r > w as f64 || cy + r > h as f64 {
                return Err(GeometryError::RingOutOfBounds {
                    camera,
                    cx,
                    cy,
                    r,
                    w,
                    h,
                });
            }
        }
        Ok(())
    }

    /// Check the default-geometry contract: lateral area consistent with
    /// 578.05 cm^2 within 0.1%.
    pub fn check_reference_area(&self) -> Result<(), GeometryError> {
        let expected = 578.05;
        let actual = self.lateral_area_cm2();
        if (actual - expected).abs() / expected > 0.001 {
            return Err(GeometryError::AreaMismatch { actual, expected });
        }
        Ok(())
    }
}
