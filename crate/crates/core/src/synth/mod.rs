//! Labeled synthetic recordings: tactile frames from a marker-displacement
//! renderer and IMU channels from per-class motion templates, both driven by
//! the action taxonomy's contact attributes. Deterministic under a fixed
//! seed, bit-exact logs included.

pub mod motion;
pub mod render;

pub use motion::{
    area_radius_cm, frequency_hz, pressure_depth, ClassMotion, ContactState,
};
pub use render::{marker_grid, render_frame, Marker};

use crate::action::ActionClass;
use crate::ingest::codec::VERSION;
use crate::ingest::recording::{Hand, Recording, RecordingMeta, CONTAINER_VERSION};
use crate::labels::LabelStream;
use crate::sample::{
    CameraId, ImuSample, SensorGeometry, TactileFrame, FRAME_PERIOD_US, IMU_MODULES,
    IMU_PERIOD_US,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Contact profile sample rate.
pub const PROFILE_RATE_HZ: f64 = 120.0;

/// A sampled contact trajectory for one action instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactProfile {
    pub class: ActionClass,
    pub duration_s: f64,
    /// States at `PROFILE_RATE_HZ`; empty for idle.
    pub series: Vec<ContactState>,
}

impl ContactProfile {
    /// State at `t_s`, nearest sample; no-contact outside the series.
    pub fn at(&self, t_s: f64) -> ContactState {
        if self.series.is_empty() {
            return ContactState::NONE;
        }
        let idx = (t_s * PROFILE_RATE_HZ).round().max(0.0) as usize;
        self.series[idx.min(self.series.len() - 1)]
    }
}

/// Build the contact profile for one action instance.
pub fn make_contact_profile(
    class: ActionClass,
    duration_s: f64,
    rng: &mut ChaCha8Rng,
) -> ContactProfile {
    let motion = ClassMotion::new(class, SensorGeometry::default().cylinder_height_cm, rng);
    profile_from_motion(&motion, duration_s)
}

pub fn profile_from_motion(motion: &ClassMotion, duration_s: f64) -> ContactProfile {
    let series = if motion.class.is_idle() {
        Vec::new()
    } else {
        let n = (duration_s * PROFILE_RATE_HZ).ceil() as usize;
        (0..n)
            .map(|i| motion.contact_at(i as f64 / PROFILE_RATE_HZ))
            .collect()
    };
    ContactProfile {
        class: motion.class,
        duration_s,
        series,
    }
}

/// Per-module 9-channel series at 40 Hz for one action instance.
pub fn make_imu_profile(
    class: ActionClass,
    duration_s: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<[[f32; 9]; IMU_MODULES]> {
    let motion = ClassMotion::new(class, SensorGeometry::default().cylinder_height_cm, rng);
    let ticks = (duration_s * crate::sample::IMU_RATE_HZ).ceil() as u64;
    (0..ticks).map(|tick| motion.imu_at_tick(tick, 0.0)).collect()
}

/// An ordered action/duration script with its generator seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthScript {
    pub entries: Vec<(ActionClass, f64)>,
    pub seed: u64,
    /// Uniform timestamp jitter amplitude; 0 disables jitter.
    #[serde(default)]
    pub timestamp_jitter_us: u64,
    #[serde(default = "default_hand")]
    pub hand: Hand,
    #[serde(default)]
    pub subject_id: String,
}

fn default_hand() -> Hand {
    Hand::Right
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("script entry {index} has non-positive duration {duration_s}")]
    BadDuration { index: usize, duration_s: f64 },
    #[error("script is empty")]
    Empty,
    #[error("geometry: {0}")]
    Geometry(#[from] crate::sample::GeometryError),
}

impl SynthScript {
    pub fn new(entries: Vec<(ActionClass, f64)>, seed: u64) -> SynthScript {
        SynthScript {
            entries,
            seed,
            timestamp_jitter_us: 0,
            hand: Hand::Right,
            subject_id: String::new(),
        }
    }

    /// A continuous protocol sequence: every action once, in the given
    /// order, with idle gaps before, between and after.
    pub fn continuous(
        order: &[ActionClass],
        action_s: f64,
        gap_s: f64,
        seed: u64,
    ) -> SynthScript {
        let mut entries = Vec::with_capacity(order.len() * 2 + 1);
        entries.push((ActionClass::Idle, gap_s));
        for &class in order {
            entries.push((class, action_s));
            entries.push((ActionClass::Idle, gap_s));
        }
        SynthScript::new(entries, seed)
    }

    /// Repeated instances of one class back to back (segmented-dataset style).
    pub fn repeated(class: ActionClass, instances: usize, instance_s: f64, seed: u64) -> SynthScript {
        SynthScript::new(vec![(class, instance_s); instances], seed)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.entries.is_empty() {
            return Err(SynthError::Empty);
        }
        for (index, &(_, d)) in self.entries.iter().enumerate() {
            if d <= 0.0 || !d.is_finite() {
                return Err(SynthError::BadDuration { index, duration_s: d });
            }
        }
        Ok(())
    }

    pub fn total_duration_s(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }
}

struct TimelineEntry {
    start_us: u64,
    end_us: u64,
    motion: ClassMotion,
}

/// Generate a full labeled recording from a script: frame and IMU logs on
/// ideal 30 Hz / 40 Hz grids (plus optional jitter), ground-truth labels
/// marking each entry's exact interval.
pub fn gen_recording(
    script: &SynthScript,
    geometry: &SensorGeometry,
) -> Result<Recording, SynthError> {
    script.validate()?;
    geometry.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let mut timeline = Vec::with_capacity(script.entries.len());
    let mut label_entries = Vec::with_capacity(script.entries.len());
    let mut cursor_us = 0u64;
    let left = script.hand == Hand::Left;
    for &(class, duration_s) in &script.entries {
        let mut motion = ClassMotion::new(class, geometry.cylinder_height_cm, &mut rng);
        motion.mirror = left;
        let end_us = cursor_us + (duration_s * 1e6).round() as u64;
        label_entries.push((cursor_us, class));
        timeline.push(TimelineEntry {
            start_us: cursor_us,
            end_us,
            motion,
        });
        cursor_us = end_us;
    }
    let end_us = cursor_us;
    let labels = LabelStream {
        entries: label_entries,
        end_us,
    };

    let entry_at = |t_us: u64| -> &TimelineEntry {
        match timeline.binary_search_by(|e| {
            if t_us < e.start_us {
                std::cmp::Ordering::Greater
            } else if t_us >= e.end_us {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Equal
            }
        }) {
            Ok(i) => &timeline[i],
            Err(_) => timeline.last().unwrap(),
        }
    };

    // Left hands see the glove modules in mirrored roles.
    let module_map: [usize; IMU_MODULES] = if left {
        [4, 5, 2, 3, 0, 1, 6, 7]
    } else {
        [0, 1, 2, 3, 4, 5, 6, 7]
    };

    let mut jitter_rng = ChaCha8Rng::seed_from_u64(script.seed.wrapping_add(0xA5));
    let mut jitter = |grid_us: u64| -> u64 {
        if script.timestamp_jitter_us == 0 {
            grid_us
        } else {
            let j = jitter_rng
                .random_range(-(script.timestamp_jitter_us as i64)..=script.timestamp_jitter_us as i64);
            grid_us.saturating_add_signed(j)
        }
    };

    let markers = marker_grid(geometry);
    let n_frames = (end_us / FRAME_PERIOD_US) as usize;
    let mut top = Vec::with_capacity(n_frames);
    let mut bottom = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let grid_us = k as u64 * FRAME_PERIOD_US;
        let ts = jitter(grid_us);
        let entry = entry_at(grid_us);
        let contact = entry
            .motion
            .contact_at((grid_us - entry.start_us) as f64 / 1e6);
        top.push(render_frame(CameraId::Top, ts, &contact, &markers, geometry));
        bottom.push(render_frame(CameraId::Bottom, ts, &contact, &markers, geometry));
    }

    let n_ticks = end_us / IMU_PERIOD_US;
    let mut imu = Vec::with_capacity(n_ticks as usize * IMU_MODULES);
    for tick in 0..n_ticks {
        let grid_us = tick * IMU_PERIOD_US;
        let ts = jitter(grid_us);
        let entry = entry_at(grid_us);
        let block = entry
            .motion
            .imu_at_tick(tick, entry.start_us as f64 / 1e6);
        for m in 0..IMU_MODULES {
            imu.push(ImuSample::from_channels(
                m as u8,
                ts,
                block[module_map[m]],
            ));
        }
    }

    Ok(Recording {
        meta: RecordingMeta {
            container_version: CONTAINER_VERSION,
            protocol_version: VERSION,
            subject_id: if script.subject_id.is_empty() {
                format!("synth-{}", script.seed)
            } else {
                script.subject_id.clone()
            },
            hand: script.hand,
            geometry: *geometry,
            start_us: 0,
            end_us,
            labels: Some(labels),
        },
        imu,
        top,
        bottom,
    })
}

/// Frames for a standalone contact profile (both cameras at 30 fps).
pub fn render_frames(
    profile: &ContactProfile,
    geometry: &SensorGeometry,
) -> Result<(Vec<TactileFrame>, Vec<TactileFrame>), SynthError> {
    geometry.validate()?;
    let markers = marker_grid(geometry);
    let n = (profile.duration_s * 1e6 / FRAME_PERIOD_US as f64).floor() as usize;
    let mut top = Vec::with_capacity(n);
    let mut bottom = Vec::with_capacity(n);
    for k in 0..n {
        let ts = k as u64 * FRAME_PERIOD_US;
        let contact = profile.at(ts as f64 / 1e6);
        top.push(render_frame(CameraId::Top, ts, &contact, &markers, geometry));
        bottom.push(render_frame(CameraId::Bottom, ts, &contact, &markers, geometry));
    }
    Ok((top, bottom))
}
