//! Per-class motion templates: a contact trajectory on the cylinder surface
//! and the matching 8-module IMU signal, parameterized by each class's
//! contact-area / pressure / frequency attributes.

use crate::action::{action_attributes, ActionClass, ContactArea, Level};
use crate::sample::{IMU_CHANNELS, IMU_MODULES, IMU_RATE_HZ};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Contact state at one instant: center in cylindrical surface coordinates,
/// contact radius, normalized indentation depth (0 = no contact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactState {
    pub theta: f64,
    pub z_cm: f64,
    pub radius_cm: f64,
    pub depth: f64,
}

impl ContactState {
    pub const NONE: ContactState = ContactState {
        theta: 0.0,
        z_cm: 0.0,
        radius_cm: 0.0,
        depth: 0.0,
    };
}

/// Map a contact-area level to a nominal contact radius in cm.
pub fn area_radius_cm(area: ContactArea) -> f64 {
    match area {
        ContactArea::Small => 0.5,
        ContactArea::Medium => 1.5,
        ContactArea::Large => 3.0,
    }
}

/// Map a pressure level to a normalized indentation depth.
pub fn pressure_depth(level: Level) -> f64 {
    match level {
        Level::Low => 0.2,
        Level::Medium => 0.5,
        Level::High => 0.9,
    }
}

/// Map a frequency level to an oscillation rate in Hz.
pub fn frequency_hz(level: Level) -> f64 {
    match level {
        Level::Low => 0.5,
        Level::Medium => 2.0,
        Level::High => 5.0,
    }
}

/// How a class modulates its contact over time.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Modulation {
    /// Depth pulses smoothly (press/release cycles).
    DepthPulse,
    /// Depth pulses with full release between contacts.
    IntermittentPulse,
    /// Center sweeps back and forth around the cylinder.
    SweepTheta,
    /// Center sweeps up and down the cylinder axis.
    SweepZ,
    /// Center traces a small circle (theta and z in quadrature).
    CirclePath,
    /// Small fast center jitter at constant depth.
    Tremor { amplitude_rad: f64 },
    /// Constant contact; optional slow depth cycling.
    Hold { depth_swing: f64 },
}

fn class_modulation(class: ActionClass) -> Modulation {
    use ActionClass::*;
    match class {
        Pinching | Tapping | Poking => Modulation::DepthPulse,
        Patting => Modulation::IntermittentPulse,
        Rubbing => Modulation::SweepTheta,
        Scratching | Stroking => Modulation::SweepZ,
        Massaging => Modulation::CirclePath,
        Trembling => Modulation::Tremor { amplitude_rad: 0.08 },
        Shaking => Modulation::Tremor { amplitude_rad: 0.45 },
        Lingering | Pushing => Modulation::Hold { depth_swing: 0.0 },
        Pulling => Modulation::Hold { depth_swing: 0.25 },
        Squeezing => Modulation::Hold { depth_swing: 0.3 },
        Idle => Modulation::Hold { depth_swing: 0.0 },
    }
}

/// Per-module oscillation weight by contact area: small contacts are
/// thumb/index work, large contacts involve the whole hand.
/// Modules: 0-1 thumb, 2-3 index, 4-5 middle, 6 hand back, 7 wrist.
fn module_weights(area: ContactArea) -> [f64; IMU_MODULES] {
    match area {
        ContactArea::Small => [1.0, 0.9, 0.2, 0.15, 0.1, 0.1, 0.05, 0.1],
        ContactArea::Medium => [1.0, 0.9, 1.0, 0.9, 0.7, 0.6, 0.15, 0.3],
        ContactArea::Large => [1.0, 0.95, 1.0, 0.95, 1.0, 0.9, 0.7, 0.85],
    }
}

fn pressure_accel_amp(level: Level) -> f64 {
    match level {
        Level::Low => 0.12,
        Level::Medium => 0.35,
        Level::High => 0.7,
    }
}

fn pressure_gyro_amp(level: Level) -> f64 {
    match level {
        Level::Low => 25.0,
        Level::Medium => 80.0,
        Level::High => 190.0,
    }
}

/// Deterministic white noise in [-1, 1] keyed by (seed, stream ids).
pub fn hash_noise(seed: u64, a: u64, b: u64, c: u64) -> f64 {
    let mut x = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(a.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(b.wrapping_mul(0x94D0_49BB_1331_11EB))
        .wrapping_add(c.wrapping_add(0x2545_F491_4F6C_DD1D));
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    (x as f64 / u64::MAX as f64) * 2.0 - 1.0
}

/// One instantiated action: randomized home position, jittered attribute
/// parameters, and a noise seed. Pure function of time after construction.
#[derive(Debug, Clone)]
pub struct ClassMotion {
    pub class: ActionClass,
    modulation: Modulation,
    theta0: f64,
    z0_cm: f64,
    radius_cm: f64,
    depth: f64,
    freq_hz: f64,
    phase: f64,
    /// Per-module gravity direction (unit-ish), fixed per instance.
    gravity: [[f64; 3]; IMU_MODULES],
    weights: [f64; IMU_MODULES],
    accel_amp: f64,
    gyro_amp: f64,
    /// Pushing-style constant accel offset (sustained force).
    accel_bias: f64,
    noise_seed: u64,
    cylinder_h_cm: f64,
    /// Mirrors the theta trajectory for the opposite hand.
    pub mirror: bool,
}

impl ClassMotion {
    pub fn new(class: ActionClass, cylinder_h_cm: f64, rng: &mut ChaCha8Rng) -> ClassMotion {
        let attrs = action_attributes(class);
        let (radius, depth, freq, weights, accel_amp, gyro_amp) = match attrs {
            Some(a) => (
                area_radius_cm(a.contact_area) * (1.0 + rng.random_range(-0.2..0.2)),
                pressure_depth(a.pressure_intensity),
                frequency_hz(a.frequency) * (1.0 + rng.random_range(-0.08..0.08)),
                module_weights(a.contact_area),
                pressure_accel_amp(a.pressure_intensity),
                pressure_gyro_amp(a.pressure_intensity),
            ),
            None => (0.0, 0.0, 0.0, [0.0; IMU_MODULES], 0.0, 0.0),
        };

        // IMU flavor separating the large/high/slow hold classes.
        let (accel_amp, gyro_amp, accel_bias) = match class {
            ActionClass::Pushing => (0.06, 10.0, 0.35),
            ActionClass::Pulling => (accel_amp, 35.0, 0.12),
            ActionClass::Squeezing => (0.25, gyro_amp, 0.0),
            _ => (accel_amp, gyro_amp, 0.0),
        };
        let weights = match class {
            // Squeezing is finger work regardless of its large contact area.
            ActionClass::Squeezing => [1.0, 0.95, 1.0, 0.9, 0.95, 0.9, 0.1, 0.15],
            _ => weights,
        };

        let mut gravity = [[0.0; 3]; IMU_MODULES];
        for (m, g) in gravity.iter_mut().enumerate() {
            // Each module's rest orientation: mostly +z with a stable tilt.
            let tx = 0.1 * (m as f64 - 3.5) / 3.5 + rng.random_range(-0.08..0.08);
            let ty = rng.random_range(-0.12..0.12);
            let norm = (tx * tx + ty * ty + 1.0).sqrt();
            *g = [tx / norm, ty / norm, 1.0 / norm];
        }

        ClassMotion {
            class,
            modulation: class_modulation(class),
            theta0: rng.random_range(0.0..std::f64::consts::TAU),
            z0_cm: cylinder_h_cm * rng.random_range(0.3..0.7),
            radius_cm: radius,
            depth,
            freq_hz: freq,
            phase: rng.random_range(0.0..std::f64::consts::TAU),
            gravity,
            weights,
            accel_amp,
            gyro_amp,
            accel_bias,
            noise_seed: rng.random_range(0..u64::MAX),
            cylinder_h_cm,
            mirror: false,
        }
    }

    /// Contact state `t_s` seconds into the action.
    pub fn contact_at(&self, t_s: f64) -> ContactState {
        if self.class.is_idle() {
            return ContactState::NONE;
        }
        let w = std::f64::consts::TAU * self.freq_hz * t_s + self.phase;
        let (mut theta, mut z, mut depth) = (self.theta0, self.z0_cm, self.depth);
        match self.modulation {
            Modulation::DepthPulse => {
                depth *= 0.5 * (1.0 + w.sin());
            }
            Modulation::IntermittentPulse => {
                let s = w.sin();
                depth *= if s > 0.0 { s } else { 0.0 };
            }
            Modulation::SweepTheta => {
                theta += 0.5 * w.sin();
            }
            Modulation::SweepZ => {
                z += 2.5 * w.sin();
            }
            Modulation::CirclePath => {
                theta += 0.35 * w.sin();
                z += 1.8 * w.cos();
            }
            Modulation::Tremor { amplitude_rad } => {
                theta += amplitude_rad * (w.sin() + 0.5 * (2.0 * w + 1.3).sin());
                z += amplitude_rad * 2.0 * (w + 0.7).cos();
            }
            Modulation::Hold { depth_swing } => {
                depth *= 1.0 - depth_swing + depth_swing * 0.5 * (1.0 + w.sin());
            }
        }
        if self.mirror {
            theta = -theta;
        }
        ContactState {
            theta,
            z_cm: z.clamp(0.5, self.cylinder_h_cm - 0.5),
            radius_cm: self.radius_cm,
            depth: depth.clamp(0.0, 1.0),
        }
    }

    /// Nine channels for every module at IMU tick `tick` (40 Hz grid),
    /// `t0_s` seconds after the action started at global tick origin.
    pub fn imu_at_tick(&self, tick: u64, t0_s: f64) -> [[f32; IMU_CHANNELS]; IMU_MODULES] {
        let t = tick as f64 / IMU_RATE_HZ - t0_s;
        let w = std::f64::consts::TAU * self.freq_hz * t + self.phase;
        let mut out = [[0f32; IMU_CHANNELS]; IMU_MODULES];
        for (m, channels) in out.iter_mut().enumerate() {
            let noise = |c: u64| hash_noise(self.noise_seed, m as u64, c, tick);
            let weight = self.weights[m];
            let phase_m = 0.6 * m as f64;
            // Band-limited oscillation: fundamental plus a soft harmonic.
            let osc = (w + phase_m).sin() + 0.3 * (2.0 * w + phase_m * 1.7).sin();
            let osc_q = (w + phase_m).cos() + 0.3 * (2.0 * w).cos();

            let a = self.accel_amp * weight;
            let accel = [
                self.gravity[m][0] + a * osc + self.accel_bias * weight + 0.02 * noise(0),
                self.gravity[m][1] + a * 0.6 * osc_q + 0.02 * noise(1),
                self.gravity[m][2] + a * 0.4 * osc + 0.02 * noise(2),
            ];
            let g = self.gyro_amp * weight;
            let gyro = [
                g * osc_q + 1.0 * noise(3),
                g * 0.7 * osc + 1.0 * noise(4),
                g * 0.3 * osc_q + 1.0 * noise(5),
            ];
            // Slowly varying ambient field plus noise.
            let slow = (0.05 * tick as f64 / IMU_RATE_HZ).sin();
            let mag = [
                20.0 + 2.0 * slow + 0.5 * noise(6),
                -4.0 * self.gravity[m][0] * 10.0 * 0.1 + 0.5 * noise(7),
                -45.0 + 2.0 * (0.03 * tick as f64 / IMU_RATE_HZ).cos() + 0.5 * noise(8),
            ];
            for (c, v) in accel.iter().chain(&gyro).chain(&mag).enumerate() {
                channels[c] = *v as f32;
            }
        }
        out
    }

    /// Deterministic sub-rng for per-instance construction.
    pub fn instance_rng(seed: u64, instance: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed ^ instance.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}
