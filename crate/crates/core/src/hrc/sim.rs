//! Closed-loop trial simulation: a scripted actor performs commanded actions
//! on the sensor while the robot traces trajectories; the recognizer's
//! per-frame labels drive trajectory transitions through a debounce filter,
//! and per-action recognition latency is logged.

use crate::action::ActionClass;
use crate::hrc::path::{RobotState, TrajectoryPath, TrajectoryShape};
use crate::model::layout::Params;
use crate::model::network::predict_window;
use crate::model::ModelError;
use crate::pipeline::sync::{Preprocessor, SyncedSample};
use crate::pipeline::window::{WindowBuffer, WindowError};
use crate::sample::{CameraId, SensorGeometry, FRAME_PERIOD_US, IMU_MODULES, IMU_PERIOD_US};
use crate::synth::motion::ClassMotion;
use crate::synth::render::{marker_grid, render_frame, Marker};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum HrcError {
    #[error("action {action} commanded at {command_us} us was not recognized within {timeout_s} s")]
    Timeout {
        action: ActionClass,
        command_us: u64,
        timeout_s: f64,
    },
    #[error("schedule invalid: {0}")]
    BadSchedule(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Preprocess(#[from] crate::pipeline::preprocess::PreprocessError),
}

/// One commanded action in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledAction {
    pub class: ActionClass,
    pub command_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrcConfig {
    /// Trajectory order; the trial starts on the first shape and advances one
    /// shape per transition (wrapping).
    pub shape_order: Vec<TrajectoryShape>,
    pub scale_m: f64,
    pub speed_mps: f64,
    /// Consecutive identical frame predictions required to transition.
    pub debounce_k: usize,
    /// Actor reaction delay between command and action onset, drawn
    /// uniformly from this range per action (equal bounds pin it).
    pub reaction_delay_s: (f64, f64),
    pub timeout_s: f64,
    pub seed: u64,
}

impl Default for HrcConfig {
    fn default() -> Self {
        HrcConfig {
            shape_order: TrajectoryShape::ALL.to_vec(),
            scale_m: 1.0,
            speed_mps: 0.2,
            debounce_k: 5,
            reaction_delay_s: (0.5, 1.5),
            timeout_s: 60.0,
            seed: 0,
        }
    }
}

/// One completed transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub commanded: ActionClass,
    pub command_us: u64,
    pub recognition_us: u64,
    pub shape_before: TrajectoryShape,
    pub shape_after: TrajectoryShape,
}

impl Transition {
    pub fn latency_s(&self) -> f64 {
        (self.recognition_us - self.command_us) as f64 / 1e6
    }
}

/// Closed-loop trial record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub transitions: Vec<Transition>,
    pub debounce_k: usize,
    pub reaction_delay_s: (f64, f64),
}

impl TrialLog {
    pub fn latencies_s(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.latency_s()).collect()
    }
}

/// Per-frame view given to a recognizer.
pub struct FrameObservation<'a> {
    pub timestamp_us: u64,
    /// The actor's true current action.
    pub gt: ActionClass,
    /// Sensor sample; present only when the simulation generates sensors.
    pub synced: Option<&'a SyncedSample>,
}

/// One label per camera frame.
pub trait FrameRecognizer {
    fn classify_frame(&mut self, obs: &FrameObservation<'_>) -> Result<ActionClass, HrcError>;
    /// Whether the simulation must synthesize sensor data for this recognizer.
    fn needs_sensors(&self) -> bool {
        false
    }
}

/// Ground-truth recognizer with the moving window's structural delay: it
/// reports a class only once the whole window would contain it.
pub struct OracleRecognizer {
    window_len: usize,
    current: ActionClass,
    run_len: usize,
}

impl OracleRecognizer {
    pub fn new(window_len: usize) -> OracleRecognizer {
        OracleRecognizer {
            window_len,
            current: ActionClass::Idle,
            run_len: 0,
        }
    }
}

impl FrameRecognizer for OracleRecognizer {
    fn classify_frame(&mut self, obs: &FrameObservation<'_>) -> Result<ActionClass, HrcError> {
        if obs.gt == self.current {
            self.run_len += 1;
        } else {
            self.current = obs.gt;
            self.run_len = 1;
        }
        Ok(if self.run_len >= self.window_len {
            self.current
        } else {
            ActionClass::Idle
        })
    }
}

/// Trained-model recognizer over the live window pipeline.
pub struct ModelRecognizer {
    params: Params,
    window: WindowBuffer,
}

impl ModelRecognizer {
    pub fn new(params: Params) -> ModelRecognizer {
        let window_len = params.config.window_len;
        ModelRecognizer {
            params,
            window: WindowBuffer::new(window_len),
        }
    }
}

impl FrameRecognizer for ModelRecognizer {
    fn classify_frame(&mut self, obs: &FrameObservation<'_>) -> Result<ActionClass, HrcError> {
        let synced = obs
            .synced
            .ok_or_else(|| HrcError::BadSchedule("model recognizer needs sensor data".into()))?;
        match self.window.push(synced.clone())? {
            Some(window) => Ok(predict_window(&self.params, &window)?.label),
            None => Ok(ActionClass::Idle),
        }
    }

    fn needs_sensors(&self) -> bool {
        true
    }
}

#[allow(clippy::large_enum_variant)]
enum ActorState {
    Idle,
    Waiting { start_us: u64, class: ActionClass },
    Performing { motion: ClassMotion, started_us: u64 },
}

/// Synthesizes the actor's sensor streams frame by frame (live semantics:
/// each frame pairs with the latest IMU tick at-or-before it).
struct SensorSim {
    geometry: SensorGeometry,
    markers: Vec<Marker>,
    preproc: Preprocessor,
    idle_motion: ClassMotion,
    next_tick: u64,
    latest_block: [[f32; 9]; IMU_MODULES],
}

impl SensorSim {
    fn new(geometry: SensorGeometry, preproc: Preprocessor, rng: &mut ChaCha8Rng) -> SensorSim {
        SensorSim {
            geometry,
            markers: marker_grid(&geometry),
            preproc,
            idle_motion: ClassMotion::new(ActionClass::Idle, geometry.cylinder_height_cm, rng),
            next_tick: 0,
            latest_block: [[0.0; 9]; IMU_MODULES],
        }
    }

    fn sample(&mut self, t_us: u64, actor: &ActorState) -> Result<SyncedSample, HrcError> {
        let (motion, started_us) = match actor {
            ActorState::Performing { motion, started_us } => (motion, *started_us),
            _ => (&self.idle_motion, 0),
        };
        // Advance the 40 Hz IMU clock up to the frame time.
        while self.next_tick * IMU_PERIOD_US <= t_us {
            let raw = motion.imu_at_tick(self.next_tick, started_us as f64 / 1e6);
            for (m, ch) in raw.iter().enumerate() {
                let sample = crate::sample::ImuSample::from_channels(m as u8, 0, *ch);
                let (norm, _) =
                    crate::pipeline::preprocess::normalize_imu(&sample, &self.preproc.ranges);
                self.latest_block[m] = norm;
            }
            self.next_tick += 1;
        }
        let contact = motion.contact_at((t_us.saturating_sub(started_us)) as f64 / 1e6);
        let top = render_frame(CameraId::Top, t_us, &contact, &self.markers, &self.geometry);
        let bottom = render_frame(CameraId::Bottom, t_us, &contact, &self.markers, &self.geometry);
        Ok(SyncedSample {
            timestamp_us: t_us,
            frame_top: self.preproc.frame(&top)?,
            frame_bottom: self.preproc.frame(&bottom)?,
            imu_block: self.latest_block,
            stale: [false; IMU_MODULES],
        })
    }
}

/// Run one closed-loop trial: commands are issued per the schedule (never
/// before the previous transition completes), the actor starts performing
/// after the reaction delay, and a transition fires once the commanded class
/// has been predicted for `debounce_k` consecutive frames.
pub fn closed_loop(
    recognizer: &mut dyn FrameRecognizer,
    schedule: &[ScheduledAction],
    config: &HrcConfig,
    preproc: Option<Preprocessor>,
) -> Result<TrialLog, HrcError> {
    if schedule.is_empty() {
        return Err(HrcError::BadSchedule("empty action schedule".into()));
    }
    if config.shape_order.is_empty() {
        return Err(HrcError::BadSchedule("empty shape order".into()));
    }
    for pair in schedule.windows(2) {
        if pair[1].command_time_s < pair[0].command_time_s {
            return Err(HrcError::BadSchedule(
                "command times must be nondecreasing".into(),
            ));
        }
    }

    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let geometry = SensorGeometry::default();
    let mut sensors = if recognizer.needs_sensors() {
        let preproc = preproc.ok_or_else(|| {
            HrcError::BadSchedule("model recognizer needs a preprocessor".into())
        })?;
        Some(SensorSim::new(geometry, preproc, &mut rng))
    } else {
        None
    };

    let mut robot = RobotState::new(
        TrajectoryPath::new(config.shape_order[0], config.scale_m),
        config.speed_mps,
    );
    let mut shape_idx = 0usize;
    let mut actor = ActorState::Idle;
    let mut transitions: Vec<Transition> = Vec::with_capacity(schedule.len());
    let mut pending = 0usize;
    let mut active: Option<(ActionClass, u64)> = None;
    let mut streak = 0usize;

    let mut frame: u64 = 0;
    loop {
        let t_us = frame * FRAME_PERIOD_US;
        robot.step(FRAME_PERIOD_US as f64 / 1e6);

        // Issue the next command once its time arrives and the loop is free.
        if active.is_none() && pending < schedule.len() {
            let scheduled_us = (schedule[pending].command_time_s * 1e6).round() as u64;
            let earliest = transitions
                .last()
                .map(|t| t.recognition_us + FRAME_PERIOD_US)
                .unwrap_or(0);
            if t_us >= scheduled_us.max(earliest) {
                let class = schedule[pending].class;
                let (lo, hi) = config.reaction_delay_s;
                let delay_s = if hi > lo {
                    use rand::RngExt;
                    rng.random_range(lo..hi)
                } else {
                    lo
                };
                active = Some((class, t_us));
                streak = 0;
                actor = ActorState::Waiting {
                    start_us: t_us + (delay_s * 1e6).round() as u64,
                    class,
                };
                pending += 1;
            }
        }

        // Actor state machine.
        if let ActorState::Waiting { start_us, class } = actor {
            if t_us >= start_us {
                let motion = ClassMotion::new(class, geometry.cylinder_height_cm, &mut rng);
                actor = ActorState::Performing {
                    motion,
                    started_us: t_us,
                };
            }
        }
        let gt = match &actor {
            ActorState::Performing { motion, .. } => motion.class,
            _ => ActionClass::Idle,
        };

        let synced = match sensors.as_mut() {
            Some(sim) => Some(sim.sample(t_us, &actor)?),
            None => None,
        };
        let label = recognizer.classify_frame(&FrameObservation {
            timestamp_us: t_us,
            gt,
            synced: synced.as_ref(),
        })?;

        if let Some((commanded, command_us)) = active {
            if label == commanded {
                streak += 1;
            } else {
                streak = 0;
            }
            if streak >= config.debounce_k {
                let shape_before = config.shape_order[shape_idx % config.shape_order.len()];
                shape_idx += 1;
                let shape_after = config.shape_order[shape_idx % config.shape_order.len()];
                robot.switch_path(TrajectoryPath::new(shape_after, config.scale_m));
                transitions.push(Transition {
                    commanded,
                    command_us,
                    recognition_us: t_us,
                    shape_before,
                    shape_after,
                });
                active = None;
                actor = ActorState::Idle;
                streak = 0;
                if transitions.len() == schedule.len() {
                    return Ok(TrialLog {
                        transitions,
                        debounce_k: config.debounce_k,
                        reaction_delay_s: config.reaction_delay_s,
                    });
                }
            }
            if (t_us - command_us) as f64 / 1e6 > config.timeout_s {
                return Err(HrcError::Timeout {
                    action: commanded,
                    command_us,
                    timeout_s: config.timeout_s,
                });
            }
        }
        frame += 1;
    }
}

/// Latency statistics over a set of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_s: f64,
    pub median_s: f64,
    pub std_s: f64,
    pub per_class: Vec<ClassLatency>,
}

/// Boxplot data for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLatency {
    pub class: ActionClass,
    pub count: usize,
    pub min_s: f64,
    pub q1_s: f64,
    pub median_s: f64,
    pub q3_s: f64,
    pub max_s: f64,
    pub mean_s: f64,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let f = rank - lo as f64;
    sorted[lo] * (1.0 - f) + sorted[hi] * f
}

/// Mean, median, standard deviation and per-class boxplot data over all
/// latencies in the logs.
pub fn latency_stats(logs: &[TrialLog]) -> Option<LatencyStats> {
    let mut all: Vec<f64> = Vec::new();
    let mut per_class: std::collections::BTreeMap<ActionClass, Vec<f64>> =
        std::collections::BTreeMap::new();
    for log in logs {
        for t in &log.transitions {
            all.push(t.latency_s());
            per_class.entry(t.commanded).or_default().push(t.latency_s());
        }
    }
    if all.is_empty() {
        return None;
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let median = percentile(&all, 0.5);

    let per_class = per_class
        .into_iter()
        .map(|(class, mut v)| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ClassLatency {
                class,
                count: v.len(),
                min_s: v[0],
                q1_s: percentile(&v, 0.25),
                median_s: percentile(&v, 0.5),
                q3_s: percentile(&v, 0.75),
                max_s: *v.last().unwrap(),
                mean_s: v.iter().sum::<f64>() / v.len() as f64,
            }
        })
        .collect();

    Some(LatencyStats {
        count: all.len(),
        mean_s: mean,
        median_s: median,
        std_s: var.sqrt(),
        per_class,
    })
}
