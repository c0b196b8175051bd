//! Closed-loop dynamic validation: a 2D trajectory state machine switches
//! paths when the recognizer reports the commanded action; recognition
//! latency is measured per action.

pub mod path;
pub mod sim;

pub use path::{trajectory_waypoints, RobotState, TrajectoryPath, TrajectoryShape};
pub use sim::{
    closed_loop, latency_stats, ClassLatency, FrameObservation, FrameRecognizer, HrcConfig,
    HrcError, LatencyStats, ModelRecognizer, OracleRecognizer, ScheduledAction, TrialLog,
    Transition,
};
