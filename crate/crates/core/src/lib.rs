//! Multi-modal hand-activity recognition over a simulated tactile cylinder
//! and IMU glove.
//!
//! The crate covers the full loop: synthetic sensor generation, a binary
//! stream protocol with record/replay, camera-rate synchronization and
//! windowing, a three-branch late-fusion transformer classifier trained with
//! analytic gradients, frame- and event-based scoring, and a closed-loop
//! trajectory-switching simulation.

pub mod action;
pub mod dataset;
pub mod eval;
pub mod hrc;
pub mod ingest;
pub mod labels;
pub mod model;
pub mod pipeline;
pub mod sample;
pub mod synth;

pub use action::{action_attributes, ActionClass, ContactArea, ContactAttributes, Level};
pub use eval::{frame_accuracy, score_segments, summarize, EventReport, SegmentScore};
pub use labels::{extract_events, rasterize_events, Event, LabelStream, LabelStreamError};
pub use model::{predict_window, FusionConfig, Params, Prediction};
pub use pipeline::{PipelineConfig, SyncedSample, Window};
pub use sample::{
    CameraId, ImuRanges, ImuSample, ProcessedFrame, SensorGeometry, TactileFrame, FRAME_PERIOD_US,
    FRAME_RATE_HZ, IMU_CHANNELS, IMU_MODULES, IMU_PERIOD_US, IMU_RATE_HZ,
};
pub use synth::{gen_recording, SynthScript};
