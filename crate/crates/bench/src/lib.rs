//! Shared fixtures for the criterion benchmarks.

use har_core::model::layout::Params;
use har_core::model::network::ModelInput;
use har_core::model::{FusionConfig, IMU_STEP_DIM};
use har_core::sample::SensorGeometry;
use har_core::synth::{gen_recording, SynthScript};
use har_core::ActionClass;

/// A short labeled recording used by the sync and codec benches.
pub fn bench_recording(seconds: f64) -> har_core::ingest::Recording {
    let script = SynthScript::continuous(&[ActionClass::Rubbing], seconds.max(1.0) - 0.5, 0.25, 42);
    gen_recording(&script, &SensorGeometry::default()).expect("bench recording")
}

/// Toy-config parameters and a random window input for forward benches.
pub fn bench_model() -> (Params, ModelInput) {
    let config = FusionConfig::default();
    let params = Params::init(&config).expect("params");
    let vol = config.window_len * config.side * config.side;
    let wave = |i: usize| (i as f64 * 0.37).sin() * 0.5;
    let input = ModelInput {
        video_top: (0..vol).map(wave).collect(),
        video_bottom: (0..vol).map(|i| wave(i + 7)).collect(),
        imu: (0..config.window_len * IMU_STEP_DIM).map(wave).collect(),
    };
    (params, input)
}
