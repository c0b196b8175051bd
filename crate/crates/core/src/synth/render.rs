//! Marker-displacement renderer: the cylindrical marker grid projected into
//! each camera as bright Gaussian dots on a dark background, displaced
//! radially by nearby contact with Gaussian falloff.
//!
//! Orthographic-per-half-cylinder projection: each camera sees its half of
//! the marker rows as concentric rings, its own end row on the outer ring.
//! The classifier consumes pixel patterns, so no lens model is attempted.

use crate::sample::{CameraId, SensorGeometry, TactileFrame};
use crate::synth::motion::ContactState;

/// Image-space displacement of the nearest marker at full depth, pixels.
const DISPLACEMENT_GAIN_PX: f64 = 18.0;
/// Marker splat standard deviation, pixels.
const SPLAT_SIGMA_PX: f64 = 1.4;
/// Peak splat intensity.
const SPLAT_INTENSITY: f64 = 235.0;
/// Inner ring radius as a fraction of the outer ring.
const INNER_RING_FRAC: f64 = 0.3;

/// One marker's rest position on the cylinder surface.
#[derive(Debug, Clone, Copy)]
pub struct Marker {
    pub theta: f64,
    pub z_cm: f64,
}

/// Markers on a rows x cols grid over the full cylinder.
pub fn marker_grid(geometry: &SensorGeometry) -> Vec<Marker> {
    let mut out = Vec::with_capacity(geometry.marker_rows * geometry.marker_cols);
    for r in 0..geometry.marker_rows {
        let z = geometry.cylinder_height_cm * (r as f64 + 0.5) / geometry.marker_rows as f64;
        for c in 0..geometry.marker_cols {
            let theta = std::f64::consts::TAU * c as f64 / geometry.marker_cols as f64;
            out.push(Marker { theta, z_cm: z });
        }
    }
    out
}

/// Does this camera see a marker at height `z_cm`?
fn visible(camera: CameraId, z_cm: f64, h_cm: f64) -> bool {
    match camera {
        CameraId::Top => z_cm >= h_cm / 2.0,
        CameraId::Bottom => z_cm < h_cm / 2.0,
    }
}

/// Project a surface point into camera image coordinates (x, y).
/// The camera's own cylinder end maps to the outer ring.
pub fn project(camera: CameraId, theta: f64, z_cm: f64, geometry: &SensorGeometry) -> (f64, f64) {
    let h = geometry.cylinder_height_cm;
    let r_out = geometry.outer_ring_radius_px;
    let r_in = INNER_RING_FRAC * r_out;
    let frac = match camera {
        CameraId::Top => ((z_cm - h / 2.0) / (h / 2.0)).clamp(0.0, 1.0),
        CameraId::Bottom => ((h / 2.0 - z_cm) / (h / 2.0)).clamp(0.0, 1.0),
    };
    let rho = r_in + (r_out - r_in) * frac;
    let phi = match camera {
        CameraId::Top => theta,
        CameraId::Bottom => -theta,
    };
    let (cx, cy) = geometry.ring_center(camera);
    (cx + rho * phi.cos(), cy + rho * phi.sin())
}

/// Shortest angular difference in (-pi, pi].
fn wrap_angle(a: f64) -> f64 {
    let mut x = a % std::f64::consts::TAU;
    if x > std::f64::consts::PI {
        x -= std::f64::consts::TAU;
    } else if x <= -std::f64::consts::PI {
        x += std::f64::consts::TAU;
    }
    x
}

/// Gaussian displacement weight of a marker for the given contact.
pub fn contact_weight(marker: &Marker, contact: &ContactState, geometry: &SensorGeometry) -> f64 {
    if contact.depth <= 0.0 || contact.radius_cm <= 0.0 {
        return 0.0;
    }
    let d_arc = wrap_angle(marker.theta - contact.theta) * geometry.cylinder_radius_cm;
    let dz = marker.z_cm - contact.z_cm;
    let s2 = d_arc * d_arc + dz * dz;
    let sigma = contact.radius_cm;
    (-s2 / (2.0 * sigma * sigma)).exp()
}

fn splat(frame: &mut TactileFrame, x: f64, y: f64) {
    let w = frame.width as i64;
    let h = frame.height as i64;
    let reach = (3.0 * SPLAT_SIGMA_PX).ceil() as i64;
    let (xc, yc) = (x.round() as i64, y.round() as i64);
    for py in (yc - reach).max(0)..=(yc + reach).min(h - 1) {
        for px in (xc - reach).max(0)..=(xc + reach).min(w - 1) {
            let dx = px as f64 - x;
            let dy = py as f64 - y;
            let v = SPLAT_INTENSITY * (-(dx * dx + dy * dy) / (2.0 * SPLAT_SIGMA_PX * SPLAT_SIGMA_PX)).exp();
            let idx = (py * w + px) as usize;
            frame.pixels[idx] = frame.pixels[idx].saturating_add(v as u8);
        }
    }
}

/// Render one camera frame for the given contact state. Deterministic: the
/// same contact always produces the identical image.
pub fn render_frame(
    camera: CameraId,
    timestamp_us: u64,
    contact: &ContactState,
    markers: &[Marker],
    geometry: &SensorGeometry,
) -> TactileFrame {
    let mut frame = TactileFrame::new(
        camera,
        timestamp_us,
        geometry.source_width,
        geometry.source_height,
    );
    let (cx, cy) = geometry.ring_center(camera);
    for marker in markers {
        if !visible(camera, marker.z_cm, geometry.cylinder_height_cm) {
            continue;
        }
        let (x, y) = project(camera, marker.theta, marker.z_cm, geometry);
        let w = contact_weight(marker, contact, geometry);
        let (x, y) = if w > 0.0 {
            // Pressing displaces the membrane inward: the marker slides
            // toward the image center, depth- and distance-scaled.
            let shift = DISPLACEMENT_GAIN_PX * contact.depth * w;
            let dx = x - cx;
            let dy = y - cy;
            let rho = (dx * dx + dy * dy).sqrt().max(1e-9);
            let pull = (shift / rho).min(0.9);
            (x - dx * pull, y - dy * pull)
        } else {
            (x, y)
        };
        splat(&mut frame, x, y);
    }
    frame
}
