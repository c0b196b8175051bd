//! Closed 2D trajectory shapes traced at constant speed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryShape {
    Square,
    Diamond,
    Hourglass,
    Triangle,
    Circle,
}

impl TrajectoryShape {
    pub const ALL: [TrajectoryShape; 5] = [
        TrajectoryShape::Square,
        TrajectoryShape::Diamond,
        TrajectoryShape::Hourglass,
        TrajectoryShape::Triangle,
        TrajectoryShape::Circle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrajectoryShape::Square => "square",
            TrajectoryShape::Diamond => "diamond",
            TrajectoryShape::Hourglass => "hourglass",
            TrajectoryShape::Triangle => "triangle",
            TrajectoryShape::Circle => "circle",
        }
    }
}

impl std::fmt::Display for TrajectoryShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Arc-length-parametrized closed path.
#[derive(Debug, Clone)]
pub struct TrajectoryPath {
    pub shape: TrajectoryShape,
    pub scale_m: f64,
    geometry: Geometry,
    perimeter_m: f64,
}

#[derive(Debug, Clone)]
enum Geometry {
    /// Closed polygon with cumulative edge lengths.
    Polygon {
        vertices: Vec<(f64, f64)>,
        cumulative: Vec<f64>,
    },
    Circle {
        radius_m: f64,
    },
}

impl TrajectoryPath {
    pub fn new(shape: TrajectoryShape, scale_m: f64) -> TrajectoryPath {
        let s = scale_m / 2.0;
        let vertices = match shape {
            // Counterclockwise from the lower-left corner.
            TrajectoryShape::Square => vec![(-s, -s), (s, -s), (s, s), (-s, s)],
            TrajectoryShape::Diamond => vec![(s, 0.0), (0.0, s), (-s, 0.0), (0.0, -s)],
            // Self-crossing bowtie: the two diagonals cross at the origin.
            TrajectoryShape::Hourglass => vec![(-s, -s), (s, -s), (-s, s), (s, s)],
            TrajectoryShape::Triangle => {
                // Equilateral with side = scale, circumradius s' = scale/sqrt(3).
                let r = scale_m / 3f64.sqrt();
                (0..3)
                    .map(|i| {
                        let a = std::f64::consts::FRAC_PI_2
                            + i as f64 * std::f64::consts::TAU / 3.0;
                        (r * a.cos(), r * a.sin())
                    })
                    .collect()
            }
            TrajectoryShape::Circle => {
                return TrajectoryPath {
                    shape,
                    scale_m,
                    perimeter_m: std::f64::consts::TAU * s,
                    geometry: Geometry::Circle { radius_m: s },
                };
            }
        };
        let mut cumulative = Vec::with_capacity(vertices.len() + 1);
        cumulative.push(0.0);
        let mut total = 0.0;
        for i in 0..vertices.len() {
            let a = vertices[i];
            let b = vertices[(i + 1) % vertices.len()];
            total += ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
            cumulative.push(total);
        }
        TrajectoryPath {
            shape,
            scale_m,
            geometry: Geometry::Polygon { vertices, cumulative },
            perimeter_m: total,
        }
    }

    pub fn perimeter_m(&self) -> f64 {
        self.perimeter_m
    }

    /// Point at arc length `arc_m` from the start, wrapping around the lap.
    pub fn point_at(&self, arc_m: f64) -> (f64, f64) {
        let arc = arc_m.rem_euclid(self.perimeter_m);
        match &self.geometry {
            Geometry::Circle { radius_m } => {
                let angle = arc / radius_m;
                (radius_m * angle.cos(), radius_m * angle.sin())
            }
            Geometry::Polygon { vertices, cumulative } => {
                let edge = match cumulative.binary_search_by(|c| c.partial_cmp(&arc).unwrap()) {
                    Ok(i) => i.min(vertices.len() - 1),
                    Err(i) => i - 1,
                };
                let a = vertices[edge];
                let b = vertices[(edge + 1) % vertices.len()];
                let len = cumulative[edge + 1] - cumulative[edge];
                let f = if len > 0.0 { (arc - cumulative[edge]) / len } else { 0.0 };
                (a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f)
            }
        }
    }
}

/// Arc-length-uniform waypoint sampling of the named closed path.
pub fn trajectory_waypoints(
    shape: TrajectoryShape,
    scale_m: f64,
    samples_per_lap: usize,
) -> Vec<(f64, f64)> {
    let path = TrajectoryPath::new(shape, scale_m);
    let step = path.perimeter_m() / samples_per_lap as f64;
    (0..samples_per_lap)
        .map(|i| path.point_at(i as f64 * step))
        .collect()
}

/// Robot motion state: a path traversed at constant speed, wrapping laps.
#[derive(Debug, Clone)]
pub struct RobotState {
    pub path: TrajectoryPath,
    pub speed_mps: f64,
    pub phase_m: f64,
}

impl RobotState {
    pub fn new(path: TrajectoryPath, speed_mps: f64) -> RobotState {
        RobotState {
            path,
            speed_mps,
            phase_m: 0.0,
        }
    }

    /// Advance by `dt_s` seconds and return the new pose. The pose is a pure
    /// function of (path, phase).
    pub fn step(&mut self, dt_s: f64) -> (f64, f64) {
        self.phase_m = (self.phase_m + self.speed_mps * dt_s).rem_euclid(self.path.perimeter_m());
        self.path.point_at(self.phase_m)
    }

    /// Switch paths, restarting the new path's lap.
    pub fn switch_path(&mut self, path: TrajectoryPath) {
        self.path = path;
        self.phase_m = 0.0;
    }

    pub fn lap_time_s(&self) -> f64 {
        self.path.perimeter_m() / self.speed_mps
    }
}
