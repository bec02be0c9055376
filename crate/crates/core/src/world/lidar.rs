use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{AgentId, Obstacle, WorldState};
use crate::geometry::{Pose2D, Vec2};

/// Smallest range a beam may report; keeps every range strictly positive.
const MIN_RANGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub beams: usize,
    pub max_range: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            beams: 360,
            max_range: 6.0,
        }
    }
}

/// A full-circle planar scan. Beam `i` points at `angle_min + i * increment`
/// in the sensor frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub ranges: Vec<f64>,
    pub angle_min: f64,
    pub angle_max: f64,
    pub max_range: f64,
    pub origin_pose: Pose2D,
    pub timestamp: f64,
}

impl LaserScan {
    /// Scan with every beam at `max_range`.
    pub fn empty(beams: usize, max_range: f64, origin_pose: Pose2D, timestamp: f64) -> Self {
        let inc = 2.0 * PI / beams as f64;
        Self {
            ranges: vec![max_range; beams],
            angle_min: -PI,
            angle_max: -PI + inc * (beams as f64 - 1.0),
            max_range,
            origin_pose,
            timestamp,
        }
    }

    pub fn increment(&self) -> f64 {
        if self.ranges.len() < 2 {
            return 0.0;
        }
        (self.angle_max - self.angle_min) / (self.ranges.len() - 1) as f64
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.angle_min + i as f64 * self.increment()
    }

    /// Beam endpoints in the sensor frame for returns shorter than max range.
    pub fn hit_points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.ranges
            .iter()
            .enumerate()
            .filter(|(_, r)| **r < self.max_range)
            .map(|(i, r)| Vec2::from_angle(self.angle(i)) * *r)
    }

    pub fn min_range(&self) -> f64 {
        self.ranges.iter().copied().fold(self.max_range, f64::min)
    }
}

/// Smallest positive ray parameter hitting the circle, if any.
fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.norm_sq() - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let t0 = -b - s;
    let t1 = -b + s;
    if t0 > 0.0 {
        Some(t0)
    } else if t1 > 0.0 {
        Some(t1)
    } else {
        None
    }
}

fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = a - origin;
    let t = ao.cross(e) / denom;
    let u = ao.cross(dir) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Casts `beams` rays over the full circle from `sensor_pose`. Bodies with id
/// `exclude` are invisible (the sensing robot itself).
pub fn cast_scan(
    world: &WorldState,
    sensor_pose: &Pose2D,
    beams: usize,
    max_range: f64,
    exclude: Option<AgentId>,
) -> LaserScan {
    let mut scan = LaserScan::empty(beams.max(1), max_range, *sensor_pose, world.time);
    let origin = sensor_pose.position();
    let bodies: Vec<(Vec2, f64)> = world
        .bodies()
        .filter(|(id, _, _)| Some(*id) != exclude)
        .map(|(_, c, r)| (c, r))
        .collect();
    let walls = world.bounds.walls();
    for i in 0..scan.ranges.len() {
        let dir = Vec2::from_angle(sensor_pose.theta + scan.angle(i));
        let mut best = max_range;
        for o in &world.obstacles {
            let t = match *o {
                Obstacle::Circle { center, radius } => ray_circle(origin, dir, center, radius),
                Obstacle::Segment { a, b } => ray_segment(origin, dir, a, b),
            };
            if let Some(t) = t {
                best = best.min(t);
            }
        }
        for &(a, b) in &walls {
            if let Some(t) = ray_segment(origin, dir, a, b) {
                best = best.min(t);
            }
        }
        for &(c, r) in &bodies {
            if let Some(t) = ray_circle(origin, dir, c, r) {
                best = best.min(t);
            }
        }
        scan.ranges[i] = best.clamp(MIN_RANGE, max_range);
    }
    scan
}
