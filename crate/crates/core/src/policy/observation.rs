use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose2D, Twist, Vec2};
use crate::maps::{stack_scans, GridGeometry, MapError, StackedObstacleMap};
use crate::world::LaserScan;

/// Number of stacked scan layers.
pub const STACK_DEPTH: usize = 5;
/// Length of the relative target track.
pub const TARGET_HISTORY: usize = 8;

/// Affine bounds mapping raw quantities into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormBounds {
    pub rel: [f64; 2],
    pub v: [f64; 2],
    pub w: [f64; 2],
}

impl Default for NormBounds {
    fn default() -> Self {
        Self {
            rel: [-6.0, 6.0],
            v: [0.0, 0.7],
            w: [-1.5, 1.5],
        }
    }
}

impl NormBounds {
    pub const IDENTITY: NormBounds = NormBounds {
        rel: [0.0, 1.0],
        v: [0.0, 1.0],
        w: [0.0, 1.0],
    };
}

pub fn normalize(x: f64, [lo, hi]: [f64; 2]) -> f64 {
    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Ego-motion compensated scan layers, newest first.
    pub o_l: StackedObstacleMap,
    /// Target positions in the current ego frame, oldest first.
    pub o_t: Vec<[f64; 2]>,
    /// Own `(v, w)`.
    pub o_v: [f64; 2],
    /// Formation goal in the current ego frame.
    pub o_g: [f64; 2],
}

impl Observation {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .o_l
            .layers
            .iter()
            .flat_map(|l| l.cells.iter().copied())
            .collect();
        out.extend(self.o_t.iter().flatten());
        out.extend(self.o_v);
        out.extend(self.o_g);
        out
    }

    /// Re-applies the affine map with `bounds`; a no-op under
    /// [`NormBounds::IDENTITY`] for an already normalized observation.
    pub fn renormalized(&self, bounds: &NormBounds) -> Observation {
        let rel = |p: [f64; 2]| [normalize(p[0], bounds.rel), normalize(p[1], bounds.rel)];
        Observation {
            o_l: self.o_l.clone(),
            o_t: self.o_t.iter().map(|p| rel(*p)).collect(),
            o_v: [
                normalize(self.o_v[0], bounds.v),
                normalize(self.o_v[1], bounds.w),
            ],
            o_g: rel(self.o_g),
        }
    }
}

/// Rolling per-robot sensor history.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotHistory {
    /// `(scan, pose)` pairs, oldest first.
    pub scans: VecDeque<(LaserScan, Pose2D)>,
    /// World-frame target positions, oldest first.
    pub target: VecDeque<Vec2>,
}

impl RobotHistory {
    /// Seeds both histories by repeating the first reading. Padded scans get
    /// synthetic earlier timestamps so the stack stays strictly ordered.
    pub fn seeded(scan: LaserScan, pose: Pose2D, target: Vec2, dt: f64) -> Self {
        let scans = (0..STACK_DEPTH)
            .rev()
            .map(|k| {
                let mut s = scan.clone();
                s.timestamp -= k as f64 * dt;
                (s, pose)
            })
            .collect();
        Self {
            scans,
            target: std::iter::repeat_n(target, TARGET_HISTORY).collect(),
        }
    }

    pub fn push(&mut self, scan: LaserScan, pose: Pose2D, target: Vec2) {
        if self.scans.len() == STACK_DEPTH {
            self.scans.pop_front();
        }
        self.scans.push_back((scan, pose));
        if self.target.len() == TARGET_HISTORY {
            self.target.pop_front();
        }
        self.target.push_back(target);
    }

    pub fn latest_scan(&self) -> &LaserScan {
        &self.scans.back().expect("history is never empty").0
    }
}

pub fn build_observation(
    pose: &Pose2D,
    twist: &Twist,
    history: &RobotHistory,
    goal: Vec2,
    bounds: &NormBounds,
    geometry: GridGeometry,
) -> Result<Observation, MapError> {
    let scans: Vec<(LaserScan, Pose2D)> = history.scans.iter().cloned().collect();
    let o_l = stack_scans(&scans, pose, geometry)?;
    let rel = |p: Vec2| {
        let q = pose.inverse_transform_point(p);
        [normalize(q.x, bounds.rel), normalize(q.y, bounds.rel)]
    };
    Ok(Observation {
        o_l,
        o_t: history.target.iter().map(|p| rel(*p)).collect(),
        o_v: [normalize(twist.v, bounds.v), normalize(twist.w, bounds.w)],
        o_g: rel(goal),
    })
}
