use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardParams {
    /// Gain on the one-step reduction of goal distance.
    pub w1: f64,
    /// Magnitude of the proximity penalty; applied with a negative sign.
    pub w2: f64,
    pub r_arrive: f64,
    pub r_collision: f64,
    pub r_lost: f64,
    /// Robot radius, m.
    pub r: f64,
    /// Safety expansion added to the radius, m.
    pub r_prime: f64,
    pub arrive_dist: f64,
    pub lost_dist: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            w1: 2.5,
            w2: 0.5,
            r_arrive: 10.0,
            r_collision: -15.0,
            r_lost: -15.0,
            r: 0.3,
            r_prime: 0.2,
            arrive_dist: 0.3,
            lost_dist: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    Running,
    Collision,
    Lost,
    Timeout,
}

impl DoneReason {
    pub fn is_done(self) -> bool {
        self != DoneReason::Running
    }

    pub fn name(self) -> &'static str {
        match self {
            DoneReason::Running => "running",
            DoneReason::Collision => "collision",
            DoneReason::Lost => "lost",
            DoneReason::Timeout => "timeout",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for DoneReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What the reward needs from one tick, for one robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotSnapshot {
    pub position: Vec2,
    pub goal: Vec2,
    pub target: Vec2,
    /// Minimum laser range, m.
    pub min_range: f64,
    pub collided: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerms {
    pub r_a: f64,
    pub r_c: f64,
    pub total: f64,
    pub reason: DoneReason,
    /// Whether the arrival bonus was paid on this tick.
    pub arrived: bool,
}

pub fn approach_term(
    prev: &RobotSnapshot,
    curr: &RobotSnapshot,
    params: &RewardParams,
    arrival_open: bool,
) -> (f64, bool) {
    if curr.position.distance(curr.target) > params.lost_dist {
        return (params.r_lost, false);
    }
    if arrival_open && curr.position.distance(curr.goal) <= params.arrive_dist {
        return (params.r_arrive, true);
    }
    let progress = prev.position.distance(prev.goal) - curr.position.distance(curr.goal);
    (params.w1 * progress, false)
}

pub fn proximity_term(curr: &RobotSnapshot, params: &RewardParams) -> f64 {
    let safe = params.r + params.r_prime;
    if curr.collided {
        params.r_collision
    } else if curr.min_range <= safe {
        -params.w2 * (1.0 - curr.min_range / safe)
    } else {
        0.0
    }
}

/// One-step reward `R_a + R_c`. `arrival_open` is false once the arrival
/// bonus was paid for the current goal cycle. Timeouts are decided by the
/// episode, not here.
pub fn reward(
    prev: &RobotSnapshot,
    curr: &RobotSnapshot,
    params: &RewardParams,
    arrival_open: bool,
) -> RewardTerms {
    let (r_a, arrived) = approach_term(prev, curr, params, arrival_open);
    let r_c = proximity_term(curr, params);
    let reason = if curr.collided {
        DoneReason::Collision
    } else if curr.position.distance(curr.target) > params.lost_dist {
        DoneReason::Lost
    } else {
        DoneReason::Running
    };
    RewardTerms {
        r_a,
        r_c,
        total: r_a + r_c,
        reason,
        arrived,
    }
}
