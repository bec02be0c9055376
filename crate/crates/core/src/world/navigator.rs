//! Scripted collision-averse navigator for the target and pedestrians.
//!
//! Candidate headings are scored by their angular deviation from the goal
//! bearing plus a clearance penalty along a short lookahead. The exact goal
//! bearing is always a candidate, so in free space the walker turns straight
//! at its goal.

use std::f64::consts::PI;

use super::{AgentId, WorldState};
use crate::geometry::{normalize_angle, Twist, TwistLimits, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavigatorParams {
    /// Proportional heading gain (rad/s per rad).
    pub heading_gain: f64,
    /// Lookahead length used to score candidate headings, m.
    pub lookahead: f64,
    /// Clearance below which a heading is penalized, m.
    pub safe_clearance: f64,
    pub repulsion_weight: f64,
    /// Clearance over which forward speed ramps from zero to full, m.
    pub slowdown_clearance: f64,
}

impl Default for NavigatorParams {
    fn default() -> Self {
        Self {
            heading_gain: 2.0,
            lookahead: 1.0,
            safe_clearance: 0.6,
            repulsion_weight: 0.3,
            slowdown_clearance: 0.4,
        }
    }
}

const BLOCKED: f64 = 0.05;

fn path_clearance(world: &WorldState, id: AgentId, start: Vec2, heading: f64, len: f64) -> f64 {
    let radius = world.agent(id).radius;
    let dir = Vec2::from_angle(heading);
    (1..=5)
        .map(|k| world.clearance(start + dir * (len * k as f64 / 5.0), Some(id)) - radius)
        .fold(f64::INFINITY, f64::min)
}

/// Command steering agent `id` toward `goal` while keeping clear of everything
/// else in the world.
pub fn navigate(
    world: &WorldState,
    id: AgentId,
    goal: Vec2,
    limits: &TwistLimits,
    params: &NavigatorParams,
) -> Twist {
    let agent = world.agent(id);
    let p = agent.position();
    let theta = agent.pose.theta;
    let bearing = normalize_angle((goal - p).angle() - theta);

    let penalty = |c: f64| {
        if c <= BLOCKED {
            1e6
        } else if c < params.safe_clearance {
            params.repulsion_weight * (1.0 / c - 1.0 / params.safe_clearance)
        } else {
            0.0
        }
    };
    let candidates = std::iter::once(bearing).chain((-18..18).map(|k| k as f64 * PI / 18.0));
    let mut best = (f64::INFINITY, bearing);
    for phi in candidates {
        let c = path_clearance(world, id, p, theta + phi, params.lookahead);
        let cost = normalize_angle(phi - bearing).abs() + penalty(c);
        if cost < best.0 {
            best = (cost, phi);
        }
    }
    let phi = best.1;
    let w = (params.heading_gain * phi).clamp(-limits.w_max, limits.w_max);

    let ahead = path_clearance(world, id, p, theta, params.slowdown_clearance) - BLOCKED;
    let slow = (ahead / params.slowdown_clearance).clamp(0.0, 1.0);
    let v = (limits.v_max * phi.cos().max(0.0) * slow).clamp(limits.v_min, limits.v_max);
    Twist::new(v, w)
}

/// Scripted stand-in for a learned social navigation policy driving the target.
pub fn target_policy_step(world: &WorldState, goal: Vec2) -> Twist {
    navigate(
        world,
        AgentId::Target,
        goal,
        &TwistLimits::TARGET,
        &NavigatorParams::default(),
    )
}
