use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose2D, Twist, TwistLimits, Vec2};
use crate::world::LaserScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScriptedParams {
    pub heading_gain: f64,
    pub radius: f64,
    pub r_prime: f64,
    /// Speed ramps from zero to full as the nearest return ahead goes from
    /// `radius` to `radius + r_prime + margin`, m.
    pub margin: f64,
    /// Half-angle of the forward cone that slows the robot down, rad.
    pub slow_cone: f64,
    /// How far ahead a heading must be free, m.
    pub lookahead: f64,
    /// Lateral margin added to the body when checking a heading, m.
    pub path_margin: f64,
    /// Below this goal distance the robot stops, m.
    pub stop_dist: f64,
    /// Goal distance below which speed tapers off, m.
    pub approach_dist: f64,
    pub limits: TwistLimits,
}

impl Default for ScriptedParams {
    fn default() -> Self {
        Self {
            heading_gain: 2.0,
            radius: 0.3,
            r_prime: 0.2,
            margin: 0.3,
            slow_cone: PI / 3.0,
            lookahead: 0.6,
            path_margin: 0.05,
            stop_dist: 0.05,
            approach_dist: 0.6,
            limits: TwistLimits::FOLLOWER,
        }
    }
}

/// Distance the robot body can travel along `heading` before touching any
/// scan endpoint, capped at `max`.
fn free_distance(points: &[Vec2], heading: f64, half_width: f64, max: f64) -> f64 {
    let u = Vec2::from_angle(heading);
    points
        .iter()
        .filter_map(|p| {
            let along = p.dot(u);
            let lat = u.cross(*p).abs();
            (along > 0.0 && lat < half_width)
                .then(|| along - (half_width * half_width - lat * lat).sqrt())
        })
        .fold(max, f64::min)
        .max(0.0)
}

/// Picks a heading (robot frame) close to `bearing` whose swept path is free
/// for `need` meters; falls back to the most open heading.
fn choose_heading(points: &[Vec2], bearing: f64, half_width: f64, need: f64) -> f64 {
    if free_distance(points, bearing, half_width, need) >= need {
        return bearing;
    }
    let mut best_free: Option<(f64, f64)> = None;
    let mut most_open = (f64::NEG_INFINITY, f64::INFINITY, bearing);
    for k in -18..18 {
        let phi = k as f64 * PI / 18.0;
        let dev = crate::geometry::normalize_angle(phi - bearing).abs();
        let free = free_distance(points, phi, half_width, need);
        if free >= need && best_free.is_none_or(|(d, _)| dev < d) {
            best_free = Some((dev, phi));
        }
        if free > most_open.0 || (free == most_open.0 && dev < most_open.1) {
            most_open = (free, dev, phi);
        }
    }
    best_free.map_or(most_open.2, |(_, phi)| phi)
}

/// Baseline local planner: steer toward the goal with proportional heading
/// control, detour around scan returns blocking the direct path, rotate in
/// place when the chosen heading is behind, and slow down when the path ahead closes in.
pub fn scripted_policy(
    pose: &Pose2D,
    goal: &Pose2D,
    scan: &LaserScan,
    params: &ScriptedParams,
) -> Twist {
    let rel = pose.inverse_transform_point(goal.position());
    let dist = rel.norm();
    if dist < params.stop_dist {
        return Twist::ZERO;
    }
    let points: Vec<Vec2> = scan.hit_points().collect();
    let half_width = params.radius + params.path_margin;
    let phi = choose_heading(&points, rel.angle(), half_width, dist.min(params.lookahead));
    let limits = &params.limits;
    if phi.abs() > PI / 2.0 {
        let dir = if phi >= 0.0 { 1.0 } else { -1.0 };
        return Twist::new(limits.v_min, dir * limits.w_max);
    }
    let w = params.heading_gain * phi;
    // returns outside the forward cone cannot be driven into
    let ahead = points
        .iter()
        .filter(|p| p.x > 0.0 && p.y.atan2(p.x).abs() <= params.slow_cone)
        .map(|p| p.norm())
        .fold(scan.max_range, f64::min);
    let proximity = ((ahead - params.radius) / (params.r_prime + params.margin)).clamp(0.0, 1.0);
    let approach = (dist / params.approach_dist).min(1.0);
    let v = limits.v_max * proximity * approach * phi.cos();
    Twist::new(v, w).clamp_to(limits)
}
