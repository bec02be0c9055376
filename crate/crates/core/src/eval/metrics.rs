use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::log::{EpisodeLog, EpisodeMeta, Tick};
use super::{EvalError, Strategy};
use crate::geometry::{normalize_angle, point_segment_distance, segments_properly_intersect, Vec2};
use crate::policy::DoneReason;
use crate::world::Obstacle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    /// Field of view centered on the robot heading, rad.
    pub fov: f64,
    /// Center-to-center distance band counted as comfortable, m.
    pub comfort: [f64; 2],
    /// Minimum following score for a successful episode.
    pub success_floor: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            fov: 2.0 * PI,
            comfort: [0.5, 3.0],
            success_floor: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotMetrics {
    pub robot: usize,
    pub following_score: f64,
    pub average_distance: f64,
    pub done_reason: DoneReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub seed: u64,
    pub strategy: Strategy,
    pub following_score: f64,
    pub average_distance: f64,
    pub success: bool,
    pub per_robot: Vec<RobotMetrics>,
}

fn segment_blocked(
    a: Vec2,
    b: Vec2,
    obstacles: &[Obstacle],
    bodies: impl Iterator<Item = (Vec2, f64)>,
) -> bool {
    let hits_static = obstacles.iter().any(|o| match *o {
        Obstacle::Circle { center, radius } => point_segment_distance(center, a, b) < radius,
        Obstacle::Segment { a: p, b: q } => segments_properly_intersect(a, b, p, q),
    });
    hits_static
        || bodies
            .into_iter()
            .any(|(c, r)| point_segment_distance(c, a, b) < r)
}

/// Whether robot `i` sees the target on `tick`: still in play (no collision
/// or loss yet), inside the field of view, no static obstacle, pedestrian or
/// teammate across the line of sight, and at a comfortable distance.
pub fn robot_follows(
    meta: &EpisodeMeta,
    tick: &Tick,
    i: usize,
    fov: f64,
    comfort: [f64; 2],
) -> bool {
    if matches!(tick.done[i], DoneReason::Collision | DoneReason::Lost) {
        return false;
    }
    let robot = &tick.robots[i];
    let p = robot.position();
    let t = tick.target.position();
    let d = p.distance(t);
    if d < comfort[0] || d > comfort[1] {
        return false;
    }
    if fov < 2.0 * PI {
        let bearing = normalize_angle((t - p).angle() - robot.pose.theta);
        if bearing.abs() > 0.5 * fov {
            return false;
        }
    }
    let others = tick
        .pedestrians
        .iter()
        .map(|a| (a.position(), a.radius))
        .chain(
            tick.robots
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, a)| (a.position(), a.radius)),
        );
    !segment_blocked(p, t, &meta.obstacles, others)
}

fn check_nonempty(log: &EpisodeLog) -> Result<(), EvalError> {
    if log.ticks.is_empty() || log.meta.robot_radii.is_empty() {
        Err(EvalError::EmptyLog)
    } else {
        Ok(())
    }
}

/// Steps the episode was scheduled for: an episode cut short by every robot
/// failing still counts the missing steps as not following.
fn scheduled_steps(log: &EpisodeLog) -> usize {
    log.ticks.len().max(log.meta.horizon)
}

/// Team score: percentage of scheduled steps on which any robot follows the
/// target.
pub fn following_score(log: &EpisodeLog, fov: f64, comfort: [f64; 2]) -> Result<f64, EvalError> {
    check_nonempty(log)?;
    let m = log
        .ticks
        .iter()
        .filter(|tick| {
            (0..tick.robots.len()).any(|i| robot_follows(&log.meta, tick, i, fov, comfort))
        })
        .count();
    Ok(m as f64 / scheduled_steps(log) as f64 * 100.0)
}

pub fn robot_following_score(
    log: &EpisodeLog,
    i: usize,
    fov: f64,
    comfort: [f64; 2],
) -> Result<f64, EvalError> {
    check_nonempty(log)?;
    let m = log
        .ticks
        .iter()
        .filter(|tick| robot_follows(&log.meta, tick, i, fov, comfort))
        .count();
    Ok(m as f64 / scheduled_steps(log) as f64 * 100.0)
}

/// Distance from a robot's boundary to the nearest static surface, walls
/// included.
pub fn static_clearance(meta: &EpisodeMeta, center: Vec2, radius: f64) -> f64 {
    let nearest = meta
        .obstacles
        .iter()
        .map(|o| o.surface_distance(center))
        .fold(meta.bounds.wall_distance(center), f64::min);
    nearest - radius
}

fn robot_average_distance(log: &EpisodeLog, i: usize) -> f64 {
    let sum: f64 = log
        .ticks
        .iter()
        .map(|t| static_clearance(&log.meta, t.robots[i].position(), t.robots[i].radius))
        .sum();
    sum / log.ticks.len() as f64
}

/// Mean over ticks and robots of boundary clearance to static obstacles.
pub fn average_min_distance(log: &EpisodeLog) -> Result<f64, EvalError> {
    check_nonempty(log)?;
    let n = log.meta.robot_radii.len();
    let sum: f64 = log
        .ticks
        .iter()
        .flat_map(|t| {
            t.robots
                .iter()
                .map(|r| static_clearance(&log.meta, r.position(), r.radius))
        })
        .sum();
    Ok(sum / (log.ticks.len() * n) as f64)
}

fn final_reasons(log: &EpisodeLog) -> Vec<DoneReason> {
    log.ticks.last().map(|t| t.done.clone()).unwrap_or_default()
}

pub fn compute_metrics(log: &EpisodeLog, params: &MetricParams) -> Result<Metrics, EvalError> {
    let following_score = following_score(log, params.fov, params.comfort)?;
    let average_distance = average_min_distance(log)?;
    let reasons = final_reasons(log);
    let clean = reasons
        .iter()
        .all(|r| !matches!(r, DoneReason::Collision | DoneReason::Lost));
    let full = log.ticks.len() >= log.meta.horizon;
    let per_robot = (0..log.meta.robot_radii.len())
        .map(|i| {
            Ok(RobotMetrics {
                robot: i,
                following_score: robot_following_score(log, i, params.fov, params.comfort)?,
                average_distance: robot_average_distance(log, i),
                done_reason: reasons[i],
            })
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(Metrics {
        scenario: log.meta.scenario.family.name().to_string(),
        seed: log.seed(),
        strategy: log.meta.strategy,
        following_score,
        average_distance,
        success: clean && full && following_score >= params.success_floor,
        per_robot,
    })
}

/// Percentage of successful episodes.
pub fn success_rate(metrics: &[Metrics]) -> f64 {
    if metrics.is_empty() {
        return 0.0;
    }
    metrics.iter().filter(|m| m.success).count() as f64 / metrics.len() as f64 * 100.0
}

pub fn metrics_json(m: &Metrics) -> String {
    serde_json::to_string_pretty(m).expect("metrics serialize") + "\n"
}
