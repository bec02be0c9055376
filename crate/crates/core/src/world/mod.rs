//! Deterministic 2D world: differential-drive discs, static circles and
//! wall segments, raycast lidar and a scripted target.

mod kinematics;
mod lidar;
mod navigator;
pub mod scenario;
pub mod svg;
pub mod trajectory;

pub use kinematics::integrate_unicycle;
pub use lidar::{cast_scan, LaserScan, LidarConfig};
pub use navigator::{navigate, target_policy_step, NavigatorParams};
pub use scenario::{make_scenario, Family, ScenarioError, ScenarioSpec};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{point_segment_distance, Pose2D, Twist, TwistLimits, Vec2};

/// Simulation step used everywhere unless a caller overrides it.
pub const DEFAULT_DT: f64 = 0.1;
/// Distance at which a walker considers its goal reached.
pub const GOAL_REACHED_DIST: f64 = 0.3;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("expected {expected} follower commands, got {got}")]
    CommandCount { expected: usize, got: usize },
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Obstacle {
    Circle { center: Vec2, radius: f64 },
    Segment { a: Vec2, b: Vec2 },
}

impl Obstacle {
    /// Distance from `p` to the obstacle surface (negative inside circles).
    pub fn surface_distance(&self, p: Vec2) -> f64 {
        match *self {
            Obstacle::Circle { center, radius } => p.distance(center) - radius,
            Obstacle::Segment { a, b } => point_segment_distance(p, a, b),
        }
    }

    pub fn rotated(&self, angle: f64) -> Obstacle {
        match *self {
            Obstacle::Circle { center, radius } => Obstacle::Circle {
                center: center.rotate(angle),
                radius,
            },
            Obstacle::Segment { a, b } => Obstacle::Segment {
                a: a.rotate(angle),
                b: b.rotate(angle),
            },
        }
    }
}

/// Axis-aligned workspace rectangle; its edges behave as walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Distance from an interior point to the nearest edge.
    pub fn wall_distance(&self, p: Vec2) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }

    pub fn walls(&self) -> [(Vec2, Vec2); 4] {
        let (a, c) = (self.min, self.max);
        let b = Vec2::new(c.x, a.y);
        let d = Vec2::new(a.x, c.y);
        [(a, b), (b, c), (c, d), (d, a)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub pose: Pose2D,
    pub twist: Twist,
    pub radius: f64,
}

impl Agent {
    pub fn new(pose: Pose2D, radius: f64) -> Self {
        Self {
            pose,
            twist: Twist::ZERO,
            radius,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position()
    }
}

/// How a scripted walker picks its next goal once the current one is reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Route {
    /// Uniform random goals inside the bounds, drawn from the world RNG.
    RandomGoals,
    /// Cycles through fixed waypoints.
    Waypoints { points: Vec<Vec2>, next: usize },
}

/// A scripted agent (the target or a pedestrian) heading to `goal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Walker {
    pub agent: Agent,
    pub goal: Vec2,
    pub route: Route,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentId {
    Robot(usize),
    Target,
    Pedestrian(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub obstacles: Vec<Obstacle>,
    pub robots: Vec<Agent>,
    pub target: Walker,
    pub pedestrians: Vec<Walker>,
    pub time: f64,
    pub bounds: Bounds,
    /// Post-integration collision flag per robot, refreshed every step.
    pub collided: Vec<bool>,
    pub rng: ChaCha8Rng,
}

impl WorldState {
    pub fn new(
        bounds: Bounds,
        obstacles: Vec<Obstacle>,
        robots: Vec<Agent>,
        target: Walker,
        pedestrians: Vec<Walker>,
        rng: ChaCha8Rng,
    ) -> Self {
        let mut w = Self {
            obstacles,
            collided: vec![false; robots.len()],
            robots,
            target,
            pedestrians,
            time: 0.0,
            bounds,
            rng,
        };
        w.refresh_collisions();
        w
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        match id {
            AgentId::Robot(i) => &self.robots[i],
            AgentId::Target => &self.target.agent,
            AgentId::Pedestrian(i) => &self.pedestrians[i].agent,
        }
    }

    /// Every moving body as `(id, center, radius)`.
    pub fn bodies(&self) -> impl Iterator<Item = (AgentId, Vec2, f64)> + '_ {
        let robots = self
            .robots
            .iter()
            .enumerate()
            .map(|(i, a)| (AgentId::Robot(i), a.position(), a.radius));
        let target = std::iter::once((
            AgentId::Target,
            self.target.agent.position(),
            self.target.agent.radius,
        ));
        let peds = self
            .pedestrians
            .iter()
            .enumerate()
            .map(|(i, w)| (AgentId::Pedestrian(i), w.agent.position(), w.agent.radius));
        robots.chain(target).chain(peds)
    }

    /// Distance from `p` to the nearest static surface: obstacles and bounds.
    pub fn static_clearance(&self, p: Vec2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.surface_distance(p))
            .fold(self.bounds.wall_distance(p), f64::min)
    }

    /// Distance from `p` to the nearest surface of anything, skipping `exclude`.
    pub fn clearance(&self, p: Vec2, exclude: Option<AgentId>) -> f64 {
        self.bodies()
            .filter(|(id, _, _)| Some(*id) != exclude)
            .map(|(_, c, r)| p.distance(c) - r)
            .fold(self.static_clearance(p), f64::min)
    }

    /// Strict-overlap test for a disc against everything except `exclude`.
    pub fn disc_collides(&self, center: Vec2, radius: f64, exclude: Option<AgentId>) -> bool {
        if center.x - radius < self.bounds.min.x
            || center.x + radius > self.bounds.max.x
            || center.y - radius < self.bounds.min.y
            || center.y + radius > self.bounds.max.y
        {
            return true;
        }
        if self
            .obstacles
            .iter()
            .any(|o| o.surface_distance(center) < radius)
        {
            return true;
        }
        self.bodies()
            .filter(|(id, _, _)| Some(*id) != exclude)
            .any(|(_, c, r)| center.distance(c) < radius + r)
    }

    fn refresh_collisions(&mut self) {
        self.collided = (0..self.robots.len())
            .map(|i| check_collision(self, i))
            .collect();
    }
}

/// Draws a random goal at least `radius + 0.3` from every static surface.
pub fn sample_free_goal(
    bounds: &Bounds,
    obstacles: &[Obstacle],
    rng: &mut ChaCha8Rng,
    radius: f64,
) -> Vec2 {
    let lo = bounds.min + Vec2::new(1.0, 1.0);
    let hi = bounds.max - Vec2::new(1.0, 1.0);
    let mut g = Vec2::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
    for _ in 0..200 {
        g = Vec2::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        let clear = obstacles
            .iter()
            .map(|o| o.surface_distance(g))
            .fold(bounds.wall_distance(g), f64::min);
        if clear > radius + 0.3 {
            break;
        }
    }
    g
}

/// True iff robot `index`'s disc strictly overlaps an obstacle, the boundary,
/// another robot, a pedestrian or the target. Tangency is not a collision.
pub fn check_collision(world: &WorldState, index: usize) -> bool {
    let a = &world.robots[index];
    world.disc_collides(a.position(), a.radius, Some(AgentId::Robot(index)))
}

fn advance_route(
    walker: &mut Walker,
    rng: &mut ChaCha8Rng,
    bounds: &Bounds,
    obstacles: &[Obstacle],
) {
    match &mut walker.route {
        Route::RandomGoals => {
            walker.goal = sample_free_goal(bounds, obstacles, rng, walker.agent.radius);
        }
        Route::Waypoints { points, next } => {
            if !points.is_empty() {
                walker.goal = points[*next % points.len()];
                *next = (*next + 1) % points.len();
            }
        }
    }
}

/// Advances the world by `dt`. Followers take `follower_cmds`; the target and
/// pedestrians run the scripted navigator. Collisions are evaluated after
/// integration.
pub fn step_world(
    world: &WorldState,
    follower_cmds: &[Twist],
    dt: f64,
) -> Result<WorldState, WorldError> {
    if follower_cmds.len() != world.robots.len() {
        return Err(WorldError::CommandCount {
            expected: world.robots.len(),
            got: follower_cmds.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(WorldError::BadTimeStep(dt));
    }
    let mut next = world.clone();

    // Goal bookkeeping for scripted walkers happens on the pre-step state.
    let WorldState {
        obstacles,
        target,
        pedestrians,
        bounds,
        rng,
        ..
    } = &mut next;
    for walker in std::iter::once(target).chain(pedestrians.iter_mut()) {
        if walker.agent.position().distance(walker.goal) <= GOAL_REACHED_DIST {
            advance_route(walker, rng, bounds, obstacles);
        }
    }

    let target_cmd = target_policy_step(&next, next.target.goal);
    let ped_cmds: Vec<Twist> = (0..next.pedestrians.len())
        .map(|i| {
            navigate(
                &next,
                AgentId::Pedestrian(i),
                next.pedestrians[i].goal,
                &TwistLimits::TARGET,
                &NavigatorParams::default(),
            )
        })
        .collect();

    for (robot, cmd) in next.robots.iter_mut().zip(follower_cmds) {
        let cmd = cmd.clamp_to(&TwistLimits::FOLLOWER);
        robot.pose = integrate_unicycle(robot.pose, cmd, dt);
        robot.twist = cmd;
    }
    let t = &mut next.target.agent;
    t.pose = integrate_unicycle(t.pose, target_cmd, dt);
    t.twist = target_cmd;
    for (p, cmd) in next.pedestrians.iter_mut().zip(ped_cmds) {
        p.agent.pose = integrate_unicycle(p.agent.pose, cmd, dt);
        p.agent.twist = cmd;
    }
    next.time += dt;
    next.refresh_collisions();
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    pub(crate) fn open_world(robots: Vec<Agent>) -> WorldState {
        let target = Walker {
            agent: Agent::new(Pose2D::new(40.0, 40.0, 0.0), 0.3),
            goal: Vec2::new(40.0, 40.0),
            route: Route::Waypoints {
                points: vec![],
                next: 0,
            },
        };
        WorldState::new(
            Bounds::new(Vec2::new(-50.0, -50.0), Vec2::new(50.0, 50.0)),
            vec![],
            robots,
            target,
            vec![],
            ChaCha8Rng::seed_from_u64(0),
        )
    }

    #[test]
    fn collision_conventions() {
        let far = open_world(vec![
            Agent::new(Pose2D::new(0.0, 0.0, 0.0), 0.3),
            Agent::new(Pose2D::new(1.6, 0.0, 0.0), 0.3),
        ]);
        assert!(!check_collision(&far, 0));

        let close = open_world(vec![
            Agent::new(Pose2D::new(0.0, 0.0, 0.0), 0.3),
            Agent::new(Pose2D::new(0.59, 0.0, 0.0), 0.3),
        ]);
        assert!(check_collision(&close, 0));
        assert!(check_collision(&close, 1));

        let tangent = open_world(vec![
            Agent::new(Pose2D::new(0.0, 0.0, 0.0), 0.25),
            Agent::new(Pose2D::new(0.5, 0.0, 0.0), 0.25),
        ]);
        assert!(!check_collision(&tangent, 0));
    }

    #[test]
    fn collision_with_walls_and_bounds() {
        let mut w = open_world(vec![Agent::new(Pose2D::new(0.0, 0.0, 0.0), 0.3)]);
        w.obstacles.push(Obstacle::Segment {
            a: Vec2::new(0.25, -1.0),
            b: Vec2::new(0.25, 1.0),
        });
        assert!(check_collision(&w, 0));
        w.obstacles[0] = Obstacle::Circle {
            center: Vec2::new(1.0, 0.0),
            radius: 0.7,
        };
        assert!(!check_collision(&w, 0));
        w.robots[0].pose = Pose2D::new(-49.8, 0.0, 0.0);
        assert!(check_collision(&w, 0));
    }

    #[test]
    fn zero_commands_leave_poses() {
        let w = open_world(vec![
            Agent::new(Pose2D::new(0.0, 0.0, 0.3), 0.3),
            Agent::new(Pose2D::new(3.0, 1.0, -2.0), 0.3),
        ]);
        let n = step_world(&w, &[Twist::ZERO; 2], 0.1).unwrap();
        assert_eq!(n.robots[0].pose, w.robots[0].pose);
        assert_eq!(n.robots[1].pose, w.robots[1].pose);
        assert!((n.time - 0.1).abs() < 1e-15);
    }

    #[test]
    fn step_is_deterministic() {
        let w = open_world(vec![Agent::new(Pose2D::new(0.0, 0.0, 0.3), 0.3)]);
        let cmd = [Twist::new(0.5, 0.4)];
        let a = step_world(&w, &cmd, 0.1).unwrap();
        let b = step_world(&w, &cmd, 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn time_accumulates() {
        let mut w = open_world(vec![Agent::new(Pose2D::new(0.0, 0.0, 0.0), 0.3)]);
        for _ in 0..300 {
            w = step_world(&w, &[Twist::ZERO], 0.1).unwrap();
        }
        assert!((w.time - 30.0).abs() < 1e-9);
    }

    #[test]
    fn command_count_mismatch() {
        let w = open_world(vec![Agent::new(Pose2D::new(0.0, 0.0, 0.0), 0.3)]);
        assert_eq!(
            step_world(&w, &[], 0.1),
            Err(WorldError::CommandCount {
                expected: 1,
                got: 0
            })
        );
    }

    #[test]
    fn straight_motion_is_reversible() {
        let w = open_world(vec![Agent::new(Pose2D::new(1.0, 2.0, 0.8), 0.3)]);
        let fwd = step_world(&w, &[Twist::new(0.6, 0.0)], 0.1).unwrap();
        let mut turned = fwd.clone();
        let p = turned.robots[0].pose;
        turned.robots[0].pose = Pose2D::new(p.x, p.y, p.theta + std::f64::consts::PI);
        let back = step_world(&turned, &[Twist::new(0.6, 0.0)], 0.1).unwrap();
        let q = back.robots[0].pose;
        assert!((q.x - 1.0).abs() < 1e-9 && (q.y - 2.0).abs() < 1e-9);
    }
}
