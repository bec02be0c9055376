//! Team goal planning: target-centered mapping, formation selection and
//! assignment, refreshed on a fixed cadence. Between refreshes the formation
//! stays rigid in the target frame.

use serde::{Deserialize, Serialize};

use crate::fields::{FieldGains, TargetMotion};
use crate::formation::{
    assign_goals, fixed_formation, select_formation, FormationError, FormationParams, FormationPlan,
};
use crate::geometry::{Pose2D, Vec2};
use crate::maps::{build_target_centered_map, GridGeometry, TargetCenteredMap};
use crate::world::{LaserScan, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalMode {
    /// Formation points from the composed potential field.
    PotentialField,
    /// Points evenly spaced on the free-space ring, ignoring obstacles.
    FixedPosition,
}

/// Extra radius around known teammates and the target whose scan returns
/// are removed before mapping.
pub const KNOWN_AGENT_MARGIN: f64 = 0.05;

/// Copy of `scan` with every return that lands on a known body replaced by
/// max range.
pub fn mask_known_agents(scan: &LaserScan, pose: &Pose2D, known: &[(Vec2, f64)]) -> LaserScan {
    let mut out = scan.clone();
    for (i, r) in out.ranges.iter_mut().enumerate() {
        if *r >= scan.max_range {
            continue;
        }
        let local = Vec2::from_angle(scan.angle(i)) * *r;
        let p = pose.transform_point(local);
        if known
            .iter()
            .any(|(c, rad)| p.distance(*c) <= rad + KNOWN_AGENT_MARGIN)
        {
            *r = scan.max_range;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalPlanner {
    pub mode: GoalMode,
    pub gains: FieldGains,
    pub params: FormationParams,
    pub map: TargetCenteredMap,
    pub plan: Option<FormationPlan>,
    /// Target-frame goal per robot.
    pub local_goals: Vec<Vec2>,
}

impl GoalPlanner {
    pub fn new(
        mode: GoalMode,
        gains: FieldGains,
        params: FormationParams,
        geometry: GridGeometry,
        trail_decay: f64,
        robots: usize,
    ) -> Self {
        Self {
            mode,
            gains,
            params,
            map: TargetCenteredMap::new(geometry, trail_decay, Pose2D::default()),
            plan: None,
            local_goals: vec![Vec2::ZERO; robots],
        }
    }

    /// Folds the live robots' latest scans into the target-centered map.
    pub fn update_map(&mut self, world: &WorldState, scans: &[Option<&LaserScan>]) {
        let mut known: Vec<(Vec2, f64)> =
            vec![(world.target.agent.position(), world.target.agent.radius)];
        known.extend(
            world
                .robots
                .iter()
                .zip(scans)
                .filter(|(_, s)| s.is_some())
                .map(|(a, _)| (a.position(), a.radius)),
        );
        let observations: Vec<(LaserScan, Pose2D)> = scans
            .iter()
            .flatten()
            .map(|s| (mask_known_agents(s, &s.origin_pose, &known), s.origin_pose))
            .collect();
        self.map = build_target_centered_map(&observations, &world.target.agent.pose, &self.map);
    }

    /// Recomputes the formation for the robots flagged in `live` and assigns
    /// it by their current target-frame positions.
    pub fn replan(&mut self, world: &WorldState, live: &[bool]) -> Result<(), FormationError> {
        let ids: Vec<usize> = (0..world.robots.len()).filter(|&i| live[i]).collect();
        if ids.is_empty() {
            return Ok(());
        }
        let target = world.target.agent;
        let plan = match self.mode {
            GoalMode::PotentialField => {
                let motion = TargetMotion::forward(target.twist.v);
                select_formation(&self.map, ids.len(), &motion, &self.gains, &self.params)?
            }
            GoalMode::FixedPosition => fixed_formation(ids.len(), self.gains.ring_radius()),
        };
        let positions: Vec<Vec2> = ids
            .iter()
            .map(|&i| {
                target
                    .pose
                    .inverse_transform_point(world.robots[i].position())
            })
            .collect();
        let assignment = assign_goals(&positions, &plan)?;
        for (k, &i) in ids.iter().enumerate() {
            self.local_goals[i] = plan.points[assignment.pairs[k]];
        }
        self.plan = Some(plan);
        Ok(())
    }

    /// World-frame goals for every robot, facing the target.
    pub fn world_goals(&self, target_pose: &Pose2D) -> Vec<Pose2D> {
        let t = target_pose.position();
        self.local_goals
            .iter()
            .map(|g| {
                let p = target_pose.transform_point(*g);
                Pose2D::new(p.x, p.y, (t - p).angle())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_bodies_are_masked() {
        let mut scan = LaserScan::empty(360, 6.0, Pose2D::default(), 0.0);
        scan.ranges[180] = 1.7; // front face of a disc of radius 0.3 at (2, 0)
        scan.ranges[90] = 2.0; // something unknown
        let out = mask_known_agents(&scan, &Pose2D::default(), &[(Vec2::new(2.0, 0.0), 0.3)]);
        assert_eq!(out.ranges[180], 6.0);
        assert_eq!(out.ranges[90], 2.0);
    }
}
