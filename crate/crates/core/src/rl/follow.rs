use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::env::{twist_box, AgentStep, StepOutcome, TrainEnv};
use super::RlError;
use crate::geometry::{Twist, TwistLimits, Vec2};
use crate::policy::{DoneReason, EnvConfig, FollowEnv};
use crate::world::ScenarioSpec;

pub const SECTORS: usize = 16;
/// goal bearing (2) + goal distance + target relative velocity (2) + own
/// twist (2) + scan sectors + stacked-map sectors
pub const FEATURE_DIM: usize = 7 + 2 * SECTORS;

fn sector_of(angle: f64) -> usize {
    let s = ((angle + PI) / (2.0 * PI) * SECTORS as f64).floor() as isize;
    s.clamp(0, SECTORS as isize - 1) as usize
}

/// Low-dimensional observation of robot `i`: goal bearing and distance,
/// target velocity relative to the robot, own twist, and per-sector minimum
/// obstacle distance from the current scan and from the stacked scan map.
/// Distances are divided by the lidar range, velocities by the twist limits.
pub fn reduced_features(env: &FollowEnv, i: usize) -> Result<Vec<f64>, RlError> {
    let world = env.world();
    let robot = &world.robots[i];
    let limits = TwistLimits::FOLLOWER;
    let range = env.config.lidar.max_range;

    let goal = robot
        .pose
        .inverse_transform_point(env.goals()[i].position());
    let bearing = goal.angle();

    let heading = |theta: f64, v: f64| Vec2::from_angle(theta) * v;
    let target = &world.target.agent;
    let rel_v =
        heading(target.pose.theta, target.twist.v) - heading(robot.pose.theta, robot.twist.v);
    let rel_v = rel_v.rotate(-robot.pose.theta);

    let mut out = vec![
        bearing.sin(),
        bearing.cos(),
        (goal.norm() / range).min(1.0),
        rel_v.x / limits.v_max,
        rel_v.y / limits.v_max,
        robot.twist.v / limits.v_max,
        robot.twist.w / limits.w_max,
    ];

    let scan = env.latest_scan(i);
    let mut scan_min = [range; SECTORS];
    for (k, r) in scan.ranges.iter().enumerate() {
        let s = sector_of(scan.angle(k));
        scan_min[s] = scan_min[s].min(*r);
    }
    out.extend(scan_min.iter().map(|r| r / range));

    let stacked = env
        .observe(i)
        .map_err(|e| RlError::Env(e.to_string()))?
        .o_l
        .max_projection();
    let mut map_min = [range; SECTORS];
    for idx in stacked.occupied(0.5) {
        let p = stacked.geometry.center_of_index(idx);
        let s = sector_of(p.angle());
        map_min[s] = map_min[s].min(p.norm());
    }
    out.extend(map_min.iter().map(|r| r / range));
    Ok(out)
}

/// The multi-robot following task behind [`TrainEnv`]: every robot is an
/// agent of the shared policy. Each reset draws a fresh scenario seed.
#[derive(Debug, Clone)]
pub struct FollowTrainEnv {
    pub spec: ScenarioSpec,
    pub config: EnvConfig,
    env: Option<FollowEnv>,
}

impl FollowTrainEnv {
    pub fn new(spec: ScenarioSpec, config: EnvConfig) -> Self {
        Self {
            spec,
            config,
            env: None,
        }
    }

    pub fn inner(&self) -> Option<&FollowEnv> {
        self.env.as_ref()
    }
}

impl TrainEnv for FollowTrainEnv {
    fn obs_dim(&self) -> usize {
        FEATURE_DIM
    }

    fn action_box(&self) -> Vec<[f64; 2]> {
        twist_box(&TwistLimits::FOLLOWER)
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>, RlError> {
        let spec = ScenarioSpec {
            seed: rng.random(),
            ..self.spec.clone()
        };
        let env = FollowEnv::reset(&spec, self.config).map_err(|e| RlError::Env(e.to_string()))?;
        let obs = (0..env.world().robots.len())
            .map(|i| reduced_features(&env, i))
            .collect::<Result<_, _>>()?;
        self.env = Some(env);
        Ok(obs)
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome, RlError> {
        let env = self
            .env
            .as_mut()
            .ok_or_else(|| RlError::Env("step before reset".into()))?;
        let n = env.world().robots.len();
        if actions.len() != n || actions.iter().any(|a| a.len() != 2) {
            return Err(RlError::Shape(format!(
                "expected {n} two-dimensional actions"
            )));
        }
        let cmds: Vec<Twist> = actions.iter().map(|a| Twist::new(a[0], a[1])).collect();
        let records = env.step(&cmds).map_err(|e| RlError::Env(e.to_string()))?;
        let mut agents = vec![None; n];
        for r in records {
            agents[r.robot] = Some(AgentStep {
                obs: reduced_features(env, r.robot)?,
                reward: r.reward,
                terminal: matches!(r.done_reason, DoneReason::Collision | DoneReason::Lost),
            });
        }
        Ok(StepOutcome {
            agents,
            episode_over: env.is_done(),
        })
    }
}
