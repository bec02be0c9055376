use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::log::{EpisodeLog, EpisodeMeta, Tick};
use super::metrics::MetricParams;
use super::{EvalError, Strategy};
use crate::geometry::Twist;
use crate::policy::{scripted_policy, EnvConfig, FollowEnv, GoalMode, ScriptedParams};
use crate::world::{make_scenario, Obstacle, ScenarioSpec, WorldState};

/// Everything an evaluation run can be configured with.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub scripted: ScriptedParams,
    pub metrics: MetricParams,
}

/// Initial world for `strategy`: single-robot runs keep only robot 0 of the
/// generated team so that paired seeds share the same layout.
pub fn initial_world(spec: &ScenarioSpec, strategy: Strategy) -> Result<WorldState, EvalError> {
    let mut world = make_scenario(spec)?;
    if strategy == Strategy::SingleRobot {
        world.robots.truncate(1);
        world.collided.truncate(1);
    }
    Ok(world)
}

/// Stable digest of the static layout and every agent's initial state.
pub fn world_hash(world: &WorldState) -> u64 {
    let mut h = DefaultHasher::new();
    let mut put = |x: f64| x.to_bits().hash(&mut h);
    for b in [world.bounds.min, world.bounds.max] {
        put(b.x);
        put(b.y);
    }
    for o in &world.obstacles {
        match *o {
            Obstacle::Circle { center, radius } => {
                [center.x, center.y, radius].into_iter().for_each(&mut put)
            }
            Obstacle::Segment { a, b } => [a.x, a.y, b.x, b.y].into_iter().for_each(&mut put),
        }
    }
    let agents = std::iter::once(&world.target.agent)
        .chain(&world.robots)
        .chain(world.pedestrians.iter().map(|p| &p.agent));
    for a in agents {
        [
            a.pose.x,
            a.pose.y,
            a.pose.theta,
            a.twist.v,
            a.twist.w,
            a.radius,
        ]
        .into_iter()
        .for_each(&mut put);
    }
    put(world.time);
    h.finish()
}

pub(crate) fn env_config(strategy: Strategy, base: &EnvConfig) -> EnvConfig {
    EnvConfig {
        goal_mode: match strategy {
            Strategy::FixedPosition => GoalMode::FixedPosition,
            Strategy::PotentialField | Strategy::SingleRobot => GoalMode::PotentialField,
        },
        ..*base
    }
}

fn record_tick(env: &FollowEnv) -> Tick {
    let w = env.world();
    Tick {
        t: w.time,
        target: w.target.agent,
        robots: w.robots.clone(),
        pedestrians: w.pedestrians.iter().map(|p| p.agent).collect(),
        collided: w.collided.clone(),
        min_range: (0..w.robots.len())
            .map(|i| env.latest_scan(i).min_range())
            .collect(),
        goals: env.goals().to_vec(),
        done: env.status().to_vec(),
    }
}

/// Runs one episode, asking `controller` for each live robot's command.
pub fn run_episode_with(
    spec: &ScenarioSpec,
    strategy: Strategy,
    config: &RunConfig,
    mut controller: impl FnMut(&FollowEnv, usize) -> Twist,
) -> Result<EpisodeLog, EvalError> {
    let world = initial_world(spec, strategy)?;
    let meta = EpisodeMeta {
        scenario: spec.clone(),
        strategy,
        dt: config.env.dt,
        horizon: config.env.horizon,
        bounds: world.bounds,
        obstacles: world.obstacles.clone(),
        target_radius: world.target.agent.radius,
        robot_radii: world.robots.iter().map(|r| r.radius).collect(),
        pedestrian_radii: world.pedestrians.iter().map(|p| p.agent.radius).collect(),
    };
    let mut env = FollowEnv::from_world(world, env_config(strategy, &config.env))?;
    let mut ticks = Vec::with_capacity(config.env.horizon);
    while !env.is_done() {
        let n = env.world().robots.len();
        let actions: Vec<Twist> = (0..n)
            .map(|i| {
                if env.is_live(i) {
                    controller(&env, i)
                } else {
                    Twist::ZERO
                }
            })
            .collect();
        env.step(&actions)?;
        ticks.push(record_tick(&env));
    }
    Ok(EpisodeLog { meta, ticks })
}

/// Scripted command for robot `i` toward its current goal.
pub fn scripted_action(env: &FollowEnv, i: usize, params: &ScriptedParams) -> Twist {
    scripted_policy(
        &env.world().robots[i].pose,
        &env.goals()[i],
        env.latest_scan(i),
        params,
    )
}

/// Runs one episode with the scripted planner on every robot.
pub fn run_episode(
    spec: &ScenarioSpec,
    strategy: Strategy,
    config: &RunConfig,
) -> Result<EpisodeLog, EvalError> {
    run_episode_with(spec, strategy, config, |env, i| {
        scripted_action(env, i, &config.scripted)
    })
}
