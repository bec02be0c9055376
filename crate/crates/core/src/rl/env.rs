use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::RlError;
use crate::geometry::{Pose2D, Twist, TwistLimits, Vec2};
use crate::policy::{scripted_policy, ScriptedParams};
use crate::world::{integrate_unicycle, LaserScan};

#[derive(Debug, Clone, PartialEq)]
pub struct AgentStep {
    pub obs: Vec<f64>,
    pub reward: f64,
    /// No bootstrapping past this step.
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// `None` for agents that were already finished before this step.
    pub agents: Vec<Option<AgentStep>>,
    /// The episode is over (all agents finished or time ran out).
    pub episode_over: bool,
}

/// What the trainer needs from an environment: several agents may act at
/// once, all sharing one policy.
pub trait TrainEnv {
    fn obs_dim(&self) -> usize;
    fn action_box(&self) -> Vec<[f64; 2]>;
    /// Starts a new episode; returns one observation per agent.
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>, RlError>;
    /// One action per agent; actions for finished agents are ignored.
    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome, RlError>;
}

pub(crate) fn twist_box(limits: &TwistLimits) -> Vec<[f64; 2]> {
    vec![[limits.v_min, limits.v_max], [-limits.w_max, limits.w_max]]
}

fn check_actions(actions: &[Vec<f64>], agents: usize, dim: usize) -> Result<(), RlError> {
    if actions.len() != agents || actions.iter().any(|a| a.len() != dim) {
        return Err(RlError::Shape(format!(
            "expected {agents} actions of length {dim}, got {}",
            actions.len()
        )));
    }
    Ok(())
}

/// Single-step bandit: one constant observation, reward `−(a − optimum)²`.
#[derive(Debug, Clone)]
pub struct Bandit {
    pub optimum: f64,
    pub action_range: [f64; 2],
}

impl Default for Bandit {
    fn default() -> Self {
        Self {
            optimum: 0.5,
            action_range: [0.0, 1.0],
        }
    }
}

impl TrainEnv for Bandit {
    fn obs_dim(&self) -> usize {
        1
    }

    fn action_box(&self) -> Vec<[f64; 2]> {
        vec![self.action_range]
    }

    fn reset(&mut self, _rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>, RlError> {
        Ok(vec![vec![1.0]])
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome, RlError> {
        check_actions(actions, 1, 1)?;
        let d = actions[0][0] - self.optimum;
        Ok(StepOutcome {
            agents: vec![Some(AgentStep {
                obs: vec![1.0],
                reward: -d * d,
                terminal: true,
            })],
            episode_over: true,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalReachParams {
    pub dt: f64,
    pub horizon: usize,
    /// Goal distance range at reset, m.
    pub goal_dist: [f64; 2],
    pub arrive_dist: f64,
    pub w_progress: f64,
    pub r_arrive: f64,
    pub limits: TwistLimits,
}

impl Default for GoalReachParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 100,
            goal_dist: [1.5, 4.0],
            arrive_dist: 0.3,
            w_progress: 2.5,
            r_arrive: 10.0,
            limits: TwistLimits::FOLLOWER,
        }
    }
}

/// Reduced move-to-static-goal task: one robot, no obstacles. Features are
/// the goal bearing (as sine and cosine), the goal distance and the robot's
/// own velocity.
#[derive(Debug, Clone)]
pub struct GoalReachEnv {
    pub params: GoalReachParams,
    pose: Pose2D,
    twist: Twist,
    goal: Vec2,
    steps: usize,
    done: bool,
}

impl GoalReachEnv {
    pub fn new(params: GoalReachParams) -> Self {
        Self {
            params,
            pose: Pose2D::default(),
            twist: Twist::ZERO,
            goal: Vec2::new(1.0, 0.0),
            steps: 0,
            done: true,
        }
    }

    pub fn pose(&self) -> Pose2D {
        self.pose
    }

    pub fn goal(&self) -> Vec2 {
        self.goal
    }

    fn features(&self) -> Vec<f64> {
        let rel = self.pose.inverse_transform_point(self.goal);
        let bearing = rel.angle();
        let l = &self.params.limits;
        vec![
            bearing.sin(),
            bearing.cos(),
            rel.norm() / self.params.goal_dist[1],
            self.twist.v / l.v_max,
            self.twist.w / l.w_max,
        ]
    }

    /// Scripted baseline command for the current state.
    pub fn scripted_action(&self, params: &ScriptedParams) -> Vec<f64> {
        let scan = LaserScan::empty(360, 6.0, self.pose, 0.0);
        let goal = Pose2D::new(self.goal.x, self.goal.y, 0.0);
        let cmd = scripted_policy(&self.pose, &goal, &scan, params);
        vec![cmd.v, cmd.w]
    }
}

impl TrainEnv for GoalReachEnv {
    fn obs_dim(&self) -> usize {
        5
    }

    fn action_box(&self) -> Vec<[f64; 2]> {
        twist_box(&self.params.limits)
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>, RlError> {
        let [lo, hi] = self.params.goal_dist;
        self.pose = Pose2D::new(0.0, 0.0, rng.random_range(-PI..PI));
        self.goal = Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(lo..hi);
        self.twist = Twist::ZERO;
        self.steps = 0;
        self.done = false;
        Ok(vec![self.features()])
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome, RlError> {
        check_actions(actions, 1, 2)?;
        if self.done {
            return Err(RlError::Env("step after the episode ended".into()));
        }
        let cmd = Twist::new(actions[0][0], actions[0][1]).clamp_to(&self.params.limits);
        let before = self.pose.position().distance(self.goal);
        self.pose = integrate_unicycle(self.pose, cmd, self.params.dt);
        self.twist = cmd;
        self.steps += 1;
        let after = self.pose.position().distance(self.goal);
        let arrived = after <= self.params.arrive_dist;
        let reward = if arrived {
            self.params.r_arrive
        } else {
            self.params.w_progress * (before - after)
        };
        self.done = arrived || self.steps >= self.params.horizon;
        Ok(StepOutcome {
            agents: vec![Some(AgentStep {
                obs: self.features(),
                reward,
                terminal: arrived,
            })],
            episode_over: self.done,
        })
    }
}

/// Mean episode return of `policy` over `episodes` seeded resets.
pub fn evaluate<E: TrainEnv>(
    env: &mut E,
    episodes: usize,
    seed: u64,
    mut policy: impl FnMut(&E, &[f64]) -> Result<Vec<f64>, RlError>,
) -> Result<f64, RlError> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut obs = env.reset(&mut rng)?;
        let n = obs.len();
        let mut live = vec![true; n];
        loop {
            let actions = obs
                .iter()
                .map(|o| policy(env, o))
                .collect::<Result<Vec<_>, _>>()?;
            let out = env.step(&actions)?;
            for (i, s) in out.agents.into_iter().enumerate() {
                if let (Some(s), true) = (s, live[i]) {
                    total += s.reward / n as f64;
                    live[i] = !s.terminal;
                    obs[i] = s.obs;
                }
            }
            if out.episode_over {
                break;
            }
        }
    }
    Ok(total / episodes as f64)
}
