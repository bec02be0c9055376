use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::goals::{GoalMode, GoalPlanner};
use super::observation::{build_observation, NormBounds, Observation, RobotHistory};
use super::reward::{reward, DoneReason, RewardParams, RewardTerms, RobotSnapshot};
use crate::fields::FieldGains;
use crate::formation::{FormationError, FormationParams};
use crate::geometry::{Pose2D, Twist};
use crate::maps::{GridGeometry, MapError};
use crate::world::{
    cast_scan, make_scenario, step_world, AgentId, LaserScan, LidarConfig, ScenarioError,
    ScenarioSpec, WorldError, WorldState, DEFAULT_DT,
};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Formation(#[from] FormationError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("episode already finished")]
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub dt: f64,
    /// Episode length in steps.
    pub horizon: usize,
    pub reward: RewardParams,
    pub norm: NormBounds,
    pub lidar: LidarConfig,
    pub goal_mode: GoalMode,
    /// Formation refresh period, steps.
    pub goal_period: usize,
    pub gains: FieldGains,
    pub formation: FormationParams,
    pub trail_decay: f64,
    #[serde(skip, default = "GridGeometry::local_default")]
    pub local_geometry: GridGeometry,
    #[serde(skip, default = "GridGeometry::target_default")]
    pub target_geometry: GridGeometry,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            horizon: 300,
            reward: RewardParams::default(),
            norm: NormBounds::default(),
            lidar: LidarConfig::default(),
            goal_mode: GoalMode::PotentialField,
            goal_period: 5,
            gains: FieldGains::default(),
            formation: FormationParams::default(),
            trail_decay: 0.9,
            local_geometry: GridGeometry::local_default(),
            target_geometry: GridGeometry::target_default(),
        }
    }
}

/// Per-robot outcome of one step, without observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub robot: usize,
    pub action: Twist,
    pub terms: RewardTerms,
    pub reward: f64,
    pub done_reason: DoneReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub robot: usize,
    pub s: Observation,
    pub a: Twist,
    pub s_next: Observation,
    pub reward: f64,
    pub done: bool,
    pub done_reason: DoneReason,
}

/// Multi-robot following episode: world, sensor histories, team goals and
/// per-robot termination.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowEnv {
    pub config: EnvConfig,
    world: WorldState,
    histories: Vec<RobotHistory>,
    planner: GoalPlanner,
    goals: Vec<Pose2D>,
    status: Vec<DoneReason>,
    arrival_open: Vec<bool>,
    steps: usize,
}

impl FollowEnv {
    pub fn reset(spec: &ScenarioSpec, config: EnvConfig) -> Result<Self, EnvError> {
        Self::from_world(make_scenario(spec)?, config)
    }

    pub fn from_world(world: WorldState, config: EnvConfig) -> Result<Self, EnvError> {
        let n = world.robots.len();
        let target = world.target.agent.position();
        let histories = (0..n)
            .map(|i| {
                let scan = robot_scan(&world, i, &config.lidar);
                RobotHistory::seeded(scan, world.robots[i].pose, target, config.dt)
            })
            .collect();
        let planner = GoalPlanner::new(
            config.goal_mode,
            config.gains,
            config.formation,
            config.target_geometry,
            config.trail_decay,
            n,
        );
        let mut env = Self {
            config,
            world,
            histories,
            planner,
            goals: vec![],
            status: vec![DoneReason::Running; n],
            arrival_open: vec![true; n],
            steps: 0,
        };
        env.refresh_goals(true)?;
        Ok(env)
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn goals(&self) -> &[Pose2D] {
        &self.goals
    }

    pub fn status(&self) -> &[DoneReason] {
        &self.status
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn planner(&self) -> &GoalPlanner {
        &self.planner
    }

    pub fn is_live(&self, i: usize) -> bool {
        !self.status[i].is_done()
    }

    pub fn is_done(&self) -> bool {
        self.status.iter().all(|s| s.is_done())
    }

    pub fn latest_scan(&self, i: usize) -> &LaserScan {
        self.histories[i].latest_scan()
    }

    pub fn history(&self, i: usize) -> &RobotHistory {
        &self.histories[i]
    }

    pub fn observe(&self, i: usize) -> Result<Observation, EnvError> {
        let robot = &self.world.robots[i];
        Ok(build_observation(
            &robot.pose,
            &robot.twist,
            &self.histories[i],
            self.goals[i].position(),
            &self.config.norm,
            self.config.local_geometry,
        )?)
    }

    pub fn observations(&self) -> Result<Vec<Observation>, EnvError> {
        (0..self.world.robots.len())
            .map(|i| self.observe(i))
            .collect()
    }

    fn snapshot(&self, i: usize) -> RobotSnapshot {
        RobotSnapshot {
            position: self.world.robots[i].position(),
            goal: self.goals[i].position(),
            target: self.world.target.agent.position(),
            min_range: self.latest_scan(i).min_range(),
            collided: self.world.collided[i],
        }
    }

    fn refresh_goals(&mut self, replan: bool) -> Result<(), EnvError> {
        let live: Vec<bool> = (0..self.status.len()).map(|i| self.is_live(i)).collect();
        let scans: Vec<Option<&LaserScan>> = self
            .histories
            .iter()
            .zip(&live)
            .map(|(h, l)| l.then(|| h.latest_scan()))
            .collect();
        self.planner.update_map(&self.world, &scans);
        if replan {
            self.planner.replan(&self.world, &live)?;
            self.arrival_open.iter_mut().for_each(|a| *a = true);
        }
        self.goals = self.planner.world_goals(&self.world.target.agent.pose);
        Ok(())
    }

    /// Advances one tick. `actions` holds one command per robot; finished
    /// robots get a zero command regardless. Returns one record per robot
    /// that was live before the step.
    pub fn step(&mut self, actions: &[Twist]) -> Result<Vec<StepRecord>, EnvError> {
        let n = self.world.robots.len();
        if actions.len() != n {
            return Err(EnvError::ActionCount {
                expected: n,
                got: actions.len(),
            });
        }
        if self.is_done() {
            return Err(EnvError::Finished);
        }
        let live: Vec<usize> = (0..n).filter(|&i| self.is_live(i)).collect();
        let cmds: Vec<Twist> = (0..n)
            .map(|i| {
                if self.is_live(i) {
                    actions[i]
                } else {
                    Twist::ZERO
                }
            })
            .collect();
        let prev: Vec<RobotSnapshot> = (0..n).map(|i| self.snapshot(i)).collect();

        self.world = step_world(&self.world, &cmds, self.config.dt)?;
        self.steps += 1;
        let target = self.world.target.agent.position();
        for &i in &live {
            let scan = robot_scan(&self.world, i, &self.config.lidar);
            self.histories[i].push(scan, self.world.robots[i].pose, target);
        }
        let cadence = self.config.goal_period.max(1);
        self.refresh_goals(self.steps.is_multiple_of(cadence))?;

        let mut records = Vec::with_capacity(live.len());
        for i in live {
            let curr = self.snapshot(i);
            let mut terms = reward(&prev[i], &curr, &self.config.reward, self.arrival_open[i]);
            if terms.arrived {
                self.arrival_open[i] = false;
            }
            if terms.reason == DoneReason::Running && self.steps >= self.config.horizon {
                terms.reason = DoneReason::Timeout;
            }
            self.status[i] = terms.reason;
            records.push(StepRecord {
                robot: i,
                action: cmds[i],
                terms,
                reward: terms.total,
                done_reason: terms.reason,
            });
        }
        Ok(records)
    }

    /// [`FollowEnv::step`] with full observations before and after.
    pub fn step_transitions(
        &mut self,
        actions: &[Twist],
    ) -> Result<Vec<TransitionRecord>, EnvError> {
        let before: Vec<Option<Observation>> = (0..self.world.robots.len())
            .map(|i| self.is_live(i).then(|| self.observe(i)).transpose())
            .collect::<Result<_, _>>()?;
        let records = self.step(actions)?;
        records
            .into_iter()
            .map(|r| {
                Ok(TransitionRecord {
                    robot: r.robot,
                    s: before[r.robot]
                        .clone()
                        .expect("record only for live robots"),
                    a: r.action,
                    s_next: self.observe(r.robot)?,
                    reward: r.reward,
                    done: r.done_reason.is_done(),
                    done_reason: r.done_reason,
                })
            })
            .collect()
    }
}

fn robot_scan(world: &WorldState, i: usize, lidar: &LidarConfig) -> LaserScan {
    cast_scan(
        world,
        &world.robots[i].pose,
        lidar.beams,
        lidar.max_range,
        Some(AgentId::Robot(i)),
    )
}

pub fn env_reset(
    spec: &ScenarioSpec,
    config: EnvConfig,
) -> Result<(FollowEnv, Vec<Observation>), EnvError> {
    let env = FollowEnv::reset(spec, config)?;
    let obs = env.observations()?;
    Ok((env, obs))
}

pub fn env_step(
    env: &FollowEnv,
    actions: &[Twist],
) -> Result<(FollowEnv, Vec<TransitionRecord>), EnvError> {
    let mut next = env.clone();
    let records = next.step_transitions(actions)?;
    Ok((next, records))
}

/// Binary transition log: each record is a little-endian `u32` payload length
/// followed by the payload `robot:u32, done_reason:u8, a.v, a.w, reward,
/// |s|:u32, s..., |s'|:u32, s'...` with all reals as `f64`.
pub fn write_transition_log<W: Write>(out: &mut W, records: &[TransitionRecord]) -> io::Result<()> {
    for r in records {
        let s = r.s.flatten();
        let s2 = r.s_next.flatten();
        let mut payload = Vec::with_capacity(4 + 1 + 24 + 8 + 8 * (s.len() + s2.len()));
        payload.extend((r.robot as u32).to_le_bytes());
        payload.push(r.done_reason.code());
        for x in [r.a.v, r.a.w, r.reward] {
            payload.extend(x.to_le_bytes());
        }
        for v in [&s, &s2] {
            payload.extend((v.len() as u32).to_le_bytes());
            for x in v.iter() {
                payload.extend(x.to_le_bytes());
            }
        }
        out.write_all(&(payload.len() as u32).to_le_bytes())?;
        out.write_all(&payload)?;
    }
    Ok(())
}

pub const TRANSITION_CSV_HEADER: &str = "robot,v,w,reward,done,done_reason";

/// CSV mirror of the binary log, without the observation vectors.
pub fn transition_csv(records: &[TransitionRecord]) -> String {
    let mut out = format!("{TRANSITION_CSV_HEADER}\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.robot, r.a.v, r.a.w, r.reward, r.done as u8, r.done_reason
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Family;

    #[test]
    fn reset_is_deterministic() {
        let spec = ScenarioSpec::new(Family::OpenRandom, 3, 11);
        let (a, oa) = env_reset(&spec, EnvConfig::default()).unwrap();
        let (b, ob) = env_reset(&spec, EnvConfig::default()).unwrap();
        assert_eq!(oa.len(), 3);
        assert_eq!(oa, ob);
        assert_eq!(a.goals(), b.goals());
    }

    #[test]
    fn action_count_checked() {
        let mut env = FollowEnv::reset(
            &ScenarioSpec::new(Family::Corridor, 2, 1),
            EnvConfig::default(),
        )
        .unwrap();
        assert!(matches!(
            env.step(&[Twist::ZERO]),
            Err(EnvError::ActionCount {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn idle_episode_times_out_once() {
        let config = EnvConfig {
            horizon: 20,
            ..Default::default()
        };
        let mut env = FollowEnv::reset(&ScenarioSpec::new(Family::Circle, 2, 3), config).unwrap();
        let mut terminal = vec![0; 2];
        let mut steps = 0;
        while !env.is_done() {
            for r in env.step(&[Twist::ZERO; 2]).unwrap() {
                if r.done_reason.is_done() {
                    terminal[r.robot] += 1;
                }
            }
            steps += 1;
        }
        assert_eq!(terminal, vec![1, 1]);
        assert!(steps <= 20);
        assert!(matches!(
            env.step(&[Twist::ZERO; 2]),
            Err(EnvError::Finished)
        ));
    }

    #[test]
    fn transition_log_layout() {
        let spec = ScenarioSpec::new(Family::OpenRandom, 1, 2);
        let (env, _) = env_reset(&spec, EnvConfig::default()).unwrap();
        let (_, recs) = env_step(&env, &[Twist::new(0.2, 0.0)]).unwrap();
        let mut buf = vec![];
        write_transition_log(&mut buf, &recs).unwrap();
        let len = u32::from_le_bytes(buf[..4].try_into().unwrap()) as usize;
        assert_eq!(buf.len(), 4 + len);
        let csv = transition_csv(&recs);
        assert_eq!(csv.lines().count(), 2);
    }
}
