//! Episode logs on disk: `trajectory.csv` (all agent states per tick),
//! `robots.csv` (per-robot sensing, goals and status) and `episode.json`
//! (scenario, strategy and the static world).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalError, Strategy};
use crate::geometry::{Pose2D, Twist};
use crate::policy::DoneReason;
use crate::world::trajectory::{
    pedestrian_label, robot_label, write_rows, TrajectoryRow, TRAJECTORY_HEADER,
};
use crate::world::{Agent, Bounds, Obstacle, ScenarioSpec};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const ROBOTS_FILE: &str = "robots.csv";
pub const META_FILE: &str = "episode.json";
pub const ROBOTS_HEADER: &str = "t,robot_id,min_range,goal_x,goal_y,goal_theta,done_reason";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub scenario: ScenarioSpec,
    pub strategy: Strategy,
    pub dt: f64,
    pub horizon: usize,
    pub bounds: Bounds,
    pub obstacles: Vec<Obstacle>,
    pub target_radius: f64,
    pub robot_radii: Vec<f64>,
    pub pedestrian_radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    pub t: f64,
    pub target: Agent,
    pub robots: Vec<Agent>,
    pub pedestrians: Vec<Agent>,
    pub collided: Vec<bool>,
    pub min_range: Vec<f64>,
    pub goals: Vec<Pose2D>,
    /// Status of each robot after this tick.
    pub done: Vec<DoneReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub meta: EpisodeMeta,
    pub ticks: Vec<Tick>,
}

impl EpisodeLog {
    pub fn seed(&self) -> u64 {
        self.meta.scenario.seed
    }

    pub fn trajectory_csv(&self) -> String {
        let mut out = format!("{TRAJECTORY_HEADER}\n");
        for tick in &self.ticks {
            let mut rows = vec![TrajectoryRow {
                t: tick.t,
                agent_id: "target".into(),
                agent: tick.target,
                collided: false,
            }];
            rows.extend(tick.robots.iter().enumerate().map(|(i, a)| TrajectoryRow {
                t: tick.t,
                agent_id: robot_label(i),
                agent: *a,
                collided: tick.collided[i],
            }));
            rows.extend(
                tick.pedestrians
                    .iter()
                    .enumerate()
                    .map(|(i, a)| TrajectoryRow {
                        t: tick.t,
                        agent_id: pedestrian_label(i),
                        agent: *a,
                        collided: false,
                    }),
            );
            write_rows(&mut out, &rows);
        }
        out
    }

    pub fn robots_csv(&self) -> String {
        let mut out = format!("{ROBOTS_HEADER}\n");
        for tick in &self.ticks {
            for i in 0..tick.robots.len() {
                let g = tick.goals[i];
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    tick.t, i, tick.min_range[i], g.x, g.y, g.theta, tick.done[i]
                );
            }
        }
        out
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), EvalError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(TRAJECTORY_FILE), self.trajectory_csv())?;
        fs::write(dir.join(ROBOTS_FILE), self.robots_csv())?;
        let meta = serde_json::to_string_pretty(&self.meta)?;
        fs::write(dir.join(META_FILE), meta + "\n")?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self, EvalError> {
        let meta: EpisodeMeta = serde_json::from_str(&fs::read_to_string(dir.join(META_FILE))?)?;
        let trajectory = fs::read_to_string(dir.join(TRAJECTORY_FILE))?;
        let robots = fs::read_to_string(dir.join(ROBOTS_FILE))?;
        Self::parse(meta, &trajectory, &robots)
    }

    pub fn parse(meta: EpisodeMeta, trajectory: &str, robots: &str) -> Result<Self, EvalError> {
        let n = meta.robot_radii.len();
        let n_ped = meta.pedestrian_radii.len();
        let mut ticks: Vec<Tick> = Vec::new();
        let mut index: BTreeMap<u64, usize> = BTreeMap::new();
        let blank = |t: f64| Tick {
            t,
            target: Agent::new(Pose2D::default(), meta.target_radius),
            robots: meta
                .robot_radii
                .iter()
                .map(|r| Agent::new(Pose2D::default(), *r))
                .collect(),
            pedestrians: meta
                .pedestrian_radii
                .iter()
                .map(|r| Agent::new(Pose2D::default(), *r))
                .collect(),
            collided: vec![false; n],
            min_range: vec![0.0; n],
            goals: vec![Pose2D::default(); n],
            done: vec![DoneReason::Running; n],
        };

        for (lineno, line) in data_lines(trajectory, TRAJECTORY_HEADER)? {
            let bad = || EvalError::Log(format!("{TRAJECTORY_FILE}:{lineno}: `{line}`"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let t = num(f[0])?;
            let k = *index.entry(t.to_bits()).or_insert_with(|| {
                ticks.push(blank(t));
                ticks.len() - 1
            });
            let pose = Pose2D {
                x: num(f[2])?,
                y: num(f[3])?,
                theta: num(f[4])?,
            };
            let twist = Twist::new(num(f[5])?, num(f[6])?);
            let collided = match f[7] {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            };
            let tick = &mut ticks[k];
            let slot = if f[1] == "target" {
                &mut tick.target
            } else if let Some(i) = parse_label(f[1], "robot").filter(|i| *i < n) {
                tick.collided[i] = collided;
                &mut tick.robots[i]
            } else if let Some(i) = parse_label(f[1], "ped").filter(|i| *i < n_ped) {
                &mut tick.pedestrians[i]
            } else {
                return Err(bad());
            };
            slot.pose = pose;
            slot.twist = twist;
        }

        for (lineno, line) in data_lines(robots, ROBOTS_HEADER)? {
            let bad = || EvalError::Log(format!("{ROBOTS_FILE}:{lineno}: `{line}`"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let t = num(f[0])?;
            let k = *index.get(&t.to_bits()).ok_or_else(bad)?;
            let i: usize = f[1].parse().map_err(|_| bad())?;
            if i >= n {
                return Err(bad());
            }
            let tick = &mut ticks[k];
            tick.min_range[i] = num(f[2])?;
            tick.goals[i] = Pose2D {
                x: num(f[3])?,
                y: num(f[4])?,
                theta: num(f[5])?,
            };
            tick.done[i] = parse_reason(f[6]).ok_or_else(bad)?;
        }
        Ok(Self { meta, ticks })
    }
}

fn data_lines<'a>(
    text: &'a str,
    header: &str,
) -> Result<impl Iterator<Item = (usize, &'a str)>, EvalError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(EvalError::Log(format!("missing header `{header}`"))),
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l)))
}

fn parse_label(id: &str, prefix: &str) -> Option<usize> {
    id.strip_prefix(prefix)?.parse().ok()
}

fn parse_reason(s: &str) -> Option<DoneReason> {
    [
        DoneReason::Running,
        DoneReason::Collision,
        DoneReason::Lost,
        DoneReason::Timeout,
    ]
    .into_iter()
    .find(|r| r.name() == s)
}
