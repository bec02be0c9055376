//! Trajectory log rows: `t,agent_id,x,y,theta,v,w,collided`.

use std::fmt::Write as _;

use super::{Agent, WorldState};

pub const TRAJECTORY_HEADER: &str = "t,agent_id,x,y,theta,v,w,collided";

/// One logged agent state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub agent_id: String,
    pub agent: Agent,
    pub collided: bool,
}

pub fn robot_label(i: usize) -> String {
    format!("robot{i}")
}

pub fn pedestrian_label(i: usize) -> String {
    format!("ped{i}")
}

/// Rows for every agent in the world, target first.
pub fn world_rows(world: &WorldState) -> Vec<TrajectoryRow> {
    let mut rows = vec![TrajectoryRow {
        t: world.time,
        agent_id: "target".into(),
        agent: world.target.agent,
        collided: false,
    }];
    rows.extend(world.robots.iter().enumerate().map(|(i, a)| TrajectoryRow {
        t: world.time,
        agent_id: robot_label(i),
        agent: *a,
        collided: world.collided[i],
    }));
    rows.extend(
        world
            .pedestrians
            .iter()
            .enumerate()
            .map(|(i, p)| TrajectoryRow {
                t: world.time,
                agent_id: pedestrian_label(i),
                agent: p.agent,
                collided: false,
            }),
    );
    rows
}

/// Appends rows as CSV lines. Floats use Rust's shortest round-trip format,
/// so parsing a line back yields bit-identical values.
pub fn write_rows(out: &mut String, rows: &[TrajectoryRow]) {
    for r in rows {
        let p = r.agent.pose;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.agent_id,
            p.x,
            p.y,
            p.theta,
            r.agent.twist.v,
            r.agent.twist.w,
            u8::from(r.collided)
        );
    }
}
