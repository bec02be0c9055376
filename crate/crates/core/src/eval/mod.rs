//! Scenario runner, following metrics, strategy comparison and rendering.

pub mod cli;
pub mod compare;
pub mod log;
pub mod metrics;
pub mod render;
pub mod runner;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::EnvError;
use crate::world::ScenarioError;

pub use compare::{run_comparison, ComparisonReport};
pub use log::EpisodeLog;
pub use metrics::{compute_metrics, MetricParams, Metrics};
pub use runner::{run_episode, run_episode_with, RunConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("episode log has no ticks")]
    EmptyLog,
    #[error("malformed log: {0}")]
    Log(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    PotentialField,
    FixedPosition,
    SingleRobot,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::PotentialField,
        Strategy::FixedPosition,
        Strategy::SingleRobot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::PotentialField => "potential_field",
            Strategy::FixedPosition => "fixed_position",
            Strategy::SingleRobot => "single_robot",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}
