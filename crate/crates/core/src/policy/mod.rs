//! Per-robot POMDP interface: observations, the two-part reward, the episode
//! transition contract and a scripted local planner.

pub mod env;
pub mod goals;
pub mod observation;
pub mod reward;
pub mod scripted;

pub use env::{env_reset, env_step, EnvConfig, EnvError, FollowEnv, StepRecord, TransitionRecord};
pub use goals::{GoalMode, GoalPlanner};
pub use observation::{build_observation, NormBounds, Observation, RobotHistory};
pub use reward::{reward, DoneReason, RewardParams, RewardTerms, RobotSnapshot};
pub use scripted::{scripted_policy, ScriptedParams};
