//! Desk-scale TD3: a small fully connected actor and twin critics trained
//! from scratch on low-dimensional observations.

pub mod env;
pub mod follow;
pub mod mlp;
pub mod optim;
pub mod replay;
pub mod td3;
pub mod train;

use thiserror::Error;

pub use env::{evaluate, AgentStep, Bandit, GoalReachEnv, GoalReachParams, StepOutcome, TrainEnv};
pub use follow::{reduced_features, FollowTrainEnv, FEATURE_DIM};
pub use mlp::{Activation, Mlp, Trace};
pub use optim::Adam;
pub use replay::{ReplayBuffer, Transition};
pub use td3::{td_target, Td3, Td3Config, UpdateStats};
pub use train::{curve_csv, train, CurvePoint, TrainOutput, CURVE_HEADER};

#[derive(Debug, Error)]
pub enum RlError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite network parameter")]
    NonFinite,
    #[error("replay buffer holds {have} transitions, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("invalid TD3 configuration: {0}")]
    Config(String),
    #[error("malformed actor file: {0}")]
    Format(String),
    #[error("environment: {0}")]
    Env(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
