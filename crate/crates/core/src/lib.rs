//! Multi-robot target following in 2D.
//!
//! The crate covers the whole pipeline: a deterministic lidar world
//! ([`world`]), ego-motion compensated obstacle maps ([`maps`]), potential
//! fields over a target-centered grid ([`fields`]), iterative formation
//! selection and goal assignment ([`formation`]), the per-robot POMDP
//! interface and scripted planner ([`policy`]), a small TD3 learner ([`rl`])
//! and the evaluation harness behind the `followsim` binary ([`eval`]).

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eval;
pub mod fields;
pub mod formation;
pub mod geometry;
pub mod maps;
pub mod policy;
pub mod rl;
pub mod world;
