use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::log::EpisodeLog;
use super::metrics::{compute_metrics, success_rate, Metrics};
use super::runner::{initial_world, run_episode, world_hash, RunConfig};
use super::{EvalError, Strategy};
use crate::world::ScenarioSpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n_robots: usize,
    /// Digest of the initial world before any strategy-specific truncation.
    pub world_hash: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub scenario: String,
    pub strategy: Strategy,
    pub episodes: usize,
    pub mean_following_score: f64,
    pub mean_average_distance: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<Aggregate>,
}

pub const REPORT_HEADER: &str =
    "scenario,n_robots,seed,strategy,following_score,average_distance,success";
pub const AGGREGATE_HEADER: &str =
    "scenario,strategy,episodes,mean_following_score,mean_average_distance,success_rate";

impl ComparisonReport {
    pub fn aggregate(&self, scenario: &str, strategy: Strategy) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.scenario == scenario && a.strategy == strategy)
    }

    /// Per-episode rows followed by a blank line and the aggregate block.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                m.scenario,
                r.n_robots,
                m.seed,
                m.strategy,
                m.following_score,
                m.average_distance,
                u8::from(m.success)
            );
        }
        let _ = writeln!(out, "\n{AGGREGATE_HEADER}");
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                a.scenario,
                a.strategy,
                a.episodes,
                a.mean_following_score,
                a.mean_average_distance,
                a.success_rate
            );
        }
        out
    }
}

/// Every spec × strategy × seed, run in parallel. Seeds replace each spec's
/// own seed, so all strategies face the same initial world per seed.
pub fn run_comparison(
    specs: &[ScenarioSpec],
    strategies: &[Strategy],
    seeds: &[u64],
    config: &RunConfig,
) -> Result<(ComparisonReport, Vec<EpisodeLog>), EvalError> {
    let jobs: Vec<(ScenarioSpec, Strategy)> = specs
        .iter()
        .flat_map(|spec| {
            seeds.iter().flat_map(move |&seed| {
                strategies.iter().map(move |&s| {
                    (
                        ScenarioSpec {
                            seed,
                            ..spec.clone()
                        },
                        s,
                    )
                })
            })
        })
        .collect();
    let results: Vec<(ReportRow, EpisodeLog)> = jobs
        .par_iter()
        .map(|(spec, strategy)| {
            let hash = world_hash(&initial_world(spec, Strategy::PotentialField)?);
            let log = run_episode(spec, *strategy, config)?;
            let metrics = compute_metrics(&log, &config.metrics)?;
            Ok((
                ReportRow {
                    n_robots: log.meta.robot_radii.len(),
                    world_hash: hash,
                    metrics,
                },
                log,
            ))
        })
        .collect::<Result<_, EvalError>>()?;
    let (rows, logs): (Vec<ReportRow>, Vec<EpisodeLog>) = results.into_iter().unzip();

    let mut aggregates = Vec::new();
    for spec in specs {
        let scenario = spec.family.name();
        for &strategy in strategies {
            let ms: Vec<Metrics> = rows
                .iter()
                .filter(|r| r.metrics.scenario == scenario && r.metrics.strategy == strategy)
                .map(|r| r.metrics.clone())
                .collect();
            if ms.is_empty()
                || aggregates
                    .iter()
                    .any(|a: &Aggregate| a.scenario == scenario && a.strategy == strategy)
            {
                continue;
            }
            let k = ms.len() as f64;
            aggregates.push(Aggregate {
                scenario: scenario.to_string(),
                strategy,
                episodes: ms.len(),
                mean_following_score: ms.iter().map(|m| m.following_score).sum::<f64>() / k,
                mean_average_distance: ms.iter().map(|m| m.average_distance).sum::<f64>() / k,
                success_rate: success_rate(&ms),
            });
        }
    }
    Ok((ComparisonReport { rows, aggregates }, logs))
}
