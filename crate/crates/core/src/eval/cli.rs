//! The `followsim` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use super::compare::run_comparison;
use super::log::EpisodeLog;
use super::metrics::{compute_metrics, metrics_json};
use super::render::log_to_svg;
use super::runner::{run_episode, run_episode_with, RunConfig};
use super::{EvalError, Strategy};
use crate::fields::{edt, field_to_pgm};
use crate::formation::plan_to_record;
use crate::geometry::Twist;
use crate::maps::pgm::grid_to_pgm;
use crate::policy::FollowEnv;
use crate::rl::{
    curve_csv, reduced_features, train, FollowTrainEnv, GoalReachEnv, GoalReachParams, Mlp,
    Td3Config,
};
use crate::world::{Family, ScenarioError, ScenarioSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const METRICS_FILE: &str = "metrics.json";
pub const ACTOR_FILE: &str = "actor.bin";
pub const CURVE_FILE: &str = "curve.csv";
pub const REPORT_FILE: &str = "report.csv";

#[derive(Debug, Parser)]
#[command(
    name = "followsim",
    version,
    about = "Multi-robot target following simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one episode and write its log and metrics.
    Run {
        /// Scenario TOML file.
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the seed in the scenario file.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the episode log and metrics.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "potential_field")]
        strategy: Strategy,
        /// Run configuration TOML (env, scripted planner, metrics).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Drive the robots with a trained actor instead of the scripted planner.
        #[arg(long)]
        actor: Option<PathBuf>,
        /// Also dump the final target-centered map, clearance field and formation.
        #[arg(long)]
        maps: bool,
    },
    /// Train a TD3 actor; writes the actor and the learning curve.
    Train {
        #[arg(long, value_enum, default_value_t = Task::GoalReach)]
        task: Task,
        /// Scenario TOML for the follow task.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// TD3 hyperparameters TOML.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for actor.bin and curve.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every strategy over paired seeds of one scenario family.
    Compare {
        /// Scenario family, e.g. corridor or open_random.
        #[arg(long)]
        family: Family,
        /// Number of seeds, starting from `--first-seed`.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, default_value_t = 3)]
        robots: usize,
        /// Comma-separated subset of strategies.
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<Strategy>>,
        /// Run configuration TOML.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for report.csv and plates/.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw an episode log as an SVG plate.
    Render {
        /// Log directory written by `run`.
        #[arg(long)]
        log: PathBuf,
        /// SVG file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute metrics from a stored log.
    Replay {
        /// Log directory written by `run`.
        #[arg(long)]
        log: PathBuf,
        /// Run configuration TOML; metric parameters are read from it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the metrics here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    GoalReach,
    Follow,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Scenario(e) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read_config_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parses a TOML table named `section`, or the whole file if there is none.
fn load_toml<T: DeserializeOwned + Default>(
    path: Option<&Path>,
    section: &str,
) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = read_config_file(path)?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value = match table.get(section) {
        Some(v) => v.clone(),
        None => toml::Value::Table(table),
    };
    T::deserialize(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<ScenarioSpec, CliError> {
    ScenarioSpec::from_toml_str(&read_config_file(path)?)
        .map_err(|e: ScenarioError| CliError::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(runtime)?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn actor_controller(actor: &Mlp) -> impl FnMut(&FollowEnv, usize) -> Twist + '_ {
    move |env, i| {
        // a policy that cannot evaluate stops the robot rather than the run
        reduced_features(env, i)
            .and_then(|x| actor.forward(&x))
            .map(|a| Twist::new(a[0], a[1]))
            .unwrap_or(Twist::ZERO)
    }
}

fn dump_maps(
    spec: &ScenarioSpec,
    config: &RunConfig,
    log: &EpisodeLog,
    out: &Path,
) -> Result<(), CliError> {
    // replay the scripted run up to the logged length to recover the planner state
    let mut env = FollowEnv::from_world(
        super::runner::initial_world(spec, log.meta.strategy)?,
        super::runner::env_config(log.meta.strategy, &config.env),
    )
    .map_err(runtime)?;
    for _ in 0..log.ticks.len() {
        let n = env.world().robots.len();
        let actions: Vec<Twist> = (0..n)
            .map(|i| {
                if env.is_live(i) {
                    super::runner::scripted_action(&env, i, &config.scripted)
                } else {
                    Twist::ZERO
                }
            })
            .collect();
        env.step(&actions).map_err(runtime)?;
    }
    let planner = env.planner();
    write(&out.join("target_map.pgm"), grid_to_pgm(&planner.map.grid))?;
    let (img, range) = field_to_pgm(&edt(&planner.map.grid, 0.5));
    write(&out.join("clearance.pgm"), img)?;
    write(&out.join("clearance.txt"), range)?;
    if let Some(plan) = &planner.plan {
        write(&out.join("formation.txt"), plan_to_record(plan))?;
    }
    Ok(())
}

fn cmd_run(
    scenario: &Path,
    seed: Option<u64>,
    out: &Path,
    strategy: Strategy,
    config: Option<&Path>,
    actor: Option<&Path>,
    maps: bool,
) -> Result<(), CliError> {
    if maps && actor.is_some() {
        return Err(CliError::Config("--maps needs the scripted planner".into()));
    }
    let mut spec = load_scenario(scenario)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let config: RunConfig = load_toml(config, "run")?;
    let log = match actor {
        Some(path) => {
            let bytes =
                fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let actor = Mlp::from_bytes(&bytes)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if actor.n_out() != 2 || actor.n_in() != crate::rl::FEATURE_DIM {
                return Err(CliError::Config(format!(
                    "{}: actor maps {} inputs to {} outputs, need {} to 2",
                    path.display(),
                    actor.n_in(),
                    actor.n_out(),
                    crate::rl::FEATURE_DIM
                )));
            }
            run_episode_with(&spec, strategy, &config, actor_controller(&actor))?
        }
        None => run_episode(&spec, strategy, &config)?,
    };
    let metrics = compute_metrics(&log, &config.metrics)?;
    log.write_dir(out)?;
    write(&out.join(METRICS_FILE), metrics_json(&metrics))?;
    if maps {
        dump_maps(&spec, &config, &log, out)?;
    }
    println!(
        "{} seed {} {}: following score {:.1}, average distance {:.3} m, success {}",
        metrics.scenario,
        metrics.seed,
        metrics.strategy,
        metrics.following_score,
        metrics.average_distance,
        metrics.success
    );
    Ok(())
}

fn cmd_train(
    task: Task,
    scenario: Option<&Path>,
    config: Option<&Path>,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let td3: Td3Config = load_toml(config, "td3")?;
    td3.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let result = match task {
        Task::GoalReach => {
            if scenario.is_some() {
                return Err(CliError::Config(
                    "--scenario applies to the follow task only".into(),
                ));
            }
            train(
                &mut GoalReachEnv::new(GoalReachParams::default()),
                &td3,
                seed,
            )
        }
        Task::Follow => {
            let spec = match scenario {
                Some(p) => load_scenario(p)?,
                None => ScenarioSpec::new(Family::Circle, 2, seed),
            };
            let run: RunConfig = load_toml(config, "run")?;
            train(&mut FollowTrainEnv::new(spec, run.env), &td3, seed)
        }
    }
    .map_err(runtime)?;
    write(&out.join(ACTOR_FILE), result.actor().to_bytes())?;
    write(&out.join(CURVE_FILE), curve_csv(&result.curve))?;
    let last: Vec<f64> = result
        .curve
        .iter()
        .rev()
        .take(50)
        .map(|p| p.episode_return)
        .collect();
    let mean = last.iter().sum::<f64>() / last.len().max(1) as f64;
    println!(
        "{} env steps, {} episodes, mean return over the last {}: {mean:.3}",
        result.env_steps,
        result.curve.len(),
        last.len()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    family: Family,
    seeds: u64,
    first_seed: u64,
    robots: usize,
    strategies: Option<Vec<Strategy>>,
    config: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    if seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let config: RunConfig = load_toml(config, "run")?;
    let strategies = strategies.unwrap_or_else(|| Strategy::ALL.to_vec());
    let seeds: Vec<u64> = (first_seed..first_seed + seeds).collect();
    let spec = ScenarioSpec::new(family, robots, 0);
    let (report, logs) = run_comparison(&[spec], &strategies, &seeds, &config)?;
    write(&out.join(REPORT_FILE), report.to_csv())?;
    for log in &logs {
        let name = format!(
            "{}_{}_seed{}.svg",
            log.meta.scenario.family,
            log.meta.strategy,
            log.seed()
        );
        write(&out.join("plates").join(name), log_to_svg(log))?;
    }
    for a in &report.aggregates {
        println!(
            "{:<16} score {:6.2}  distance {:.3} m  success {:5.1}%",
            a.strategy.name(),
            a.mean_following_score,
            a.mean_average_distance,
            a.success_rate
        );
    }
    Ok(())
}

fn read_log(dir: &Path) -> Result<EpisodeLog, CliError> {
    EpisodeLog::read_dir(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            scenario,
            seed,
            out,
            strategy,
            config,
            actor,
            maps,
        } => cmd_run(
            &scenario,
            seed,
            &out,
            strategy,
            config.as_deref(),
            actor.as_deref(),
            maps,
        ),
        Command::Train {
            task,
            scenario,
            config,
            seed,
            out,
        } => cmd_train(task, scenario.as_deref(), config.as_deref(), seed, &out),
        Command::Compare {
            family,
            seeds,
            first_seed,
            robots,
            strategies,
            config,
            out,
        } => cmd_compare(
            family,
            seeds,
            first_seed,
            robots,
            strategies,
            config.as_deref(),
            &out,
        ),
        Command::Render { log, out } => write(&out, log_to_svg(&read_log(&log)?)),
        Command::Replay { log, config, out } => {
            let config: RunConfig = load_toml(config.as_deref(), "run")?;
            let metrics = compute_metrics(&read_log(&log)?, &config.metrics)?;
            match out {
                Some(path) => write(&path, metrics_json(&metrics)),
                None => {
                    print!("{}", metrics_json(&metrics));
                    Ok(())
                }
            }
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 2 for usage or configuration errors and
/// 3 when the run itself fails.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Config(msg) => eprintln!("config error: {msg}"),
                CliError::Runtime(msg) => eprintln!("error: {msg}"),
            }
            e.code()
        }
    }
}
