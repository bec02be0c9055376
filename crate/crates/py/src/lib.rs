use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use follow_core::eval::log::EpisodeLog;
use follow_core::eval::metrics::Metrics;
use follow_core::eval::render::log_to_svg;
use follow_core::eval::{compute_metrics, run_comparison, run_episode, RunConfig, Strategy};
use follow_core::fields::{edt as edt_field, FieldGains, TargetMotion};
use follow_core::formation::{assign_goals as assign, select_formation as select, FormationPlan};
use follow_core::geometry::{Twist, Vec2};
use follow_core::maps::{GridGeometry, OccupancyGrid, TargetCenteredMap};
use follow_core::policy::{EnvConfig, FollowEnv};
use follow_core::rl::{reduced_features, train, GoalReachEnv, GoalReachParams, Mlp, Td3Config};
use follow_core::world::{Family, ScenarioSpec};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_strategy(name: &str) -> PyResult<Strategy> {
    name.parse().map_err(PyValueError::new_err)
}

/// Scenario description: family, team size and seed.
#[pyclass(name = "Scenario", module = "followsim", skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    spec: ScenarioSpec,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (family, n_robots, seed = 0, n_obstacles = None, n_pedestrians = None))]
    fn new(
        family: &str,
        n_robots: usize,
        seed: u64,
        n_obstacles: Option<usize>,
        n_pedestrians: Option<usize>,
    ) -> PyResult<Self> {
        let family: Family = family.parse().map_err(value_err)?;
        let mut spec = ScenarioSpec::new(family, n_robots, seed);
        if let Some(k) = n_obstacles {
            spec.n_obstacles = k;
        }
        spec.n_pedestrians = n_pedestrians;
        Ok(Self { spec })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            spec: ScenarioSpec::from_toml_str(text).map_err(value_err)?,
        })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.spec.family.name()
    }

    #[getter]
    fn n_robots(&self) -> usize {
        self.spec.n_robots
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.spec.seed
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(family='{}', n_robots={}, seed={})",
            self.spec.family, self.spec.n_robots, self.spec.seed
        )
    }
}

fn metrics_dict<'py>(py: Python<'py>, m: &Metrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scenario", &m.scenario)?;
    d.set_item("seed", m.seed)?;
    d.set_item("strategy", m.strategy.name())?;
    d.set_item("following_score", m.following_score)?;
    d.set_item("average_distance", m.average_distance)?;
    d.set_item("success", m.success)?;
    let per_robot = m
        .per_robot
        .iter()
        .map(|r| {
            let e = PyDict::new(py);
            e.set_item("robot", r.robot)?;
            e.set_item("following_score", r.following_score)?;
            e.set_item("average_distance", r.average_distance)?;
            e.set_item("done_reason", r.done_reason.name())?;
            Ok(e)
        })
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("per_robot", per_robot)?;
    Ok(d)
}

/// A recorded episode.
#[pyclass(name = "Episode", module = "followsim")]
struct PyEpisode {
    log: EpisodeLog,
}

#[pymethods]
impl PyEpisode {
    #[staticmethod]
    fn read(dir: &str) -> PyResult<Self> {
        let log =
            EpisodeLog::read_dir(dir.as_ref()).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(Self { log })
    }

    fn write(&self, dir: &str) -> PyResult<()> {
        self.log
            .write_dir(dir.as_ref())
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = compute_metrics(&self.log, &Default::default()).map_err(value_err)?;
        metrics_dict(py, &m)
    }

    fn trajectory_csv(&self) -> String {
        self.log.trajectory_csv()
    }

    fn svg(&self) -> String {
        log_to_svg(&self.log)
    }

    fn __len__(&self) -> usize {
        self.log.ticks.len()
    }
}

/// Runs one episode with the scripted planner.
#[pyfunction]
#[pyo3(signature = (scenario, strategy = "potential_field"))]
fn run(scenario: PyRef<'_, PyScenario>, strategy: &str) -> PyResult<PyEpisode> {
    let log = run_episode(
        &scenario.spec,
        parse_strategy(strategy)?,
        &RunConfig::default(),
    )
    .map_err(value_err)?;
    Ok(PyEpisode { log })
}

/// Aggregated metrics of every strategy over seeds `0..seeds`.
#[pyfunction]
#[pyo3(signature = (family, seeds, n_robots = 3))]
fn compare<'py>(
    py: Python<'py>,
    family: &str,
    seeds: u64,
    n_robots: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let spec = ScenarioSpec::new(family.parse().map_err(value_err)?, n_robots, 0);
    let seeds: Vec<u64> = (0..seeds).collect();
    let (report, _) = py
        .detach(|| run_comparison(&[spec], &Strategy::ALL, &seeds, &RunConfig::default()))
        .map_err(value_err)?;
    report
        .aggregates
        .iter()
        .map(|a| {
            let d = PyDict::new(py);
            d.set_item("strategy", a.strategy.name())?;
            d.set_item("episodes", a.episodes)?;
            d.set_item("mean_following_score", a.mean_following_score)?;
            d.set_item("mean_average_distance", a.mean_average_distance)?;
            d.set_item("success_rate", a.success_rate)?;
            Ok(d)
        })
        .collect()
}

/// Exact Euclidean distance transform of a row-major occupancy grid, in
/// metres. Cells at or above `threshold` are obstacles.
#[pyfunction]
#[pyo3(signature = (occupancy, resolution = 1.0, threshold = 0.5))]
fn edt(occupancy: Vec<Vec<f64>>, resolution: f64, threshold: f64) -> PyResult<Vec<Vec<f64>>> {
    let height = occupancy.len();
    let width = occupancy.first().map_or(0, Vec::len);
    if width == 0 || occupancy.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err(
            "occupancy must be a non-empty rectangular grid",
        ));
    }
    let geometry = GridGeometry {
        width,
        height,
        resolution,
        origin: Default::default(),
    };
    let mut grid = OccupancyGrid::new(geometry);
    grid.cells = occupancy.concat();
    let field = edt_field(&grid, threshold);
    Ok(field.values.chunks(width).map(<[f64]>::to_vec).collect())
}

/// Formation points around a stationary target, in the target frame.
/// `obstacles` are occupied points in the same frame.
#[pyfunction]
#[pyo3(signature = (n, obstacles = Vec::new()))]
fn select_formation(n: usize, obstacles: Vec<(f64, f64)>) -> PyResult<(Vec<(f64, f64)>, bool)> {
    let mut map = TargetCenteredMap::empty_default();
    for (x, y) in obstacles {
        map.grid.mark(Vec2::new(x, y), 1.0);
    }
    let plan = select(
        &map,
        n,
        &TargetMotion::STATIONARY,
        &FieldGains::default(),
        &Default::default(),
    )
    .map_err(value_err)?;
    Ok((
        plan.points.iter().map(|p| (p.x, p.y)).collect(),
        plan.degraded,
    ))
}

/// Robot-to-point binding: `pairs[robot]` is the point index.
#[pyfunction]
fn assign_goals(
    positions: Vec<(f64, f64)>,
    points: Vec<(f64, f64)>,
) -> PyResult<(Vec<usize>, f64)> {
    let v = |xs: Vec<(f64, f64)>| {
        xs.into_iter()
            .map(|(x, y)| Vec2::new(x, y))
            .collect::<Vec<_>>()
    };
    let points = v(points);
    let plan = FormationPlan {
        n: points.len(),
        costs: vec![0.0; points.len()],
        points,
        degraded: false,
    };
    let a = assign(&v(positions), &plan).map_err(value_err)?;
    Ok((a.pairs, a.total_cost.0))
}

/// A deterministic policy network.
#[pyclass(name = "Actor", module = "followsim")]
struct PyActor {
    mlp: Mlp,
}

#[pymethods]
impl PyActor {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Self::from_bytes(&bytes)
    }

    #[staticmethod]
    fn from_bytes(bytes: &[u8]) -> PyResult<Self> {
        Ok(Self {
            mlp: Mlp::from_bytes(bytes).map_err(value_err)?,
        })
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.mlp.to_bytes()
    }

    fn act(&self, features: Vec<f64>) -> PyResult<Vec<f64>> {
        self.mlp.forward(&features).map_err(value_err)
    }

    #[getter]
    fn n_in(&self) -> usize {
        self.mlp.n_in()
    }

    #[getter]
    fn n_out(&self) -> usize {
        self.mlp.n_out()
    }
}

/// Trains an actor on the move-to-goal task. Returns the actor and the
/// learning curve as `(step, episode_return)` pairs.
#[pyfunction]
#[pyo3(signature = (seed = 0, initial_steps = 1000, epochs = 10, rollout_steps = 1000))]
fn train_goal_reach(
    py: Python<'_>,
    seed: u64,
    initial_steps: usize,
    epochs: usize,
    rollout_steps: usize,
) -> PyResult<(PyActor, Vec<(usize, f64)>)> {
    let config = Td3Config {
        initial_steps,
        epochs,
        rollout_steps,
        ..Td3Config::default()
    };
    let out = py
        .detach(|| {
            train(
                &mut GoalReachEnv::new(GoalReachParams::default()),
                &config,
                seed,
            )
        })
        .map_err(value_err)?;
    let curve = out
        .curve
        .iter()
        .map(|p| (p.step, p.episode_return))
        .collect();
    Ok((
        PyActor {
            mlp: out.agent.actor,
        },
        curve,
    ))
}

/// The multi-robot following environment.
#[pyclass(name = "FollowEnv", module = "followsim", unsendable)]
struct PyFollowEnv {
    env: FollowEnv,
}

#[pymethods]
impl PyFollowEnv {
    #[new]
    fn new(scenario: PyRef<'_, PyScenario>) -> PyResult<Self> {
        Ok(Self {
            env: FollowEnv::reset(&scenario.spec, EnvConfig::default()).map_err(value_err)?,
        })
    }

    #[getter]
    fn n_robots(&self) -> usize {
        self.env.world().robots.len()
    }

    #[getter]
    fn done(&self) -> bool {
        self.env.is_done()
    }

    /// Reduced observation of robot `i`.
    fn features(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.n_robots() {
            return Err(PyValueError::new_err(format!("no robot {i}")));
        }
        reduced_features(&self.env, i).map_err(value_err)
    }

    /// Applies one `(v, w)` command per robot; returns `(robot, reward,
    /// done_reason)` for each robot that was still live.
    fn step(&mut self, actions: Vec<(f64, f64)>) -> PyResult<Vec<(usize, f64, &'static str)>> {
        let cmds: Vec<Twist> = actions.into_iter().map(|(v, w)| Twist::new(v, w)).collect();
        let records = self.env.step(&cmds).map_err(value_err)?;
        Ok(records
            .iter()
            .map(|r| (r.robot, r.reward, r.done_reason.name()))
            .collect())
    }
}

#[pymodule]
fn followsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyEpisode>()?;
    m.add_class::<PyActor>()?;
    m.add_class::<PyFollowEnv>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(edt, m)?)?;
    m.add_function(wrap_pyfunction!(select_formation, m)?)?;
    m.add_function(wrap_pyfunction!(assign_goals, m)?)?;
    m.add_function(wrap_pyfunction!(train_goal_reach, m)?)?;
    Ok(())
}
