//! Seeded scenario generators. Every world is a pure function of its
//! [`ScenarioSpec`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Agent, Bounds, Obstacle, Route, Walker, WorldState};
use crate::geometry::{Pose2D, Vec2};

/// Safety expansion used when spacing generated agents (matches the default
/// reward `r′`) plus a margin for one step of motion.
const ROBOT_SPAWN_MARGIN: f64 = 0.2 + 0.2;
const WALKER_SPAWN_MARGIN: f64 = 0.3;
const MAX_ATTEMPTS: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("could not place {what} without collision after {attempts} attempts")]
    Overcrowded { what: String, attempts: usize },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Corridor,
    Circle,
    OpenRandom,
    Passing,
    Crossing,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Corridor,
        Family::Circle,
        Family::OpenRandom,
        Family::Passing,
        Family::Crossing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Corridor => "corridor",
            Family::Circle => "circle",
            Family::OpenRandom => "open_random",
            Family::Passing => "passing",
            Family::Crossing => "crossing",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| ScenarioError::Invalid(format!("unknown family `{s}`")))
    }
}

fn default_corridor_width() -> f64 {
    1.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub family: Family,
    pub n_robots: usize,
    /// Random circular obstacles; only the `open_random` family uses it.
    #[serde(default)]
    pub n_obstacles: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_corridor_width")]
    pub corridor_width: f64,
    /// Crossing/passing walkers; `None` picks the family default.
    #[serde(default)]
    pub n_pedestrians: Option<usize>,
    /// Follower radius range; `None` means every follower has radius 0.3 m.
    #[serde(default)]
    pub radius_range: Option<[f64; 2]>,
}

impl ScenarioSpec {
    pub fn new(family: Family, n_robots: usize, seed: u64) -> Self {
        Self {
            family,
            n_robots,
            n_obstacles: if family == Family::OpenRandom { 20 } else { 0 },
            seed,
            corridor_width: default_corridor_width(),
            n_pedestrians: None,
            radius_range: None,
        }
    }

    pub fn pedestrians(&self) -> usize {
        self.n_pedestrians.unwrap_or(match self.family {
            Family::Passing | Family::Crossing => 2,
            Family::OpenRandom => 3,
            _ => 0,
        })
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_robots == 0 {
            return Err(ScenarioError::Invalid("n_robots must be at least 1".into()));
        }
        if self.family == Family::Corridor
            && !(self.corridor_width > 0.0 && self.corridor_width < HALL_WIDTH)
        {
            return Err(ScenarioError::Invalid(format!(
                "corridor_width must lie in (0, {HALL_WIDTH})"
            )));
        }
        if let Some([lo, hi]) = self.radius_range {
            if !(lo > 0.0 && lo <= hi) {
                return Err(ScenarioError::Invalid(format!(
                    "bad radius range [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

pub const TARGET_RADIUS: f64 = 0.3;
pub const ROBOT_RADIUS: f64 = 0.3;

struct Layout {
    bounds: Bounds,
    obstacles: Vec<Obstacle>,
    target_start: Pose2D,
    target_route: Route,
    /// Followers are sampled in an annulus around the target restricted to
    /// this predicate.
    follower_region: fn(Vec2) -> bool,
    pedestrians: Vec<(Pose2D, Vec<Vec2>)>,
}

fn anywhere(_: Vec2) -> bool {
    true
}

fn left_of_corridor(p: Vec2) -> bool {
    p.x < -2.6
}

fn behind_start(p: Vec2) -> bool {
    p.x < -5.5
}

/// Width of the hallway that contains the corridor family's narrow passage.
pub const HALL_WIDTH: f64 = 3.0;

/// A straight hallway with a narrow passage of `corridor_width` in its middle.
fn corridor_layout(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Layout {
    let bounds = Bounds::new(
        Vec2::new(-9.0, -0.5 * HALL_WIDTH),
        Vec2::new(9.0, 0.5 * HALL_WIDTH),
    );
    let h = 0.5 * spec.corridor_width;
    let (x0, x1) = (-2.0, 2.0);
    let mut obstacles = Vec::new();
    for s in [1.0, -1.0] {
        let y = s * h;
        let far = s * bounds.max.y;
        obstacles.push(Obstacle::Segment {
            a: Vec2::new(x0, y),
            b: Vec2::new(x1, y),
        });
        obstacles.push(Obstacle::Segment {
            a: Vec2::new(x0, y),
            b: Vec2::new(x0, far),
        });
        obstacles.push(Obstacle::Segment {
            a: Vec2::new(x1, y),
            b: Vec2::new(x1, far),
        });
    }
    let target_start = Pose2D::new(
        rng.random_range(-6.2..-5.4),
        rng.random_range(-0.4..0.4),
        rng.random_range(-0.3..0.3),
    );
    Layout {
        bounds,
        obstacles,
        target_start,
        target_route: Route::Waypoints {
            points: vec![Vec2::new(7.0, 0.0), Vec2::new(-6.0, 0.0)],
            next: 0,
        },
        follower_region: left_of_corridor,
        pedestrians: vec![],
    }
}

fn circle_layout(_spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Layout {
    let bounds = Bounds::new(Vec2::new(-8.0, -6.0), Vec2::new(8.0, 6.0));
    // Ten pillars on a 3 m ring with gaps on the x axis.
    let obstacles = (0..10)
        .map(|k| Obstacle::Circle {
            center: Vec2::from_angle((k as f64 + 0.5) * PI / 5.0) * 3.0,
            radius: 0.35,
        })
        .collect();
    let target_start = Pose2D::new(
        rng.random_range(-6.2..-5.6),
        rng.random_range(-0.3..0.3),
        rng.random_range(-0.3..0.3),
    );
    Layout {
        bounds,
        obstacles,
        target_start,
        target_route: Route::Waypoints {
            points: vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(6.5, 0.0),
                Vec2::new(-6.0, 0.0),
            ],
            next: 0,
        },
        follower_region: behind_start_circle,
        pedestrians: vec![],
    }
}

fn behind_start_circle(p: Vec2) -> bool {
    p.x < -4.0
}

fn open_random_layout(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Layout {
    let bounds = Bounds::new(Vec2::new(-8.0, -8.0), Vec2::new(8.0, 8.0));
    // mixed shapes: every third obstacle is a short wall, the rest are discs
    let obstacles = (0..spec.n_obstacles)
        .map(|k| {
            let center = Vec2::new(rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0));
            if k % 3 == 0 {
                let half =
                    Vec2::from_angle(rng.random_range(0.0..PI)) * rng.random_range(0.5..1.25);
                Obstacle::Segment {
                    a: center - half,
                    b: center + half,
                }
            } else {
                Obstacle::Circle {
                    center,
                    radius: rng.random_range(0.2..1.0),
                }
            }
        })
        .collect();
    let target_start = Pose2D::new(
        rng.random_range(-4.0..4.0),
        rng.random_range(-4.0..4.0),
        rng.random_range(-PI..PI),
    );
    // walkers pace between two random points; starts are re-drawn later if blocked
    let pedestrians = (0..spec.pedestrians())
        .map(|_| {
            let mut point = || Vec2::new(rng.random_range(-6.5..6.5), rng.random_range(-6.5..6.5));
            let (a, b) = (point(), point());
            (Pose2D::new(a.x, a.y, (b - a).angle()), vec![b, a])
        })
        .collect();
    Layout {
        bounds,
        obstacles,
        target_start,
        target_route: Route::RandomGoals,
        follower_region: anywhere,
        pedestrians,
    }
}

fn passing_layout(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Layout {
    let bounds = Bounds::new(Vec2::new(-9.0, -4.0), Vec2::new(13.0, 4.0));
    let target_start = Pose2D::new(-5.0, rng.random_range(-0.3..0.3), 0.0);
    let pedestrians = (0..spec.pedestrians())
        .map(|k| {
            let y = rng.random_range(-0.8..0.8);
            let x = 3.0 + 3.0 * k as f64 + rng.random_range(0.0..1.5);
            (
                Pose2D::new(x, y, PI),
                vec![Vec2::new(-8.0, y), Vec2::new(12.0, y)],
            )
        })
        .collect();
    Layout {
        bounds,
        obstacles: vec![],
        target_start,
        target_route: Route::Waypoints {
            points: vec![Vec2::new(11.0, 0.0), Vec2::new(-7.0, 0.0)],
            next: 0,
        },
        follower_region: behind_start,
        pedestrians,
    }
}

fn crossing_layout(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Layout {
    let bounds = Bounds::new(Vec2::new(-9.0, -5.0), Vec2::new(13.0, 5.0));
    let target_start = Pose2D::new(-5.0, rng.random_range(-0.3..0.3), 0.0);
    let pedestrians = (0..spec.pedestrians())
        .map(|k| {
            let x = -1.0 + 3.0 * k as f64 + rng.random_range(0.0..2.0);
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            let y0 = s * rng.random_range(3.0..4.0);
            (
                Pose2D::new(x, y0, -s * PI / 2.0),
                vec![Vec2::new(x, -s * 4.2), Vec2::new(x, s * 4.2)],
            )
        })
        .collect();
    Layout {
        bounds,
        obstacles: vec![],
        target_start,
        target_route: Route::Waypoints {
            points: vec![Vec2::new(11.0, 0.0), Vec2::new(-7.0, 0.0)],
            next: 0,
        },
        follower_region: behind_start,
        pedestrians,
    }
}

/// Builds the initial world for `spec`. Followers and the target get seeded
/// random positions and headings; no agent starts in collision and every
/// follower starts with at least `r + 0.4` m of clearance.
pub fn make_scenario(spec: &ScenarioSpec) -> Result<WorldState, ScenarioError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let layout = match spec.family {
        Family::Corridor => corridor_layout(spec, &mut rng),
        Family::Circle => circle_layout(spec, &mut rng),
        Family::OpenRandom => open_random_layout(spec, &mut rng),
        Family::Passing => passing_layout(spec, &mut rng),
        Family::Crossing => crossing_layout(spec, &mut rng),
    };
    let mut target_route = layout.target_route.clone();
    let mut target = Walker {
        agent: Agent::new(layout.target_start, TARGET_RADIUS),
        goal: layout.target_start.position(),
        route: Route::RandomGoals,
    };

    let mut world = WorldState::new(
        layout.bounds,
        layout.obstacles,
        vec![],
        target.clone(),
        vec![],
        rng.clone(),
    );

    // Random obstacle fields may land on the target; resample its start.
    if spec.family == Family::OpenRandom {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let p = target.agent.position();
            if world.static_clearance(p) >= TARGET_RADIUS + WALKER_SPAWN_MARGIN {
                placed = true;
                break;
            }
            target.agent.pose = Pose2D::new(
                rng.random_range(-6.5..6.5),
                rng.random_range(-6.5..6.5),
                rng.random_range(-PI..PI),
            );
        }
        if !placed {
            return Err(ScenarioError::Overcrowded {
                what: "target".into(),
                attempts: MAX_ATTEMPTS,
            });
        }
    }
    world.target = target.clone();

    for (k, (mut pose, points)) in layout.pedestrians.into_iter().enumerate() {
        let clear =
            |w: &WorldState, p: Vec2| w.clearance(p, None) >= TARGET_RADIUS + WALKER_SPAWN_MARGIN;
        if spec.family == Family::OpenRandom {
            for _ in 0..MAX_ATTEMPTS {
                if clear(&world, pose.position())
                    && pose.position().distance(world.target.agent.position()) > 1.5
                {
                    break;
                }
                pose.x = rng.random_range(-6.5..6.5);
                pose.y = rng.random_range(-6.5..6.5);
            }
        }
        let walker = Walker {
            agent: Agent::new(pose, TARGET_RADIUS),
            goal: points[0],
            route: Route::Waypoints { points, next: 1 },
        };
        if !clear(&world, pose.position()) {
            return Err(ScenarioError::Overcrowded {
                what: format!("pedestrian {k}"),
                attempts: 1,
            });
        }
        world.pedestrians.push(walker);
    }

    let target_pos = world.target.agent.position();
    for k in 0..spec.n_robots {
        let radius = match spec.radius_range {
            Some([lo, hi]) if hi > lo => rng.random_range(lo..=hi),
            Some([lo, _]) => lo,
            None => ROBOT_RADIUS,
        };
        let mut placed = None;
        for attempt in 0..MAX_ATTEMPTS {
            // widen the ring slowly when the neighbourhood is crowded
            let outer = 2.5 + 2.0 * attempt as f64 / MAX_ATTEMPTS as f64;
            let r = rng.random_range(1.0..outer);
            let a = rng.random_range(-PI..PI);
            let p = target_pos + Vec2::from_angle(a) * r;
            let heading = rng.random_range(-PI..PI);
            if !(layout.follower_region)(p) || !world.bounds.contains(p) {
                continue;
            }
            if world.clearance(p, None) >= radius + ROBOT_SPAWN_MARGIN {
                placed = Some(Agent::new(Pose2D::new(p.x, p.y, heading), radius));
                break;
            }
        }
        match placed {
            Some(a) => world.robots.push(a),
            None => {
                return Err(ScenarioError::Overcrowded {
                    what: format!("robot {k}"),
                    attempts: MAX_ATTEMPTS,
                })
            }
        }
    }

    // First target goal comes from its route.
    target.agent = world.target.agent;
    target.route = target_route.clone();
    match &mut target_route {
        Route::Waypoints { points, next } => {
            target.goal = points[*next % points.len()];
            target.route = Route::Waypoints {
                points: points.clone(),
                next: (*next + 1) % points.len(),
            };
        }
        Route::RandomGoals => {
            target.goal =
                super::sample_free_goal(&world.bounds, &world.obstacles, &mut rng, TARGET_RADIUS);
        }
    }
    world.target = target;
    world.collided = vec![false; world.robots.len()];
    world.rng = rng;
    world.refresh_collisions();
    Ok(world)
}

impl ScenarioSpec {
    /// Parses a `[scenario]` table (or a bare table) from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        #[derive(Deserialize)]
        struct Wrapped {
            scenario: ScenarioSpec,
        }
        if let Ok(w) = toml::from_str::<Wrapped>(text) {
            return Ok(w.scenario);
        }
        toml::from_str::<ScenarioSpec>(text).map_err(|e| ScenarioError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::check_collision;

    fn no_initial_collisions(w: &WorldState) -> bool {
        (0..w.robots.len()).all(|i| !check_collision(w, i))
            && !w.disc_collides(
                w.target.agent.position(),
                w.target.agent.radius,
                Some(super::super::AgentId::Target),
            )
    }

    #[test]
    fn deterministic_per_seed() {
        for family in Family::ALL {
            let spec = ScenarioSpec::new(family, 3, 42);
            assert_eq!(make_scenario(&spec).unwrap(), make_scenario(&spec).unwrap());
        }
        let a = make_scenario(&ScenarioSpec::new(Family::OpenRandom, 3, 1)).unwrap();
        let b = make_scenario(&ScenarioSpec::new(Family::OpenRandom, 3, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn corridor_walls_are_width_apart() {
        let w = make_scenario(&ScenarioSpec::new(Family::Corridor, 3, 5)).unwrap();
        let ys: Vec<f64> = w
            .obstacles
            .iter()
            .filter_map(|o| match o {
                Obstacle::Segment { a, b } if a.y == b.y => Some(a.y),
                _ => None,
            })
            .collect();
        assert_eq!(ys.len(), 2);
        assert_eq!((ys[0] - ys[1]).abs(), 1.2);
    }

    #[test]
    fn open_random_sampling_audit() {
        for seed in 0..50 {
            let mut spec = ScenarioSpec::new(Family::OpenRandom, 3, seed);
            spec.n_obstacles = 10;
            let w = make_scenario(&spec).unwrap();
            assert!(no_initial_collisions(&w), "seed {seed}");
        }
    }

    #[test]
    fn every_family_spawns_clean() {
        for family in Family::ALL {
            for seed in 0..20 {
                let w = make_scenario(&ScenarioSpec::new(family, 3, seed)).unwrap();
                assert!(no_initial_collisions(&w), "{family} seed {seed}");
                for (i, r) in w.robots.iter().enumerate() {
                    let c = w.clearance(r.position(), Some(super::super::AgentId::Robot(i)));
                    assert!(
                        c >= r.radius + ROBOT_SPAWN_MARGIN - 1e-12,
                        "{family} seed {seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn overcrowded_is_an_error() {
        let mut spec = ScenarioSpec::new(Family::OpenRandom, 2, 3);
        spec.n_obstacles = 3000;
        assert!(matches!(
            make_scenario(&spec),
            Err(ScenarioError::Overcrowded { .. })
        ));
        let bad = ScenarioSpec::new(Family::Corridor, 0, 3);
        assert!(matches!(
            make_scenario(&bad),
            Err(ScenarioError::Invalid(_))
        ));
    }

    #[test]
    fn radius_range_is_respected() {
        let mut spec = ScenarioSpec::new(Family::OpenRandom, 4, 9);
        spec.radius_range = Some([0.2, 0.35]);
        let w = make_scenario(&spec).unwrap();
        assert!(w.robots.iter().all(|r| (0.2..=0.35).contains(&r.radius)));
    }

    #[test]
    fn parses_toml() {
        let text =
            "[scenario]\nfamily = \"corridor\"\nn_robots = 3\nseed = 4\ncorridor_width = 1.0\n";
        let spec = ScenarioSpec::from_toml_str(text).unwrap();
        assert_eq!(spec.family, Family::Corridor);
        assert_eq!(spec.corridor_width, 1.0);
        assert!(ScenarioSpec::from_toml_str("family = \"moon\"\nn_robots = 1").is_err());
    }
}
