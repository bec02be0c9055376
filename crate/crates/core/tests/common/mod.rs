//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use follow_core::geometry::{
    point_segment_distance, segments_properly_intersect, Pose2D, Twist, Vec2,
};
use follow_core::maps::{stack_scans, GridGeometry, OccupancyGrid};
use follow_core::rl::Mlp;
use follow_core::world::{
    cast_scan, integrate_unicycle, make_scenario, AgentId, Family, Obstacle, ScenarioSpec,
    WorldState,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Distance from every cell to the nearest occupied cell by exhaustive
/// search, in cells. Empty grids get `+inf`.
pub fn brute_edt(width: usize, height: usize, occupied: &[bool]) -> Vec<f64> {
    let occ: Vec<(i64, i64)> = (0..width * height)
        .filter(|&k| occupied[k])
        .map(|k| ((k % width) as i64, (k / width) as i64))
        .collect();
    (0..width * height)
        .map(|k| {
            let (x, y) = ((k % width) as i64, (k / width) as i64);
            occ.iter()
                .map(|&(a, b)| (((x - a).pow(2) + (y - b).pow(2)) as f64).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn random_grid(rng: &mut ChaCha8Rng, max_side: usize) -> OccupancyGrid {
    let width = rng.random_range(1..=max_side);
    let height = rng.random_range(1..=max_side);
    let density = rng.random_range(0.0..0.3);
    let mut grid = OccupancyGrid::new(GridGeometry {
        width,
        height,
        resolution: 1.0,
        origin: Pose2D::default(),
    });
    for c in grid.cells.iter_mut() {
        *c = if rng.random_bool(density) { 1.0 } else { 0.0 };
    }
    grid
}

/// `k_r/d + k_a d²` minimized by a 1e-4 m scan over (0, 5] m.
pub fn scanned_ring_radius(k_r: f64, k_a: f64) -> f64 {
    (1..=50_000)
        .map(|i| i as f64 * 1e-4)
        .map(|d| (d, k_r / d + k_a * d * d))
        .fold(
            (0.0, f64::INFINITY),
            |best, (d, c)| if c < best.1 { (d, c) } else { best },
        )
        .0
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn pair_cost(pairs: &[usize], robots: &[Vec2], points: &[Vec2]) -> f64 {
    pairs
        .iter()
        .enumerate()
        .map(|(r, &p)| (robots[r] - points[p]).norm())
        .sum()
}

pub fn brute_force_assignment(robots: &[Vec2], points: &[Vec2]) -> f64 {
    permutations(robots.len())
        .iter()
        .map(|p| pair_cost(p, robots, points))
        .fold(f64::INFINITY, f64::min)
}

pub fn crossing_pairs(pairs: &[usize], robots: &[Vec2], points: &[Vec2]) -> usize {
    let mut n = 0;
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            if segments_properly_intersect(robots[i], points[pairs[i]], robots[j], points[pairs[j]])
            {
                n += 1;
            }
        }
    }
    n
}

/// Static scan-stacking audit: a robot drives `depth` random steps through
/// a pedestrian-free world; every cell occupied in the max projection of the
/// stacked history must lie within one cell (Chebyshev) of a cell that
/// touches a true surface in the current frame. Returns the number of
/// occupied cells and the number that failed.
pub fn stacking_audit(seed: u64, depth: usize, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let spec = ScenarioSpec {
        n_pedestrians: Some(0),
        ..ScenarioSpec::new(Family::OpenRandom, 1, seed)
    };
    let mut world = make_scenario(&spec).expect("scenario");
    let dt = 0.1;
    let mut pose = world.robots[0].pose;
    let mut history = Vec::with_capacity(depth);
    for k in 0..depth {
        if k > 0 {
            let cmd = Twist::new(rng.random_range(-0.2..0.7), rng.random_range(-1.5..1.5));
            let next = integrate_unicycle(pose, cmd, dt);
            if world.static_clearance(next.position()) > 0.35 {
                pose = next;
            }
        }
        world.time = k as f64 * dt;
        world.robots[0].pose = pose;
        history.push((
            cast_scan(&world, &pose, 360, 6.0, Some(AgentId::Robot(0))),
            pose,
        ));
    }
    let geometry = GridGeometry::local_default();
    let projection = stack_scans(&history, &pose, geometry)
        .expect("stack")
        .max_projection();

    let truth = surface_cells(&world, &pose, geometry);
    let (w, h) = (geometry.width as i64, geometry.height as i64);
    let mut total = 0;
    let mut bad = 0;
    for idx in projection.occupied(0.5) {
        total += 1;
        let (c, r) = ((idx % geometry.width) as i64, (idx / geometry.width) as i64);
        let near = (-1..=1).any(|dc| {
            (-1..=1).any(|dr| {
                let (cc, rr) = (c + dc, r + dr);
                cc >= 0 && rr >= 0 && cc < w && rr < h && truth[(rr * w + cc) as usize]
            })
        });
        if !near {
            bad += 1;
        }
    }
    (total, bad)
}

/// Cells of `geometry` (a frame attached to `pose`) whose square contains a
/// point of some static surface or body boundary, by distance to the cell
/// center against the half diagonal.
fn surface_cells(world: &WorldState, pose: &Pose2D, geometry: GridGeometry) -> Vec<bool> {
    let half_diag = geometry.resolution * std::f64::consts::SQRT_2 / 2.0;
    let walls = world.bounds.walls();
    let bodies: Vec<(Vec2, f64)> = world
        .bodies()
        .filter(|(id, _, _)| *id != AgentId::Robot(0))
        .map(|(_, c, r)| (c, r))
        .collect();
    (0..geometry.len())
        .map(|idx| {
            let local = geometry.center_of_index(idx);
            let p = pose.transform_point(local);
            let d_obs = world
                .obstacles
                .iter()
                .map(|o| match *o {
                    Obstacle::Circle { center, radius } => ((p - center).norm() - radius).abs(),
                    Obstacle::Segment { a, b } => point_segment_distance(p, a, b),
                })
                .fold(f64::INFINITY, f64::min);
            let d_wall = walls
                .iter()
                .map(|&(a, b)| point_segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min);
            let d_body = bodies
                .iter()
                .map(|&(c, r)| ((p - c).norm() - r).abs())
                .fold(f64::INFINITY, f64::min);
            d_obs.min(d_wall).min(d_body) <= half_diag
        })
        .collect()
}

/// Largest relative error between the analytic parameter and input
/// gradients of `sum_k w_k·out_k` and central differences with step `h`.
/// The error is `|a − n| / max(|a|, |n|, floor)`.
pub fn gradient_check(net: &Mlp, x: &[f64], weights: &[f64], h: f64, floor: f64) -> f64 {
    let objective = |net: &Mlp, x: &[f64]| -> f64 {
        net.forward(x)
            .unwrap()
            .iter()
            .zip(weights)
            .map(|(o, w)| o * w)
            .sum()
    };
    let trace = net.trace(x).unwrap();
    let (gp, gx) = net.backward(&trace, weights).unwrap();
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(floor);
    let mut worst: f64 = 0.0;
    let mut probe = net.clone();
    for k in 0..net.params.len() {
        let orig = probe.params[k];
        probe.params[k] = orig + h;
        let up = objective(&probe, x);
        probe.params[k] = orig - h;
        let down = objective(&probe, x);
        probe.params[k] = orig;
        worst = worst.max(rel(gp[k], (up - down) / (2.0 * h)));
    }
    let mut xs = x.to_vec();
    for k in 0..x.len() {
        let orig = xs[k];
        xs[k] = orig + h;
        let up = objective(net, &xs);
        xs[k] = orig - h;
        let down = objective(net, &xs);
        xs[k] = orig;
        worst = worst.max(rel(gx[k], (up - down) / (2.0 * h)));
    }
    worst
}
