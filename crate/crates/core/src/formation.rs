//! Iterative formation-point selection on the composed field, goal
//! assignment to robots and crossing repair.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{
    compose_with_distance, edt, sample_field, FieldError, FieldGains, ScalarField, TargetMotion,
};
use crate::geometry::{segments_properly_intersect, Pose2D, Vec2};
use crate::maps::TargetCenteredMap;

#[derive(Debug, Error, PartialEq)]
pub enum FormationError {
    #[error("formation needs at least one robot")]
    NoRobots,
    #[error("{robots} robots for {points} formation points")]
    CountMismatch { robots: usize, points: usize },
    #[error("malformed record line `{0}`")]
    Record(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormationParams {
    /// Inner radius of the candidate annulus around the target, m.
    pub d_min: f64,
    /// Outer radius of the candidate annulus, m.
    pub d_max: f64,
    /// Minimum separation between formation points, m.
    pub d_sep: f64,
    /// Occupancy at or above which a cell counts as an obstacle.
    pub edt_threshold: f64,
    /// Minimum obstacle distance for a candidate cell, m.
    pub min_clearance: f64,
    /// Candidates must see the target through free cells.
    pub line_of_sight: bool,
}

impl Default for FormationParams {
    fn default() -> Self {
        Self {
            d_min: 0.6,
            d_max: 2.5,
            d_sep: 0.7,
            edt_threshold: 0.3,
            min_clearance: 0.35,
            line_of_sight: true,
        }
    }
}

/// Formation points in the target frame, in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationPlan {
    pub points: Vec<Vec2>,
    /// Field value (under the field at selection time) at each point.
    pub costs: Vec<f64>,
    pub n: usize,
    /// Set when some point had to be taken outside the feasible set.
    pub degraded: bool,
}

/// One iteration's outcome, exposed for auditing the selection rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub cell: usize,
    pub cell_value: f64,
    pub point: Vec2,
    pub cost: f64,
    pub feasible: bool,
}

/// Static candidate mask: annulus, clearance and (optionally) a clear line
/// of sight to the target.
pub fn candidate_mask(dist: &ScalarField, params: &FormationParams) -> Vec<bool> {
    let geo = dist.geometry;
    // free-space margin for line-of-sight samples; bridges one-cell gaps
    // between rasterized lidar endpoints
    let los_clear = 1.5 * geo.resolution;
    let step = 0.5 * geo.resolution;
    (0..geo.len())
        .map(|k| {
            let p = geo.center_of_index(k);
            let r = p.norm();
            if r < params.d_min || r > params.d_max || dist.values[k] < params.min_clearance {
                return false;
            }
            if !params.line_of_sight {
                return true;
            }
            let samples = (r / step).ceil() as usize;
            (1..samples).all(|s| {
                let q = p * (s as f64 / samples as f64);
                sample_field(dist, q).is_ok_and(|d| d >= los_clear)
            })
        })
        .collect()
}

fn argmin_masked(field: &ScalarField, allowed: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    // row-major scan with strict `<` keeps the lowest row, then column
    for (k, v) in field.values.iter().enumerate() {
        if !allowed(k) {
            continue;
        }
        if best.is_none_or(|(_, bv)| *v < bv) {
            best = Some((k, *v));
        }
    }
    best.map(|(k, _)| k)
}

/// Separable 3×3 quadratic fit around `cell`; returns the sub-cell offset
/// in cells, each axis within `[-0.5, 0.5]`.
fn quadratic_offset(field: &ScalarField, cell: usize) -> Vec2 {
    let geo = field.geometry;
    let (i, j) = (cell % geo.width, cell / geo.width);
    let axis = |fm: f64, f0: f64, fp: f64| {
        let curv = fm - 2.0 * f0 + fp;
        if curv > 0.0 {
            (0.5 * (fm - fp) / curv).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    };
    let dx = if i > 0 && i + 1 < geo.width {
        axis(field.get(i - 1, j), field.get(i, j), field.get(i + 1, j))
    } else {
        0.0
    };
    let dy = if j > 0 && j + 1 < geo.height {
        axis(field.get(i, j - 1), field.get(i, j), field.get(i, j + 1))
    } else {
        0.0
    };
    Vec2::new(dx, dy)
}

fn separated(p: Vec2, placed: &[Vec2], d_sep: f64) -> bool {
    placed.iter().all(|q| p.distance(*q) >= d_sep)
}

/// Picks the next formation point on `field` given already placed points.
pub fn select_next(
    field: &ScalarField,
    dist: &ScalarField,
    mask: &[bool],
    placed: &[Vec2],
    params: &FormationParams,
) -> Result<Selection, FormationError> {
    let geo = field.geometry;
    let centers = |k: usize| geo.center_of_index(k);
    let strict = |k: usize| mask[k] && separated(centers(k), placed, params.d_sep);
    let (cell, feasible) = match argmin_masked(field, strict) {
        Some(k) => (k, true),
        None => {
            let in_ring = |k: usize| {
                let r = centers(k).norm();
                r >= params.d_min
                    && r <= params.d_max
                    && separated(centers(k), placed, params.d_sep)
            };
            let fallback = argmin_masked(field, in_ring)
                .or_else(|| argmin_masked(field, |k| separated(centers(k), placed, params.d_sep)))
                .or_else(|| argmin_masked(field, |_| true))
                .ok_or(FormationError::NoRobots)?;
            (fallback, false)
        }
    };
    let center = centers(cell);
    let refined = center + quadratic_offset(field, cell) * geo.resolution;
    let keeps_constraints = |p: Vec2| {
        let r = p.norm();
        r >= params.d_min
            && r <= params.d_max
            && separated(p, placed, params.d_sep)
            && sample_field(dist, p).is_ok_and(|d| d >= params.min_clearance)
    };
    let point = if !feasible || keeps_constraints(refined) {
        refined
    } else {
        center
    };
    let cost = sample_field(field, point)?;
    Ok(Selection {
        cell,
        cell_value: field.values[cell],
        point,
        cost,
        feasible,
    })
}

/// Selects `n` formation points one at a time, re-composing the field with
/// every previously chosen point as an ally.
pub fn select_formation(
    map: &TargetCenteredMap,
    n: usize,
    motion: &TargetMotion,
    gains: &FieldGains,
    params: &FormationParams,
) -> Result<FormationPlan, FormationError> {
    if n == 0 {
        return Err(FormationError::NoRobots);
    }
    let geo = map.grid.geometry;
    let dist = edt(&map.grid, params.edt_threshold);
    let mask = candidate_mask(&dist, params);
    let mut plan = FormationPlan {
        points: Vec::with_capacity(n),
        costs: Vec::with_capacity(n),
        n,
        degraded: false,
    };
    for _ in 0..n {
        let field = compose_with_distance(&dist, geo, &plan.points, motion, gains)?;
        let sel = select_next(&field, &dist, &mask, &plan.points, params)?;
        plan.degraded |= !sel.feasible;
        plan.points.push(sel.point);
        plan.costs.push(sel.cost);
    }
    Ok(plan)
}

/// Evenly spaced points on a circle of `radius`, rigid in the target frame.
pub fn fixed_formation(n: usize, radius: f64) -> FormationPlan {
    let points = (0..n)
        .map(|k| {
            Vec2::from_angle(
                std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / n as f64,
            ) * radius
        })
        .collect();
    FormationPlan {
        points,
        costs: vec![0.0; n],
        n,
        degraded: false,
    }
}

/// `pairs[robot] = formation point index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub pairs: Vec<usize>,
    pub total_cost: OrderedCost,
}

/// Total straight-line distance; wrapped so `Assignment` can be `Eq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedCost(pub f64);

impl Eq for OrderedCost {}

impl Assignment {
    pub fn cost(&self) -> f64 {
        self.total_cost.0
    }

    fn from_pairs(pairs: Vec<usize>, positions: &[Vec2], points: &[Vec2]) -> Self {
        let total = total_cost(&pairs, positions, points);
        Self {
            pairs,
            total_cost: OrderedCost(total),
        }
    }
}

pub fn total_cost(pairs: &[usize], positions: &[Vec2], points: &[Vec2]) -> f64 {
    pairs
        .iter()
        .enumerate()
        .map(|(r, &p)| positions[r].distance(points[p]))
        .sum()
}

/// Greedy closest-pair binding, then crossing repair and two- or
/// three-robot goal exchanges until none shortens the total.
pub fn assign_goals(
    robot_positions: &[Vec2],
    plan: &FormationPlan,
) -> Result<Assignment, FormationError> {
    let n = robot_positions.len();
    if n != plan.points.len() {
        return Err(FormationError::CountMismatch {
            robots: n,
            points: plan.points.len(),
        });
    }
    let mut candidates: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|r| (0..n).map(move |p| (r, p)))
        .map(|(r, p)| (robot_positions[r].distance(plan.points[p]), r, p))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pairs = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, r, p) in candidates {
        if pairs[r] == usize::MAX && !taken[p] {
            pairs[r] = p;
            taken[p] = true;
        }
    }
    let points = &plan.points;
    // crossing repair and small goal exchanges both strictly lower the total,
    // so alternating them reaches a joint fixpoint
    let mut current = Assignment::from_pairs(pairs, robot_positions, points);
    loop {
        current = repair_crossings(&current, robot_positions, points);
        match improving_exchange(&current.pairs, robot_positions, points) {
            Some(pairs) => current = Assignment::from_pairs(pairs, robot_positions, points),
            None => return Ok(current),
        }
    }
}

/// First goal exchange among two or three robots that shortens the total;
/// returns the improved pairing.
fn improving_exchange(pairs: &[usize], positions: &[Vec2], points: &[Vec2]) -> Option<Vec<usize>> {
    let n = pairs.len();
    let cost = |r: usize, p: usize| positions[r].distance(points[p]);
    for a in 0..n {
        for b in a + 1..n {
            let now = cost(a, pairs[a]) + cost(b, pairs[b]);
            if cost(a, pairs[b]) + cost(b, pairs[a]) < now - 1e-12 {
                let mut out = pairs.to_vec();
                out.swap(a, b);
                return Some(out);
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let now = cost(a, pairs[a]) + cost(b, pairs[b]) + cost(c, pairs[c]);
                for [x, y, z] in [
                    [pairs[b], pairs[c], pairs[a]],
                    [pairs[c], pairs[a], pairs[b]],
                ] {
                    if cost(a, x) + cost(b, y) + cost(c, z) < now - 1e-12 {
                        let mut out = pairs.to_vec();
                        (out[a], out[b], out[c]) = (x, y, z);
                        return Some(out);
                    }
                }
            }
        }
    }
    None
}

/// Swaps the goals of any two robots whose straight paths properly cross,
/// until no such pair remains. Returns the repaired assignment and the
/// number of swaps performed.
pub fn repair_crossings_counted(
    assignment: &Assignment,
    positions: &[Vec2],
    points: &[Vec2],
) -> (Assignment, usize) {
    let mut pairs = assignment.pairs.clone();
    let n = pairs.len();
    let mut swaps = 0;
    'outer: loop {
        for a in 0..n {
            for b in a + 1..n {
                if segments_properly_intersect(
                    positions[a],
                    points[pairs[a]],
                    positions[b],
                    points[pairs[b]],
                ) {
                    pairs.swap(a, b);
                    swaps += 1;
                    continue 'outer;
                }
            }
        }
        break;
    }
    (Assignment::from_pairs(pairs, positions, points), swaps)
}

pub fn repair_crossings(
    assignment: &Assignment,
    positions: &[Vec2],
    points: &[Vec2],
) -> Assignment {
    repair_crossings_counted(assignment, positions, points).0
}

/// World-frame goals per robot, each facing the target.
pub fn world_frame_goals(
    plan: &FormationPlan,
    assignment: &Assignment,
    target_pose: &Pose2D,
) -> Vec<Pose2D> {
    let target = target_pose.position();
    assignment
        .pairs
        .iter()
        .map(|&p| {
            let g = target_pose.transform_point(plan.points[p]);
            Pose2D::new(g.x, g.y, (target - g).angle())
        })
        .collect()
}

/// `k,x,y,cost` lines with a header.
pub fn plan_to_record(plan: &FormationPlan) -> String {
    let mut out = String::from("k,x,y,cost\n");
    for (k, (p, c)) in plan.points.iter().zip(&plan.costs).enumerate() {
        let _ = writeln!(out, "{k},{},{},{}", p.x, p.y, c);
    }
    out
}

pub fn plan_from_record(text: &str) -> Result<FormationPlan, FormationError> {
    let mut points = Vec::new();
    let mut costs = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || FormationError::Record(line.to_string());
        if f.len() != 4 || f[0].parse::<usize>().ok() != Some(points.len()) {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        points.push(Vec2::new(num(f[1])?, num(f[2])?));
        costs.push(num(f[3])?);
    }
    Ok(FormationPlan {
        n: points.len(),
        points,
        costs,
        degraded: false,
    })
}

/// `robot_id,point_id` lines with a header.
pub fn assignment_to_record(a: &Assignment) -> String {
    let mut out = String::from("robot_id,point_id\n");
    for (r, p) in a.pairs.iter().enumerate() {
        let _ = writeln!(out, "{r},{p}");
    }
    out
}

pub fn assignment_from_record(
    text: &str,
    positions: &[Vec2],
    points: &[Vec2],
) -> Result<Assignment, FormationError> {
    let mut pairs = vec![usize::MAX; positions.len()];
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let bad = || FormationError::Record(line.to_string());
        let (r, p) = line.split_once(',').ok_or_else(bad)?;
        let r: usize = r.trim().parse().map_err(|_| bad())?;
        let p: usize = p.trim().parse().map_err(|_| bad())?;
        if r >= pairs.len() || p >= points.len() {
            return Err(bad());
        }
        pairs[r] = p;
    }
    if pairs.contains(&usize::MAX) {
        return Err(FormationError::CountMismatch {
            robots: positions.len(),
            points: points.len(),
        });
    }
    Ok(Assignment::from_pairs(pairs, positions, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::GridGeometry;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn empty_plan(n: usize) -> FormationPlan {
        select_formation(
            &TargetCenteredMap::empty_default(),
            n,
            &TargetMotion::STATIONARY,
            &FieldGains::default(),
            &FormationParams::default(),
        )
        .unwrap()
    }

    fn pairwise(points: &[Vec2]) -> Vec<f64> {
        let mut out = vec![];
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                out.push(points[i].distance(points[j]));
            }
        }
        out
    }

    #[test]
    fn single_point_on_ring() {
        let plan = empty_plan(1);
        assert_eq!(plan.points.len(), 1);
        let r = plan.points[0].norm();
        assert!((r - 1.0).abs() <= 0.05, "r={r}");
        assert!(!plan.degraded);
    }

    #[test]
    fn three_points_spread_evenly() {
        let plan = empty_plan(3);
        let d = pairwise(&plan.points);
        let (lo, hi) = d
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        // the third point settles just past the repulsion cutoff of the
        // first two, equidistant from both
        assert!((d[1] - d[2]).abs() < 0.02 * lo, "{d:?}");
        assert!(lo > FieldGains::default().d_cut && hi <= 1.12 * lo, "{d:?}");

        let tight = FormationParams {
            d_max: 2.0,
            ..Default::default()
        };
        let plan = select_formation(
            &TargetCenteredMap::empty_default(),
            3,
            &TargetMotion::STATIONARY,
            &FieldGains::default(),
            &tight,
        )
        .unwrap();
        let d = pairwise(&plan.points);
        let (lo, hi) = d
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        assert!(hi <= 1.1 * lo, "{d:?}");
    }

    #[test]
    fn costs_match_sampled_field() {
        let gains = FieldGains::default();
        let params = FormationParams::default();
        let map = TargetCenteredMap::empty_default();
        let plan = select_formation(&map, 4, &TargetMotion::forward(0.3), &gains, &params).unwrap();
        let dist = edt(&map.grid, params.edt_threshold);
        for k in 0..4 {
            let f = compose_with_distance(
                &dist,
                map.grid.geometry,
                &plan.points[..k],
                &TargetMotion::forward(0.3),
                &gains,
            )
            .unwrap();
            assert_eq!(sample_field(&f, plan.points[k]).unwrap(), plan.costs[k]);
        }
        for d in pairwise(&plan.points) {
            assert!(d >= params.d_sep);
        }
    }

    #[test]
    fn moving_target_keeps_front_clear() {
        let gains = FieldGains::default();
        let plan = select_formation(
            &TargetCenteredMap::empty_default(),
            2,
            &TargetMotion::forward(0.4),
            &gains,
            &FormationParams::default(),
        )
        .unwrap();
        // points avoid the forward cone: cos angle to +x is small or negative
        for p in &plan.points {
            assert!(p.x / p.norm() < 0.5, "{p:?}");
        }
    }

    #[test]
    fn selection_dominates_other_annulus_cells() {
        let geo = GridGeometry::centered(41, 0.1);
        let mut map = TargetCenteredMap::new(geo, 0.9, Pose2D::default());
        for k in [100usize, 101, 102, 500, 900, 1300] {
            map.grid.cells[k] = 1.0;
        }
        let gains = FieldGains::default();
        let params = FormationParams {
            d_max: 1.9,
            line_of_sight: false,
            ..Default::default()
        };
        let dist = edt(&map.grid, params.edt_threshold);
        let mask = candidate_mask(&dist, &params);
        let mut placed = vec![];
        for _ in 0..3 {
            let f = compose_with_distance(&dist, geo, &placed, &TargetMotion::STATIONARY, &gains)
                .unwrap();
            let sel = select_next(&f, &dist, &mask, &placed, &params).unwrap();
            assert!(sel.feasible);
            for k in 0..geo.len() {
                if mask[k] && separated(geo.center_of_index(k), &placed, params.d_sep) {
                    assert!(sel.cell_value <= f.values[k]);
                }
            }
            placed.push(sel.point);
        }
    }

    #[test]
    fn blocked_annulus_degrades() {
        let mut map = TargetCenteredMap::empty_default();
        map.grid.cells.iter_mut().enumerate().for_each(|(k, c)| {
            if k % 3 == 0 {
                *c = 1.0
            }
        });
        let plan = select_formation(
            &map,
            2,
            &TargetMotion::STATIONARY,
            &FieldGains::default(),
            &FormationParams::default(),
        )
        .unwrap();
        assert!(plan.degraded);
        assert_eq!(plan.points.len(), 2);
    }

    #[test]
    fn monotone_crowding() {
        let mut prev = f64::INFINITY;
        for n in 2..=6 {
            let plan = empty_plan(n);
            let m = pairwise(&plan.points)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            assert!(m <= prev + 1e-12);
            prev = m;
        }
    }

    #[test]
    fn assignment_identity() {
        let plan = fixed_formation(4, 1.0);
        let a = assign_goals(&plan.points, &plan).unwrap();
        assert_eq!(a.pairs, vec![0, 1, 2, 3]);
        assert_eq!(a.cost(), 0.0);
        assert!(matches!(
            assign_goals(&plan.points[..2], &plan),
            Err(FormationError::CountMismatch { .. })
        ));
    }

    #[test]
    fn crossed_pair_is_swapped() {
        let robots = [Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)];
        let points = [Vec2::new(2.0, 0.0), Vec2::new(2.0, 1.0)];
        let crossed = Assignment::from_pairs(vec![1, 0], &robots, &points);
        let (fixed, swaps) = repair_crossings_counted(&crossed, &robots, &points);
        assert_eq!(fixed.pairs, vec![0, 1]);
        assert_eq!(swaps, 1);
        assert!(fixed.cost() < crossed.cost());
        // already clean input is untouched
        assert_eq!(repair_crossings(&fixed, &robots, &points), fixed);
    }

    #[test]
    fn greedy_crossing_is_repaired() {
        // nearest-first binds robot 0 to point 0 and forces robot 1 across
        let robots = [Vec2::new(0.0, 0.0), Vec2::new(1.0, -1.0)];
        let plan = FormationPlan {
            points: vec![Vec2::new(0.9, 0.0), Vec2::new(-1.0, 1.2)],
            costs: vec![0.0; 2],
            n: 2,
            degraded: false,
        };
        let a = assign_goals(&robots, &plan).unwrap();
        // exhaustive check over both permutations
        let perms = [[0usize, 1], [1, 0]];
        let crossing = |p: &[usize; 2]| {
            segments_properly_intersect(robots[0], plan.points[p[0]], robots[1], plan.points[p[1]])
        };
        assert!(crossing(&[0, 1]));
        assert!(!crossing(&[a.pairs[0], a.pairs[1]]));
        let greedy_cost = total_cost(&[0, 1], &robots, &plan.points);
        assert!(a.cost() <= greedy_cost);
        assert!(perms.iter().any(|p| p.as_slice() == a.pairs.as_slice()));
    }

    #[test]
    fn random_repair_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let pts: Vec<Vec2> = (0..8)
                .map(|_| Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
                .collect();
            let (robots, points) = pts.split_at(4);
            let mut perm: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let a = Assignment::from_pairs(perm, robots, points);
            let (fixed, swaps) = repair_crossings_counted(&a, robots, points);
            assert!(swaps <= 6);
            for i in 0..4 {
                for j in i + 1..4 {
                    assert!(!segments_properly_intersect(
                        robots[i],
                        points[fixed.pairs[i]],
                        robots[j],
                        points[fixed.pairs[j]]
                    ));
                }
            }
        }
    }

    #[test]
    fn world_goals_transform() {
        let plan = FormationPlan {
            points: vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, -1.5)],
            costs: vec![0.0; 2],
            n: 2,
            degraded: false,
        };
        let a = Assignment::from_pairs(vec![1, 0], &[Vec2::ZERO; 2], &plan.points);
        let g = world_frame_goals(&plan, &a, &Pose2D::default());
        assert_eq!(g[0].position(), plan.points[1]);
        assert_eq!(g[1].position(), plan.points[0]);
        assert!((g[1].theta - std::f64::consts::PI).abs() < 1e-12);

        let rot = Pose2D::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let g = world_frame_goals(&plan, &a, &rot);
        assert!(g[1].position().distance(Vec2::new(0.0, 1.0)) < 1e-12);

        let target = Pose2D::new(2.0, -1.0, 0.7);
        let g = world_frame_goals(&plan, &a, &target);
        for (r, goal) in g.iter().enumerate() {
            let back = target.inverse_transform_point(goal.position());
            assert!(back.distance(plan.points[a.pairs[r]]) < 1e-9);
        }
    }

    #[test]
    fn records_round_trip() {
        let plan = empty_plan(3);
        let back = plan_from_record(&plan_to_record(&plan)).unwrap();
        assert_eq!(back.points, plan.points);
        assert_eq!(back.costs, plan.costs);
        let robots = [
            Vec2::new(0.0, 2.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(-1.0, -1.0),
        ];
        let a = assign_goals(&robots, &plan).unwrap();
        let text = assignment_to_record(&a);
        assert!(text.starts_with("robot_id,point_id\n"));
        assert_eq!(
            assignment_from_record(&text, &robots, &plan.points).unwrap(),
            a
        );
        assert!(plan_from_record("k,x,y,cost\n0,1,2\n").is_err());
    }
}
