//! Scalar potential fields over the target-centered grid.
//!
//! The composed field is obstacle repulsion (from an exact Euclidean
//! distance transform) plus repulsion from already placed allies and the
//! target itself, quadratic attraction to the target and a forward-cone
//! penalty in the target's direction of travel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::maps::{pgm, GridGeometry, MapError, OccupancyGrid, TargetCenteredMap};

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("field geometries differ")]
    GeometryMismatch,
    #[error("point ({x}, {y}) lies outside the grid")]
    OutOfBounds { x: f64, y: f64 },
    #[error("bad field sidecar: {0}")]
    Sidecar(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(geometry: GridGeometry, value: f64) -> Self {
        Self {
            values: vec![value; geometry.len()],
            geometry,
        }
    }

    pub fn from_fn(geometry: GridGeometry, f: impl Fn(Vec2) -> f64) -> Self {
        let values = (0..geometry.len())
            .map(|i| f(geometry.center_of_index(i)))
            .collect();
        Self { geometry, values }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[self.geometry.index(col, row)]
    }

    pub fn add_assign(&mut self, other: &ScalarField) -> Result<(), FieldError> {
        if self.geometry != other.geometry {
            return Err(FieldError::GeometryMismatch);
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldGains {
    /// Obstacle repulsion gain.
    pub k_o: f64,
    /// Target attraction gain, cost/m².
    pub k_a: f64,
    /// Ally and target-standoff repulsion gain.
    pub k_r: f64,
    /// Forward-cone heading penalty gain.
    pub k_h: f64,
    /// Repulsion cutoff, m.
    pub d_cut: f64,
    /// Clamp for every repulsion term.
    pub f_max: f64,
    /// Distance floor for point terms, m.
    pub eps: f64,
}

impl Default for FieldGains {
    fn default() -> Self {
        Self {
            k_o: 1.0,
            k_a: 0.5,
            k_r: 1.0,
            k_h: 1.5,
            d_cut: 2.0,
            f_max: 100.0,
            eps: 0.05,
        }
    }
}

impl FieldGains {
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            k_o: self.k_o * a,
            k_a: self.k_a * a,
            k_r: self.k_r * a,
            k_h: self.k_h * a,
            ..*self
        }
    }

    /// Radius minimizing `k_r/d + k_a d²`, the free-space standoff ring.
    pub fn ring_radius(&self) -> f64 {
        (self.k_r / (2.0 * self.k_a)).cbrt()
    }
}

/// Target velocity expressed in the target frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetMotion {
    pub velocity: Vec2,
}

impl TargetMotion {
    pub const STATIONARY: TargetMotion = TargetMotion {
        velocity: Vec2::ZERO,
    };

    /// Motion of a unicycle moving forward at `speed` in its own frame.
    pub fn forward(speed: f64) -> Self {
        Self {
            velocity: Vec2::new(speed, 0.0),
        }
    }
}

/// Speed below which the target counts as stationary.
pub const MIN_HEADING_SPEED: f64 = 0.05;

const FAR: f64 = 1e20;

/// One-dimensional squared distance transform of sampled function `f`
/// (lower envelope of parabolas), written into `out`.
fn dt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let parab = |p: usize| f[p] + (p * p) as f64;
    for q in 1..n {
        let fq = parab(q);
        let mut s = (fq - parab(v[k])) / (2.0 * (q - v[k]) as f64);
        // z[0] = -inf, so this never walks past the first parabola
        while s <= z[k] {
            k -= 1;
            s = (fq - parab(v[k])) / (2.0 * (q - v[k]) as f64);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// Exact Euclidean distance transform in meters: each cell gets the distance
/// to the nearest cell whose occupancy is `>= threshold`. With no occupied
/// cells every value is the grid diagonal.
pub fn edt(occupancy: &OccupancyGrid, threshold: f64) -> ScalarField {
    let geo = occupancy.geometry;
    let (w, h) = (geo.width, geo.height);
    let d_max = geo.diagonal();
    let occupied: Vec<bool> = occupancy
        .cells
        .iter()
        .map(|v| *v >= threshold && *v > 0.0)
        .collect();
    if !occupied.iter().any(|o| *o) {
        return ScalarField::constant(geo, d_max);
    }
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    let mut sq = vec![0.0; w * h];

    // columns
    for col in 0..w {
        for row in 0..h {
            f[row] = if occupied[row * w + col] { 0.0 } else { FAR };
        }
        dt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for row in 0..h {
            sq[row * w + col] = out[row];
        }
    }
    // rows
    for row in 0..h {
        f[..w].copy_from_slice(&sq[row * w..(row + 1) * w]);
        dt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        sq[row * w..(row + 1) * w].copy_from_slice(&out[..w]);
    }
    let values = sq
        .into_iter()
        .map(|d2| (d2.sqrt() * geo.resolution).min(d_max))
        .collect();
    ScalarField {
        geometry: geo,
        values,
    }
}

/// Obstacle repulsion `k_o / d` inside the cutoff, clamped to `f_max`.
pub fn repulsion_from_distance(dist: &ScalarField, gains: &FieldGains) -> ScalarField {
    let values = dist
        .values
        .iter()
        .map(|&d| {
            if d > gains.d_cut {
                0.0
            } else if d <= 0.0 {
                if gains.k_o > 0.0 {
                    gains.f_max
                } else {
                    0.0
                }
            } else {
                (gains.k_o / d).min(gains.f_max)
            }
        })
        .collect();
    ScalarField {
        geometry: dist.geometry,
        values,
    }
}

/// Quadratic attraction `k_a ‖p − target‖²`.
pub fn attraction(
    target_position: Vec2,
    gains: &FieldGains,
    geometry: GridGeometry,
) -> ScalarField {
    ScalarField::from_fn(geometry, |p| gains.k_a * (p - target_position).norm_sq())
}

/// Sum of `k_r / max(‖p − q‖, ε)` over points within the cutoff, clamped.
pub fn point_repulsion(points: &[Vec2], gains: &FieldGains, geometry: GridGeometry) -> ScalarField {
    ScalarField::from_fn(geometry, |p| {
        let sum: f64 = points
            .iter()
            .map(|q| p.distance(*q))
            .filter(|d| *d <= gains.d_cut)
            .map(|d| gains.k_r / d.max(gains.eps))
            .sum();
        sum.min(gains.f_max)
    })
}

/// Forward-cone penalty `k_h cos²∠(p, dir) / max(‖p‖, ε)` for cells ahead of a
/// moving target (target at the frame origin). Zero for a stationary target.
pub fn heading_penalty(
    motion: &TargetMotion,
    gains: &FieldGains,
    geometry: GridGeometry,
) -> ScalarField {
    let speed = motion.velocity.norm();
    if speed < MIN_HEADING_SPEED {
        return ScalarField::constant(geometry, 0.0);
    }
    let dir = motion.velocity * (1.0 / speed);
    ScalarField::from_fn(geometry, |p| {
        let d = p.norm();
        if d == 0.0 {
            return gains.k_h / gains.eps;
        }
        let c = (p.dot(dir) / d).max(0.0);
        gains.k_h * c * c / d.max(gains.eps)
    })
}

/// `F = F_ro + F_ra + F_a` plus the heading penalty, with the target's own
/// standoff treated as one more repelling point at the frame origin.
pub fn compose_field(
    map: &TargetCenteredMap,
    placed_points: &[Vec2],
    motion: &TargetMotion,
    gains: &FieldGains,
    threshold: f64,
) -> Result<ScalarField, FieldError> {
    let dist = edt(&map.grid, threshold);
    compose_with_distance(&dist, map.grid.geometry, placed_points, motion, gains)
}

/// Like [`compose_field`] with a precomputed distance transform.
pub fn compose_with_distance(
    dist: &ScalarField,
    geometry: GridGeometry,
    placed_points: &[Vec2],
    motion: &TargetMotion,
    gains: &FieldGains,
) -> Result<ScalarField, FieldError> {
    if dist.geometry != geometry {
        return Err(FieldError::GeometryMismatch);
    }
    let mut field = repulsion_from_distance(dist, gains);
    let mut points = Vec::with_capacity(placed_points.len() + 1);
    points.push(Vec2::ZERO);
    points.extend_from_slice(placed_points);
    field.add_assign(&point_repulsion(&points, gains, geometry))?;
    field.add_assign(&attraction(Vec2::ZERO, gains, geometry))?;
    field.add_assign(&heading_penalty(motion, gains, geometry))?;
    Ok(field)
}

/// Bilinear interpolation between cell centers. Points in the half-cell rim
/// between the outer centers and the grid edge take the edge values.
pub fn sample_field(field: &ScalarField, point: Vec2) -> Result<f64, FieldError> {
    let geo = field.geometry;
    let c = geo.to_cell_coords(point);
    if !(c.x >= 0.0 && c.y >= 0.0 && c.x <= geo.width as f64 && c.y <= geo.height as f64) {
        return Err(FieldError::OutOfBounds {
            x: point.x,
            y: point.y,
        });
    }
    let axis = |u: f64, n: usize| -> (usize, usize, f64) {
        let u = (u - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = (u.floor() as usize).min(n.saturating_sub(2));
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, u - i0 as f64)
    };
    let (i0, i1, tx) = axis(c.x, geo.width);
    let (j0, j1, ty) = axis(c.y, geo.height);
    let v00 = field.get(i0, j0);
    let v10 = field.get(i1, j0);
    let v01 = field.get(i0, j1);
    let v11 = field.get(i1, j1);
    let bottom = v00 + (v10 - v00) * tx;
    let top = v01 + (v11 - v01) * tx;
    Ok(bottom + (top - bottom) * ty)
}

/// Min-max normalized PGM plus a sidecar text recording the range.
pub fn field_to_pgm(field: &ScalarField) -> (Vec<u8>, String) {
    let (lo, hi) = field.min_max();
    let span = hi - lo;
    let norm: Vec<f64> = field
        .values
        .iter()
        .map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect();
    let img = pgm::encode_pgm(field.geometry.width, field.geometry.height, &norm);
    (img, format!("min {lo}\nmax {hi}\n"))
}

/// Inverse of [`field_to_pgm`] up to 8-bit quantization.
pub fn field_from_pgm(
    bytes: &[u8],
    sidecar: &str,
    geometry: GridGeometry,
) -> Result<ScalarField, FieldError> {
    let mut lo = None;
    let mut hi = None;
    for line in sidecar.lines() {
        let mut it = line.split_whitespace();
        let (Some(key), Some(val)) = (it.next(), it.next()) else {
            continue;
        };
        let val: f64 = val
            .parse()
            .map_err(|_| FieldError::Sidecar(format!("bad value in `{line}`")))?;
        match key {
            "min" => lo = Some(val),
            "max" => hi = Some(val),
            _ => {}
        }
    }
    let (lo, hi) = lo
        .zip(hi)
        .ok_or_else(|| FieldError::Sidecar("missing min/max".into()))?;
    let (w, h, norm) = pgm::decode_pgm(bytes)?;
    if w != geometry.width || h != geometry.height {
        return Err(FieldError::GeometryMismatch);
    }
    Ok(ScalarField {
        geometry,
        values: norm.into_iter().map(|u| lo + u * (hi - lo)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_grid(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::new(GridGeometry {
            width: w,
            height: h,
            resolution: 1.0,
            origin: Pose2D::default(),
        })
    }

    // O(n²) nearest-occupied scan.
    fn brute_edt(g: &OccupancyGrid, threshold: f64) -> Vec<f64> {
        let geo = g.geometry;
        let occ: Vec<(i64, i64)> = g
            .occupied(threshold)
            .map(|k| ((k % geo.width) as i64, (k / geo.width) as i64))
            .collect();
        (0..geo.len())
            .map(|k| {
                let (x, y) = ((k % geo.width) as i64, (k / geo.width) as i64);
                match occ
                    .iter()
                    .map(|(a, b)| (a - x).pow(2) + (b - y).pow(2))
                    .min()
                {
                    Some(d2) => ((d2 as f64).sqrt() * geo.resolution).min(geo.diagonal()),
                    None => geo.diagonal(),
                }
            })
            .collect()
    }

    #[test]
    fn edt_without_obstacles_is_diagonal() {
        let g = unit_grid(8, 5);
        let d = edt(&g, 0.5);
        assert!(d.values.iter().all(|v| *v == (64f64 + 25.0).sqrt()));
    }

    #[test]
    fn edt_pythagorean() {
        let mut g = unit_grid(10, 10);
        g.cells[g.geometry.index(2, 2)] = 1.0;
        let d = edt(&g, 0.5);
        assert_eq!(d.get(5, 6), 5.0);
        assert_eq!(d.get(2, 2), 0.0);
    }

    #[test]
    fn edt_matches_brute_force_32() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let mut g = unit_grid(32, 32);
            let p = rng.random_range(0.0..0.2);
            for c in g.cells.iter_mut() {
                if rng.random_bool(p) {
                    *c = 1.0;
                }
            }
            assert_eq!(edt(&g, 0.5).values, brute_edt(&g, 0.5));
        }
    }

    #[test]
    fn edt_respects_threshold() {
        let mut g = unit_grid(6, 1);
        g.cells[0] = 0.3;
        g.cells[5] = 0.9;
        let d = edt(&g, 0.5);
        assert_eq!(d.values, vec![5.0, 4.0, 3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn repulsion_boundaries() {
        let geo = GridGeometry::centered(3, 1.0);
        let gains = FieldGains::default();
        let at_cut = ScalarField::constant(geo, gains.d_cut);
        let r = repulsion_from_distance(&at_cut, &gains);
        assert!(r.values.iter().all(|v| *v == gains.k_o / gains.d_cut));
        let beyond = ScalarField::constant(geo, gains.d_cut + 1e-9);
        assert!(repulsion_from_distance(&beyond, &gains)
            .values
            .iter()
            .all(|v| *v == 0.0));
        let zero = ScalarField::constant(geo, 0.0);
        assert!(repulsion_from_distance(&zero, &gains)
            .values
            .iter()
            .all(|v| *v == gains.f_max));
    }

    #[test]
    fn repulsion_linear_in_gain() {
        let geo = GridGeometry::centered(5, 0.5);
        let dist = ScalarField::from_fn(geo, |p| p.norm() + 0.1);
        let g1 = FieldGains::default();
        let g2 = FieldGains {
            k_o: 2.0 * g1.k_o,
            ..g1
        };
        let a = repulsion_from_distance(&dist, &g1);
        let b = repulsion_from_distance(&dist, &g2);
        for ((x, y), d) in a.values.iter().zip(&b.values).zip(&dist.values) {
            if *d <= g1.d_cut {
                assert_eq!(*y, 2.0 * x);
            }
        }
    }

    #[test]
    fn attraction_shape() {
        let geo = GridGeometry::target_default();
        let gains = FieldGains {
            k_a: 1.0,
            ..Default::default()
        };
        let f = attraction(Vec2::ZERO, &gains, geo);
        assert_eq!(f.get(80, 80), 0.0);
        assert!((f.get(120, 80) - 4.0).abs() < 1e-12);
        // cells at equal radius: 4-fold symmetric copies
        for (i, j) in [(90usize, 97usize), (100, 83), (131, 80)] {
            let (a, b) = (i as i64 - 80, j as i64 - 80);
            let v = f.get(i, j);
            for (x, y) in [(-a, b), (a, -b), (b, a), (-b, -a)] {
                let w = f.get((80 + x) as usize, (80 + y) as usize);
                assert!((v - w).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn point_repulsion_cases() {
        let geo = GridGeometry::centered(41, 0.1);
        let gains = FieldGains::default();
        assert!(point_repulsion(&[], &gains, geo)
            .values
            .iter()
            .all(|v| *v == 0.0));
        let one = point_repulsion(&[Vec2::ZERO], &gains, geo);
        // cell at exactly d_cut = 2.0 (20 cells right of center)
        assert!((one.get(40, 20) - gains.k_r / 2.0).abs() < 1e-12);
        let a = Vec2::new(0.5, 0.2);
        let b = Vec2::new(-0.7, 0.9);
        let both = point_repulsion(&[a, b], &gains, geo);
        let fa = point_repulsion(&[a], &gains, geo);
        let fb = point_repulsion(&[b], &gains, geo);
        for k in 0..geo.len() {
            assert!((both.values[k] - fa.values[k] - fb.values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn heading_penalty_cases() {
        let geo = GridGeometry::target_default();
        let gains = FieldGains::default();
        let f = heading_penalty(&TargetMotion::forward(0.4), &gains, geo);
        assert_eq!(f.get(60, 80), 0.0);
        assert!((f.get(100, 80) - gains.k_h).abs() < 1e-12);
        let still = heading_penalty(&TargetMotion::forward(0.01), &gains, geo);
        assert!(still.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn empty_map_ring_radius() {
        let gains = FieldGains::default();
        let map = TargetCenteredMap::empty_default();
        let f = compose_field(&map, &[], &TargetMotion::STATIONARY, &gains, 0.3).unwrap();
        // independent 1D scan of k_r/d + k_a d² on a 1e-5 m lattice
        let mut best = (f64::INFINITY, 0.0);
        for k in 1..400_000 {
            let d = k as f64 * 1e-5;
            let c = gains.k_r / d + gains.k_a * d * d;
            if c < best.0 {
                best = (c, d);
            }
        }
        assert!((best.1 - 1.0).abs() < 1e-4);
        let (argmin, _) =
            f.values
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |(bi, bv), (i, v)| if *v < bv { (i, *v) } else { (bi, bv) },
                );
        let r = f.geometry.center_of_index(argmin).norm();
        assert!((r - best.1).abs() <= 0.05, "r={r}");
    }

    #[test]
    fn zero_gains_give_zero_field() {
        let gains = FieldGains {
            k_o: 0.0,
            k_a: 0.0,
            k_r: 0.0,
            k_h: 0.0,
            ..Default::default()
        };
        let mut map = TargetCenteredMap::empty_default();
        map.grid.cells[100] = 1.0;
        let f = compose_field(
            &map,
            &[Vec2::new(1.0, 0.0)],
            &TargetMotion::forward(0.3),
            &gains,
            0.3,
        )
        .unwrap();
        assert!(f.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ally_never_lowers_field() {
        let gains = FieldGains::default();
        let map = TargetCenteredMap::empty_default();
        let m = TargetMotion::forward(0.3);
        let a = compose_field(&map, &[], &m, &gains, 0.3).unwrap();
        let b = compose_field(&map, &[Vec2::new(0.0, 1.0)], &m, &gains, 0.3).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| y >= x));
    }

    #[test]
    fn geometry_mismatch_is_reported() {
        let d = ScalarField::constant(GridGeometry::centered(5, 0.1), 1.0);
        let r = compose_with_distance(
            &d,
            GridGeometry::centered(7, 0.1),
            &[],
            &TargetMotion::STATIONARY,
            &FieldGains::default(),
        );
        assert_eq!(r, Err(FieldError::GeometryMismatch));
    }

    #[test]
    fn bilinear_sampling() {
        let geo = GridGeometry::centered(11, 0.2);
        let c = ScalarField::constant(geo, 3.5);
        assert_eq!(sample_field(&c, Vec2::new(0.33, -0.71)).unwrap(), 3.5);
        let ramp = ScalarField::from_fn(geo, |p| 2.0 * p.x - 0.5 * p.y + 1.0);
        let p = geo.cell_center(4, 7);
        assert_eq!(sample_field(&ramp, p).unwrap(), ramp.get(4, 7));
        for q in [
            Vec2::new(0.123, -0.456),
            Vec2::new(-0.9, 0.77),
            Vec2::new(0.0, 0.0),
        ] {
            let v = sample_field(&ramp, q).unwrap();
            assert!((v - (2.0 * q.x - 0.5 * q.y + 1.0)).abs() < 1e-12);
        }
        assert!(matches!(
            sample_field(&ramp, Vec2::new(5.0, 0.0)),
            Err(FieldError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn field_pgm_round_trip() {
        let geo = GridGeometry::centered(9, 0.1);
        let f = ScalarField::from_fn(geo, |p| p.x * 3.0 + 10.0);
        let (img, side) = field_to_pgm(&f);
        let back = field_from_pgm(&img, &side, geo).unwrap();
        let (lo, hi) = f.min_max();
        assert_eq!(back.min_max(), (lo, hi));
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() <= (hi - lo) / 255.0);
        }
        assert!(field_from_pgm(&img, "min 1\n", geo).is_err());
    }
}
