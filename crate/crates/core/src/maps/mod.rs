//! Lidar scans to occupancy grids: single-scan ego grids, odometry-stacked
//! histories and the target-centered aggregate map.

pub mod pgm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose2D, Vec2};
use crate::world::LaserScan;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("scan history is empty")]
    EmptyHistory,
    #[error("scan history must be ordered oldest to newest with distinct timestamps")]
    UnorderedHistory,
    #[error("grid geometries differ")]
    GeometryMismatch,
    #[error("malformed PGM: {0}")]
    Pgm(String),
}

/// Placement and size of a regular grid. `origin` is the pose of the lower
/// left corner of cell (0, 0) in the grid's parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Pose2D,
}

impl GridGeometry {
    /// Square grid of `cells`×`cells` centered on the parent frame origin.
    /// With an odd cell count the origin sits on a cell center.
    pub fn centered(cells: usize, resolution: f64) -> Self {
        let half = 0.5 * cells as f64 * resolution;
        Self {
            width: cells,
            height: cells,
            resolution,
            origin: Pose2D::new(-half, -half, 0.0),
        }
    }

    /// 121×121 at 0.05 m: the per-robot ego grid.
    pub fn local_default() -> Self {
        Self::centered(121, 0.05)
    }

    /// 161×161 at 0.05 m: the target-centered grid.
    pub fn target_default() -> Self {
        Self::centered(161, 0.05)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Vec2 {
        self.origin.transform_point(Vec2::new(
            (col as f64 + 0.5) * self.resolution,
            (row as f64 + 0.5) * self.resolution,
        ))
    }

    pub fn center_of_index(&self, idx: usize) -> Vec2 {
        self.cell_center(idx % self.width, idx / self.width)
    }

    /// Continuous cell coordinates of a parent-frame point (cell centers sit
    /// at half-integers).
    pub fn to_cell_coords(&self, p: Vec2) -> Vec2 {
        self.origin.inverse_transform_point(p) * (1.0 / self.resolution)
    }

    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let c = self.to_cell_coords(p);
        let (i, j) = (c.x.floor(), c.y.floor());
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.width && (j as usize) < self.height)
            .then_some((i as usize, j as usize))
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64) * self.resolution
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub geometry: GridGeometry,
    /// Row-major occupancy values in `[0, 1]`.
    pub cells: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(geometry: GridGeometry) -> Self {
        Self {
            cells: vec![0.0; geometry.len()],
            geometry,
        }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.cells[self.geometry.index(col, row)]
    }

    /// Raises the cell containing `p` to at least `value`.
    pub fn mark(&mut self, p: Vec2, value: f64) -> bool {
        match self.geometry.cell_of(p) {
            Some((i, j)) => {
                let k = self.geometry.index(i, j);
                self.cells[k] = self.cells[k].max(value.clamp(0.0, 1.0));
                true
            }
            None => false,
        }
    }

    pub fn occupied(&self, threshold: f64) -> impl Iterator<Item = usize> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(move |(_, v)| **v >= threshold && **v > 0.0)
            .map(|(i, _)| i)
    }

    /// Cell-wise maximum with another grid of identical geometry.
    pub fn max_merge(&mut self, other: &OccupancyGrid) -> Result<(), MapError> {
        if self.geometry != other.geometry {
            return Err(MapError::GeometryMismatch);
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a = a.max(*b);
        }
        Ok(())
    }
}

/// Rasterizes the endpoints of every return shorter than max range into a
/// grid expressed in the sensor frame. No free space is marked; endpoints
/// outside the grid are dropped.
pub fn scan_to_local_grid(scan: &LaserScan, geometry: GridGeometry) -> OccupancyGrid {
    let mut grid = OccupancyGrid::new(geometry);
    for p in scan.hit_points() {
        grid.mark(p, 1.0);
    }
    grid
}

/// K ego grids, all in the current robot frame. Layer 0 is the newest scan.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedObstacleMap {
    pub layers: Vec<OccupancyGrid>,
    /// Age of each layer relative to layer 0, seconds; strictly increasing.
    pub layer_ages: Vec<f64>,
}

impl StackedObstacleMap {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Cell-wise maximum over all layers.
    pub fn max_projection(&self) -> OccupancyGrid {
        let mut out = self.layers[0].clone();
        for l in &self.layers[1..] {
            // all layers share geometry by construction
            let _ = out.max_merge(l);
        }
        out
    }
}

/// Stacks `history` (oldest first, each scan paired with the odometry pose it
/// was taken from) into the frame of `current_pose`.
pub fn stack_scans(
    history: &[(LaserScan, Pose2D)],
    current_pose: &Pose2D,
    geometry: GridGeometry,
) -> Result<StackedObstacleMap, MapError> {
    let newest = history.last().ok_or(MapError::EmptyHistory)?;
    if history
        .windows(2)
        .any(|w| !(w[0].0.timestamp < w[1].0.timestamp))
    {
        return Err(MapError::UnorderedHistory);
    }
    let now = newest.0.timestamp;
    let mut layers = Vec::with_capacity(history.len());
    let mut ages = Vec::with_capacity(history.len());
    for (scan, odom) in history.iter().rev() {
        let mut grid = OccupancyGrid::new(geometry);
        for p in scan.hit_points() {
            let world = odom.transform_point(p);
            grid.mark(current_pose.inverse_transform_point(world), 1.0);
        }
        layers.push(grid);
        ages.push(now - scan.timestamp);
    }
    Ok(StackedObstacleMap {
        layers,
        layer_ages: ages,
    })
}

/// Aggregated obstacle map in the target's frame with decaying trails.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetCenteredMap {
    pub grid: OccupancyGrid,
    pub trail_decay: f64,
    /// World pose of the target frame the grid is expressed in.
    pub frame: Pose2D,
}

/// Trail values below this are dropped to zero.
const TRAIL_FLOOR: f64 = 1e-3;

impl TargetCenteredMap {
    pub fn new(geometry: GridGeometry, trail_decay: f64, frame: Pose2D) -> Self {
        Self {
            grid: OccupancyGrid::new(geometry),
            trail_decay,
            frame,
        }
    }

    pub fn empty_default() -> Self {
        Self::new(GridGeometry::target_default(), 0.9, Pose2D::default())
    }
}

/// Folds every robot's scan into the target frame on top of the previous map.
/// The previous map is moved into the new target frame and decayed before the
/// current endpoints are max-merged at value 1.
pub fn build_target_centered_map(
    observations: &[(LaserScan, Pose2D)],
    target_pose: &Pose2D,
    previous: &TargetCenteredMap,
) -> TargetCenteredMap {
    let geometry = previous.grid.geometry;
    let mut next = TargetCenteredMap::new(geometry, previous.trail_decay, *target_pose);
    let same_frame = previous.frame == *target_pose;
    for (idx, &v) in previous.grid.cells.iter().enumerate() {
        let decayed = v * previous.trail_decay;
        if decayed < TRAIL_FLOOR {
            continue;
        }
        if same_frame {
            next.grid.cells[idx] = decayed;
        } else {
            let world = previous
                .frame
                .transform_point(geometry.center_of_index(idx));
            next.grid
                .mark(target_pose.inverse_transform_point(world), decayed);
        }
    }
    for (scan, pose) in observations {
        for p in scan.hit_points() {
            let world = pose.transform_point(p);
            next.grid
                .mark(target_pose.inverse_transform_point(world), 1.0);
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn scan_with(points: &[(usize, f64)], pose: Pose2D, t: f64) -> LaserScan {
        let mut s = LaserScan::empty(360, 6.0, pose, t);
        for &(i, r) in points {
            s.ranges[i] = r;
        }
        s
    }

    #[test]
    fn max_range_scan_is_empty_grid() {
        let s = LaserScan::empty(360, 6.0, Pose2D::default(), 0.0);
        let g = scan_to_local_grid(&s, GridGeometry::local_default());
        assert!(g.cells.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_return_marks_one_cell() {
        let s = scan_with(&[(180, 2.0)], Pose2D::default(), 0.0);
        let geo = GridGeometry::local_default();
        let g = scan_to_local_grid(&s, geo);
        let (i, j) = geo.cell_of(Vec2::new(2.0, 0.0)).unwrap();
        assert_eq!((i, j), (100, 60));
        assert_eq!(g.get(i, j), 1.0);
        assert_eq!(g.cells.iter().filter(|v| **v > 0.0).count(), 1);
    }

    #[test]
    fn stationary_history_layers_identical() {
        let pose = Pose2D::new(1.0, 2.0, 0.3);
        let history: Vec<_> = (0..5)
            .map(|k| {
                (
                    scan_with(&[(10, 1.5), (200, 2.5)], pose, k as f64 * 0.1),
                    pose,
                )
            })
            .collect();
        let st = stack_scans(&history, &pose, GridGeometry::local_default()).unwrap();
        assert_eq!(st.depth(), 5);
        for l in &st.layers[1..] {
            assert_eq!(l, &st.layers[0]);
        }
        assert!(st.layer_ages.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(st.layer_ages[0], 0.0);
    }

    #[test]
    fn stack_errors() {
        let geo = GridGeometry::local_default();
        assert_eq!(
            stack_scans(&[], &Pose2D::default(), geo),
            Err(MapError::EmptyHistory)
        );
        let s = LaserScan::empty(8, 6.0, Pose2D::default(), 1.0);
        let h = vec![(s.clone(), Pose2D::default()), (s, Pose2D::default())];
        assert_eq!(
            stack_scans(&h, &Pose2D::default(), geo),
            Err(MapError::UnorderedHistory)
        );
    }

    #[test]
    fn translated_robot_sees_fixed_point_in_same_cell() {
        // obstacle at world (3, 0); robot moves from x=0 to x=1
        let p0 = Pose2D::new(0.0, 0.0, 0.0);
        let p1 = Pose2D::new(1.0, 0.0, 0.0);
        let s0 = scan_with(&[(180, 3.0)], p0, 0.0);
        let s1 = scan_with(&[(180, 2.0)], p1, 0.1);
        let geo = GridGeometry::local_default();
        let st = stack_scans(&[(s0, p0), (s1, p1)], &p1, geo).unwrap();
        let a: Vec<usize> = st.layers[0].occupied(0.5).collect();
        let b: Vec<usize> = st.layers[1].occupied(0.5).collect();
        assert_eq!(a.len(), 1);
        assert_eq!(b.len(), 1);
        let (ca, cb) = (geo.center_of_index(a[0]), geo.center_of_index(b[0]));
        assert!(ca.distance(cb) <= geo.resolution * 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn moving_obstacle_leaves_trail() {
        // stationary robot; obstacle 2 m ahead moving laterally at 0.4 m/s
        let pose = Pose2D::default();
        let geo = GridGeometry::local_default();
        let history: Vec<_> = (0..5)
            .map(|k| {
                let t = k as f64 * 0.1;
                let y = -0.08 + 0.4 * t;
                let mut s = LaserScan::empty(3600, 6.0, pose, t);
                let ang = y.atan2(2.0);
                let beam = ((ang + PI) / (2.0 * PI / 3600.0)).round() as usize;
                s.ranges[beam] = (4.0 + y * y).sqrt();
                (s, pose)
            })
            .collect();
        let st = stack_scans(&history, &pose, geo).unwrap();
        let centers: Vec<Vec2> = st
            .layers
            .iter()
            .map(|l| geo.center_of_index(l.occupied(0.5).next().unwrap()))
            .collect();
        // oracle: 0.04 m per 0.1 s = 0.8 cells per layer, so one cell step ±1
        for w in centers.windows(2) {
            let dy = (w[0].y - w[1].y) / geo.resolution;
            assert!((dy - 0.8).abs() <= 1.0, "dy {dy}");
        }
        let total = (centers[0].y - centers[4].y) / geo.resolution;
        assert!((total - 3.2).abs() <= 1.0 + 1e-9, "total {total}");
    }

    #[test]
    fn target_map_single_source_matches_local_grid() {
        let robot = Pose2D::new(1.0, 0.5, 0.4);
        let target = Pose2D::new(0.0, 0.0, 0.0);
        let s = scan_with(&[(180, 1.2), (30, 2.0), (300, 0.7)], robot, 0.0);
        let prev = TargetCenteredMap::new(GridGeometry::target_default(), 0.9, target);
        let m = build_target_centered_map(&[(s.clone(), robot)], &target, &prev);
        let mut expect = OccupancyGrid::new(GridGeometry::target_default());
        for p in s.hit_points() {
            expect.mark(robot.transform_point(p), 1.0);
        }
        assert_eq!(m.grid, expect);
    }

    #[test]
    fn shared_point_is_max_merged() {
        let target = Pose2D::default();
        let wall = Vec2::new(2.0, 1.0);
        let r1 = Pose2D::new(0.0, 1.0, 0.0);
        let r2 = Pose2D::new(2.0, -1.0, PI / 2.0);
        let s1 = scan_with(&[(180, wall.distance(r1.position()))], r1, 0.0);
        let s2 = scan_with(&[(180, wall.distance(r2.position()))], r2, 0.0);
        let prev = TargetCenteredMap::new(GridGeometry::target_default(), 0.9, target);
        let m = build_target_centered_map(&[(s1, r1), (s2, r2)], &target, &prev);
        let occ: Vec<f64> = m.grid.cells.iter().copied().filter(|v| *v > 0.0).collect();
        assert_eq!(occ, vec![1.0]);
    }

    #[test]
    fn trails_decay_geometrically() {
        let target = Pose2D::default();
        let geo = GridGeometry::target_default();
        let robot = Pose2D::new(-1.0, 0.0, 0.0);
        let stat = scan_with(&[(180, 2.5)], robot, 0.0);
        let moving = scan_with(&[(90, 1.0)], robot, 0.0);
        let mut m = TargetCenteredMap::new(geo, 0.9, target);
        m = build_target_centered_map(
            &[(stat.clone(), robot), (moving.clone(), robot)],
            &target,
            &m,
        );
        let moved_cell = geo
            .cell_of(robot.transform_point(moving.hit_points().next().unwrap()))
            .unwrap();
        let static_cell = geo.cell_of(Vec2::new(1.5, 0.0)).unwrap();
        for k in 1..=10 {
            m = build_target_centered_map(&[(stat.clone(), robot)], &target, &m);
            assert_eq!(m.grid.get(static_cell.0, static_cell.1), 1.0);
            let v = m.grid.get(moved_cell.0, moved_cell.1);
            // oracle: v_k = 0.9 v_{k-1}, v_0 = 1
            let mut expect = 1.0;
            for _ in 0..k {
                expect *= 0.9;
            }
            assert!((v - expect).abs() < 1e-12, "k={k} v={v}");
        }
    }
}
