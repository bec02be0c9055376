use super::log::EpisodeLog;
use crate::geometry::Vec2;
use crate::world::svg::SvgCanvas;

/// Trajectory plate: obstacles, one path per agent and final positions.
pub fn log_to_svg(log: &EpisodeLog) -> String {
    let mut c = SvgCanvas::new(log.meta.bounds);
    c.obstacles(&log.meta.obstacles);
    let path = |f: &dyn Fn(&super::log::Tick) -> Vec2| log.ticks.iter().map(f).collect::<Vec<_>>();
    for i in 0..log.meta.pedestrian_radii.len() {
        c.polyline("pedestrian-path", &path(&|t| t.pedestrians[i].position()));
    }
    c.polyline("target-path", &path(&|t| t.target.position()));
    for i in 0..log.meta.robot_radii.len() {
        c.polyline("follower-path", &path(&|t| t.robots[i].position()));
    }
    if let Some(last) = log.ticks.last() {
        for p in &last.pedestrians {
            c.disc("pedestrian", p.position(), p.radius);
        }
        for r in &last.robots {
            c.disc("robot", r.position(), r.radius);
        }
        c.disc("target", last.target.position(), last.target.radius);
    }
    c.finish()
}
