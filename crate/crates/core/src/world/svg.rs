//! Minimal SVG drawing of worlds and trajectories.

use std::fmt::Write as _;

use super::{Bounds, Obstacle, WorldState};
use crate::geometry::Vec2;

const SCALE: f64 = 50.0;

pub struct SvgCanvas {
    bounds: Bounds,
    body: String,
}

impl SvgCanvas {
    pub fn new(bounds: Bounds) -> Self {
        Self {
            bounds,
            body: String::new(),
        }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        (
            (p.x - self.bounds.min.x) * SCALE,
            (self.bounds.max.y - p.y) * SCALE,
        )
    }

    pub fn obstacles(&mut self, obstacles: &[Obstacle]) {
        for o in obstacles {
            match *o {
                Obstacle::Circle { center, radius } => {
                    let (x, y) = self.map(center);
                    let _ = writeln!(
                        self.body,
                        r#"<circle class="obstacle" cx="{x:.2}" cy="{y:.2}" r="{:.2}"/>"#,
                        radius * SCALE
                    );
                }
                Obstacle::Segment { a, b } => {
                    let (x1, y1) = self.map(a);
                    let (x2, y2) = self.map(b);
                    let _ = writeln!(
                        self.body,
                        r#"<line class="wall" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#
                    );
                }
            }
        }
    }

    pub fn disc(&mut self, class: &str, center: Vec2, radius: f64) {
        let (x, y) = self.map(center);
        let _ = writeln!(
            self.body,
            r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="{:.2}"/>"#,
            radius * SCALE
        );
    }

    pub fn polyline(&mut self, class: &str, points: &[Vec2]) {
        if points.is_empty() {
            return;
        }
        let pts: Vec<String> = points
            .iter()
            .map(|p| {
                let (x, y) = self.map(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline class="{class}" points="{}"/>"#,
            pts.join(" ")
        );
    }

    pub fn finish(self) -> String {
        let w = (self.bounds.max.x - self.bounds.min.x) * SCALE;
        let h = (self.bounds.max.y - self.bounds.min.y) * SCALE;
        format!(
            concat!(
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
                "\n<style>",
                ".obstacle{{fill:#555}} .wall{{stroke:#222;stroke-width:4}} ",
                ".target{{fill:#2a2}} .robot{{fill:#c22}} .pedestrian{{fill:#88f}} ",
                ".target-path{{fill:none;stroke:#2a2;stroke-width:2}} ",
                ".follower-path{{fill:none;stroke:#c22;stroke-width:1.5}} ",
                ".pedestrian-path{{fill:none;stroke:#88f;stroke-width:1;stroke-dasharray:4 3}}",
                "</style>\n",
                r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white" stroke="black"/>"#,
                "\n{body}</svg>\n"
            ),
            w = w,
            h = h,
            body = self.body
        )
    }
}

/// Snapshot of the current world state.
pub fn snapshot_svg(world: &WorldState) -> String {
    let mut c = SvgCanvas::new(world.bounds);
    c.obstacles(&world.obstacles);
    for p in &world.pedestrians {
        c.disc("pedestrian", p.agent.position(), p.agent.radius);
    }
    for r in &world.robots {
        c.disc("robot", r.position(), r.radius);
    }
    c.disc(
        "target",
        world.target.agent.position(),
        world.target.agent.radius,
    );
    c.finish()
}
