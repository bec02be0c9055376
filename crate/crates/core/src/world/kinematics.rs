use crate::geometry::{normalize_angle, Pose2D, Twist, TwistLimits};

/// Exact arc integration of a unicycle over `dt`. Commands outside the
/// follower envelope are clamped.
pub fn integrate_unicycle(pose: Pose2D, cmd: Twist, dt: f64) -> Pose2D {
    let limits = TwistLimits::FOLLOWER;
    let cmd = if limits.contains(&cmd) {
        cmd
    } else {
        log::warn!("clamping out-of-range command {cmd:?}");
        cmd.clamp_to(&limits)
    };
    let Twist { v, w } = cmd;
    let th = pose.theta;
    let (x, y) = if w.abs() < 1e-12 {
        (pose.x + v * dt * th.cos(), pose.y + v * dt * th.sin())
    } else {
        let th2 = th + w * dt;
        let k = v / w;
        (
            pose.x + k * (th2.sin() - th.sin()),
            pose.y - k * (th2.cos() - th.cos()),
        )
    };
    Pose2D {
        x,
        y,
        theta: normalize_angle(th + w * dt),
    }
}
