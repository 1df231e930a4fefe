use super::{ControlError, ControlInput, VehicleLimits, VehicleState};
use crate::geom::Point2;
use crate::math::{atan, atan2, sin, wrap_angle};
use crate::world::{centerline_frame, Track};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuitConfig {
    /// Arc distance from the closest path point to the target (m).
    pub lookahead: f64,
    /// Signed offset of the followed line from the centerline, positive to the left (m).
    pub lateral_offset: f64,
    /// Cruise speed of the speed profile (m/s).
    pub speed: f64,
    /// Proportional gain from speed error to acceleration (1/s).
    pub speed_gain: f64,
}

impl Default for PursuitConfig {
    fn default() -> Self {
        Self {
            lookahead: 1.5,
            lateral_offset: 0.0,
            speed: 3.0,
            speed_gain: 2.0,
        }
    }
}

/// Steering angle that puts a target at bearing `alpha` on the pursuit arc.
pub fn pursuit_steer(alpha: f64, lookahead: f64, wheelbase: f64) -> f64 {
    let kappa = 2.0 * sin(alpha) / lookahead;
    atan(wheelbase * kappa)
}

/// Pursuit steering toward an arbitrary point, using its distance as lookahead.
pub fn steer_toward(s: &VehicleState, target: Point2, limits: &VehicleLimits) -> f64 {
    let d = target - s.position();
    let dist = d.norm();
    if dist < 1e-9 {
        return 0.0;
    }
    let alpha = wrap_angle(atan2(d.y, d.x) - s.heading);
    pursuit_steer(alpha, dist, limits.wheelbase).clamp(-limits.steer_max, limits.steer_max)
}

/// Pure pursuit along the track centerline (shifted by `lateral_offset`).
///
/// The target is the point `lookahead` meters of arc past the closest
/// centerline station; closed tracks wrap around.
pub fn pure_pursuit(
    s: &VehicleState,
    track: &Track,
    cfg: &PursuitConfig,
    limits: &VehicleLimits,
) -> Result<(Point2, ControlInput), ControlError> {
    let frame = centerline_frame(track, s.position());
    let st = frame.s + cfg.lookahead;
    if !track.is_closed() && st > track.length() {
        return Err(ControlError::NoTarget);
    }
    let normal = track.samples()[track.index_at(st)].tangent.perp();
    let target = track.point_at(st) + normal * cfg.lateral_offset;
    let d = target - s.position();
    let alpha = wrap_angle(atan2(d.y, d.x) - s.heading);
    let steer = pursuit_steer(alpha, cfg.lookahead, limits.wheelbase).clamp(-limits.steer_max, limits.steer_max);
    // ease off in proportion to the steering effort
    let v_cmd = cfg.speed * (1.0 - 0.5 * steer.abs() / limits.steer_max);
    let accel = (cfg.speed_gain * (v_cmd - s.v)).clamp(-limits.a_max, limits.a_max);
    Ok((target, ControlInput::new(accel, steer)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::tests::straight_track;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    #[test]
    fn dead_ahead_is_straight() {
        assert_eq!(pursuit_steer(0.0, 2.0, 0.33), 0.0);
        let track = straight_track(1.0, 20.0, 0.1);
        let s = VehicleState::new(2.0, 0.0, 0.0, 1.0);
        let (target, u) = pure_pursuit(&s, &track, &PursuitConfig::default(), &VehicleLimits::default()).unwrap();
        assert!(target.dist(Point2::new(3.5, 0.0)) < 1e-9);
        assert!(u.steer.abs() < 1e-12);
    }

    #[test]
    fn bearing_thirty_degrees() {
        // kappa = 2 sin(pi/6) / 2 = 0.5, delta = atan(0.33 * 0.5)
        let d = pursuit_steer(PI / 6.0, 2.0, 0.33);
        assert!((d - 0.165f64.atan()).abs() < 1e-12);
        assert!((d - 0.1636).abs() < 1e-4);
    }

    #[test]
    fn mirrored_target_negates_steering() {
        let limits = VehicleLimits::default();
        let s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        let l = steer_toward(&s, Point2::new(2.0, 0.7), &limits);
        let r = steer_toward(&s, Point2::new(2.0, -0.7), &limits);
        assert!(l > 0.0 && (l + r).abs() < 1e-15);
    }

    #[test]
    fn open_path_exhausts() {
        let track = straight_track(1.0, 5.0, 0.1);
        let s = VehicleState::new(4.5, 0.0, 0.0, 1.0);
        let r = pure_pursuit(&s, &track, &PursuitConfig::default(), &VehicleLimits::default());
        assert_eq!(r, Err(ControlError::NoTarget));
    }

    #[test]
    fn closed_track_wraps() {
        let track = Track::porto_like();
        let last = track.samples().last().unwrap();
        let s = VehicleState::new(last.point.x, last.point.y, atan2(last.tangent.y, last.tangent.x), 2.0);
        let (target, _) = pure_pursuit(&s, &track, &PursuitConfig::default(), &VehicleLimits::default()).unwrap();
        let expected = track.point_at(last.s + 1.5 - track.length());
        assert!(target.dist(expected) < 1e-9);
    }

    #[test]
    fn lateral_offset_shifts_target() {
        let track = straight_track(1.0, 20.0, 0.1);
        let cfg = PursuitConfig { lateral_offset: 0.5, ..Default::default() };
        let s = VehicleState::new(2.0, 0.0, 0.0, 1.0);
        let (target, u) = pure_pursuit(&s, &track, &cfg, &VehicleLimits::default()).unwrap();
        assert!(target.dist(Point2::new(3.5, 0.5)) < 1e-9);
        assert!(u.steer > 0.0);
    }

    proptest! {
        #[test]
        fn steering_is_odd(alpha in -3.0..3.0f64, look in 0.2..5.0f64) {
            prop_assert_eq!(pursuit_steer(-alpha, look, 0.33), -pursuit_steer(alpha, look, 0.33));
        }
    }
}
