//! Ego dynamics, baseline local planners and the safe-region MPC.

mod disparity;
mod mpc;
mod pursuit;
pub mod qp;

pub use disparity::{disparity_extender, extend_disparities, DisparityConfig, GapTarget};
pub use mpc::{solve_mpc, solve_mpc_warm, MpcParams, MpcProblem, MpcSolution, MpcStatus};
pub use pursuit::{pure_pursuit, pursuit_steer, steer_toward, PursuitConfig};

use crate::geom::{OrientedRect, Point2};
use crate::math::{cos, sin, tan};
use crate::reach::Footprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ControlError {
    #[error("control input outside the admissible set")]
    BoundsViolation,
    #[error("path exhausted before the lookahead point")]
    NoTarget,
    #[error("no gap above the minimum range")]
    NoGap,
}

/// Kinematic bicycle state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Forward speed (m/s).
    pub v: f64,
}

impl VehicleState {
    pub const fn new(x: f64, y: f64, heading: f64, v: f64) -> Self {
        Self { x, y, heading, v }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite() && self.v.is_finite()
    }

    pub fn footprint(&self, fp: &Footprint) -> OrientedRect {
        OrientedRect::new(self.position(), self.heading, fp.length, fp.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    /// Longitudinal acceleration (m/s^2).
    pub accel: f64,
    /// Front-wheel steering angle (rad).
    pub steer: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { accel: 0.0, steer: 0.0 };

    pub const fn new(accel: f64, steer: f64) -> Self {
        Self { accel, steer }
    }
}

/// Physical limits shared by the planners, the MPC and the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleLimits {
    pub wheelbase: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub steer_max: f64,
}

impl Default for VehicleLimits {
    fn default() -> Self {
        Self {
            wheelbase: 0.33,
            v_max: 6.0,
            a_max: 4.0,
            steer_max: 0.4189,
        }
    }
}

impl VehicleLimits {
    pub fn admits(&self, u: &ControlInput) -> bool {
        const EPS: f64 = 1e-12;
        u.accel.abs() <= self.a_max + EPS && u.steer.abs() <= self.steer_max + EPS
    }

    /// Projects an input onto the admissible box.
    pub fn clamp(&self, u: ControlInput) -> ControlInput {
        ControlInput {
            accel: u.accel.clamp(-self.a_max, self.a_max),
            steer: u.steer.clamp(-self.steer_max, self.steer_max),
        }
    }

    /// Full braking with straight wheels.
    pub fn brake(&self) -> ControlInput {
        ControlInput::new(-self.a_max, 0.0)
    }
}

/// One explicit Euler step of the kinematic bicycle, without bound checks.
#[inline]
pub fn integrate(s: &VehicleState, u: &ControlInput, dt: f64, wheelbase: f64, v_max: f64) -> VehicleState {
    VehicleState {
        x: s.x + s.v * cos(s.heading) * dt,
        y: s.y + s.v * sin(s.heading) * dt,
        heading: s.heading + s.v / wheelbase * tan(u.steer) * dt,
        v: (s.v + u.accel * dt).clamp(0.0, v_max),
    }
}

/// Checked kinematic bicycle step.
pub fn step_dynamics(
    s: &VehicleState,
    u: &ControlInput,
    dt: f64,
    limits: &VehicleLimits,
) -> Result<VehicleState, ControlError> {
    if !limits.admits(u) {
        return Err(ControlError::BoundsViolation);
    }
    Ok(integrate(s, u, dt, limits.wheelbase, limits.v_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        let n = step_dynamics(&s, &ControlInput::ZERO, 0.1, &VehicleLimits::default()).unwrap();
        assert!((n.x - 0.1).abs() < 1e-15);
        assert_eq!((n.y, n.heading, n.v), (0.0, 0.0, 1.0));
    }

    #[test]
    fn constant_steer_traces_turning_circle() {
        let limits = VehicleLimits::default();
        let delta: f64 = 0.3;
        let radius = limits.wheelbase / delta.tan();
        let mut s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        // turning left: the circle center sits at (0, radius)
        let center = Point2::new(0.0, radius);
        for _ in 0..1000 {
            s = step_dynamics(&s, &ControlInput::new(0.0, delta), 0.001, &limits).unwrap();
            let r = s.position().dist(center);
            assert!((r - radius).abs() / radius < 0.01);
        }
    }

    #[test]
    fn no_motion_at_zero_speed() {
        let s = VehicleState::new(1.0, 2.0, 0.5, 0.0);
        let n = step_dynamics(&s, &ControlInput::new(0.0, 0.4), 0.1, &VehicleLimits::default()).unwrap();
        assert_eq!(n, s);
    }

    #[test]
    fn rejects_out_of_bounds_input() {
        let s = VehicleState::default();
        let limits = VehicleLimits::default();
        assert_eq!(
            step_dynamics(&s, &ControlInput::new(10.0, 0.0), 0.1, &limits),
            Err(ControlError::BoundsViolation)
        );
        assert_eq!(
            step_dynamics(&s, &ControlInput::new(0.0, -1.0), 0.1, &limits),
            Err(ControlError::BoundsViolation)
        );
    }

    #[test]
    fn speed_is_clamped() {
        let limits = VehicleLimits::default();
        let s = VehicleState::new(0.0, 0.0, 0.0, 0.1);
        assert_eq!(step_dynamics(&s, &limits.brake(), 0.1, &limits).unwrap().v, 0.0);
        let s = VehicleState::new(0.0, 0.0, 0.0, limits.v_max);
        assert_eq!(
            step_dynamics(&s, &ControlInput::new(limits.a_max, 0.0), 0.1, &limits).unwrap().v,
            limits.v_max
        );
    }
}
