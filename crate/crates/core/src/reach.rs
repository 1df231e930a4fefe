//! Box reachability of opponents by face-lifting.
//!
//! Opponents follow `x' = vx, y' = vy` with the velocity inside a box. For
//! constant derivative bounds a lift of length `t` from the initial set is
//! exact, so every step box is lifted straight from `X0` rather than chained;
//! this keeps boxes at equal timestamps bit-identical across step sizes.

use alloc::vec::Vec;

use crate::clock::MonotonicClock;
use crate::control::VehicleState;
use crate::geom::{Box2, Point2};
use crate::math::{cos, sin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ReachError {
    #[error("step size must be positive")]
    NonPositiveStep,
    #[error("horizon must be positive")]
    NonPositiveHorizon,
    #[error("budget too small for a single step")]
    BudgetTooSmall,
}

/// Bounds on the time derivative of each coordinate, as `(min, max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivBounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl DerivBounds {
    pub fn from_box(b: &Box2) -> Self {
        Self {
            x: (b.lo.x, b.hi.x),
            y: (b.lo.y, b.hi.y),
        }
    }
}

/// Vehicle outline used to inflate every reach box.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub fn half_diagonal(&self) -> f64 {
        0.5 * crate::math::hypot(self.length, self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicObstacle {
    pub position_box: Box2,
    /// Bounds on `(vx, vy)`.
    pub velocity_box: Box2,
    pub footprint: Footprint,
}

impl KinematicObstacle {
    /// Point initial set at the measured position; velocity is the measured
    /// velocity widened by `slack` on each axis.
    pub fn from_state(s: &VehicleState, slack: f64, footprint: Footprint) -> Self {
        let v = Point2::new(s.v * cos(s.heading), s.v * sin(s.heading));
        Self {
            position_box: Box2::point(s.position()),
            velocity_box: Box2::new(v - Point2::new(slack, slack), v + Point2::new(slack, slack)),
            footprint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeStep {
    pub t: f64,
    pub bounds: Box2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachTube {
    pub steps: Vec<TubeStep>,
    pub horizon: f64,
}

impl ReachTube {
    /// Box at the largest step time not after `t` (clamped to the ends).
    pub fn box_at(&self, t: f64) -> Option<Box2> {
        let i = self.steps.partition_point(|s| s.t <= t);
        self.steps.get(i.saturating_sub(1)).map(|s| s.bounds)
    }
}

/// Advances each lower face by its minimum derivative and each upper face
/// by its maximum derivative.
pub fn face_lifting_step(b: &Box2, deriv: &DerivBounds, dt: f64) -> Result<Box2, ReachError> {
    if !(dt > 0.0) {
        return Err(ReachError::NonPositiveStep);
    }
    Ok(Box2 {
        lo: Point2::new(b.lo.x + deriv.x.0 * dt, b.lo.y + deriv.y.0 * dt),
        hi: Point2::new(b.hi.x + deriv.x.1 * dt, b.hi.y + deriv.y.1 * dt),
    })
}

/// Tube with `steps` equal steps over `[0, horizon]`, i.e. `steps + 1` boxes.
pub fn compute_reachtube(obs: &KinematicObstacle, horizon: f64, steps: usize) -> Result<ReachTube, ReachError> {
    if !(horizon > 0.0) {
        return Err(ReachError::NonPositiveHorizon);
    }
    if steps == 0 {
        return Err(ReachError::BudgetTooSmall);
    }
    let deriv = DerivBounds::from_box(&obs.velocity_box);
    let h = obs.footprint.half_diagonal();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(TubeStep {
        t: 0.0,
        bounds: obs.position_box.inflate(h, h),
    });
    for k in 1..=steps {
        // (k * T) / n keeps t identical for k/n = 2k/2n
        let t = (k as f64 * horizon) / steps as f64;
        let b = face_lifting_step(&obs.position_box, &deriv, t)?;
        out.push(TubeStep { t, bounds: b.inflate(h, h) });
    }
    Ok(ReachTube { steps: out, horizon })
}

/// Anytime variant: doubles the step count while the wall-clock budget
/// lasts, up to `max_steps`, and returns the finest tube finished in time.
pub fn compute_reachtube_anytime(
    obs: &KinematicObstacle,
    horizon: f64,
    budget_micros: u64,
    max_steps: usize,
    clock: &dyn MonotonicClock,
) -> Result<ReachTube, ReachError> {
    if budget_micros == 0 || max_steps == 0 {
        return Err(ReachError::BudgetTooSmall);
    }
    let start = clock.now_micros();
    let mut tube = compute_reachtube(obs, horizon, 1)?;
    let mut n = 1;
    while n < max_steps && clock.now_micros().saturating_sub(start) < budget_micros {
        n = (2 * n).min(max_steps);
        let finer = compute_reachtube(obs, horizon, n)?;
        if clock.now_micros().saturating_sub(start) > budget_micros {
            break;
        }
        tube = finer;
    }
    Ok(tube)
}

/// Smallest box containing every step box.
pub fn tube_hull(tube: &ReachTube) -> Option<Box2> {
    let mut it = tube.steps.iter().map(|s| s.bounds);
    let first = it.next()?;
    Some(it.fold(first, |acc, b| acc.union(&b)))
}
