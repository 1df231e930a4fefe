//! Closed-loop obstacle avoidance for 2D autonomous racing.
//!
//! The crate is `no_std` (it needs `alloc`) and purely computational: LiDAR
//! ray casting against polyline worlds, box reachability of opponents,
//! convexification of the observable free space with coupled separating
//! hyperplanes, a sequential-QP nonlinear MPC, baseline planners and a
//! deterministic fixed-step simulator. File formats, timing and the command
//! line live in the `hyperace` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod clock;
pub mod control;
pub mod convexify;
pub mod geom;
pub mod linalg;
pub mod reach;
pub mod sensing;
pub mod sim;
pub mod world;

mod math;

pub use clock::{Deadline, MonotonicClock, NoDeadline};
pub use geom::{Box2, Halfspace, Hyperplane, OrientedRect, Point2, Polyhedron, Side};

