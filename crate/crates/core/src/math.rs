// Float helpers that `core` does not provide.

pub(crate) use libm::{atan, atan2, ceil, cos, floor, hypot, sin, sqrt, tan};

use core::f64::consts::PI;

/// Wraps an angle to `(-pi, pi]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a - two_pi * floor((a + PI) / two_pi);
    if r <= -PI {
        r += two_pi;
    }
    r
}
