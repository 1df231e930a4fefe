//! Time sources for anytime and deadline-bounded computations.
//!
//! The core crate has no access to a system clock. Callers that want
//! wall-clock budgets pass in an implementation (the `hyperace` crate ships
//! one backed by `std::time::Instant`).

/// A monotonic microsecond counter.
pub trait MonotonicClock {
    fn now_micros(&self) -> u64;
}

/// Cooperative cancellation checked by iterative solvers between iterations.
pub trait Deadline {
    fn expired(&self) -> bool;
}

/// Never expires.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDeadline;

impl Deadline for NoDeadline {
    fn expired(&self) -> bool {
        false
    }
}

/// Expires once `clock` passes `start + budget`.
pub struct ClockDeadline<'a> {
    clock: &'a dyn MonotonicClock,
    end_micros: u64,
}

impl<'a> ClockDeadline<'a> {
    pub fn after(clock: &'a dyn MonotonicClock, budget_micros: u64) -> Self {
        let end_micros = clock.now_micros().saturating_add(budget_micros);
        Self { clock, end_micros }
    }
}

impl Deadline for ClockDeadline<'_> {
    fn expired(&self) -> bool {
        self.clock.now_micros() >= self.end_micros
    }
}
