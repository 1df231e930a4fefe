//! Planar primitives: points, hyperplanes, polyhedra, boxes and oriented
//! rectangles, plus the small linear programs built on them.

mod lp;

pub use lp::{maximize, LpError};

use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::math::{cos, sin, sqrt};

/// Tolerances shared by every module.
pub mod tol {
    /// Membership slack for halfspace and polyhedron tests (meters).
    pub const MEMBERSHIP: f64 = 1e-9;
    /// Feasibility slack for linear-program solutions (meters).
    pub const LP_FEASIBILITY: f64 = 1e-7;
    /// Allowed deviation of a hyperplane normal from unit length.
    pub const NORMAL_UNIT: f64 = 1e-9;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GeomError {
    #[error("hyperplane normal is zero or not finite")]
    DegenerateNormal,
    #[error("polyhedron has no halfspaces")]
    Empty,
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
}

impl From<LpError> for GeomError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Infeasible => GeomError::Infeasible,
            LpError::Unbounded => GeomError::Unbounded,
        }
    }
}

/// A point (or vector) in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from the x axis.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        Self::new(cos(angle), sin(angle))
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    #[inline]
    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = (sin(angle), cos(angle));
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point2 {
    #[inline]
    fn add_assign(&mut self, o: Point2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// The set `{x | a.x = b}` with `a` a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperplane {
    normal: Point2,
    offset: f64,
}

impl Hyperplane {
    /// Normalizes `(a, b)` by `|a|`.
    pub fn new(a: Point2, b: f64) -> Result<Self, GeomError> {
        let n = a.norm();
        if !(n > 0.0) || !n.is_finite() || !b.is_finite() {
            return Err(GeomError::DegenerateNormal);
        }
        Ok(Self {
            normal: a * (1.0 / n),
            offset: b / n,
        })
    }

    /// Plane with normal `(cos phi, sin phi)`; always normalized.
    pub fn from_angle(phi: f64, b: f64) -> Self {
        Self {
            normal: Point2::from_angle(phi),
            offset: b,
        }
    }

    /// Plane through `p` with normal `a` (normalized).
    pub fn through(p: Point2, a: Point2) -> Result<Self, GeomError> {
        let h = Self::new(a, 0.0)?;
        Ok(Self {
            normal: h.normal,
            offset: h.normal.dot(p),
        })
    }

    #[inline]
    pub fn normal(&self) -> Point2 {
        self.normal
    }

    #[inline]
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `a.p - b`; positive strictly inside `H+`.
    #[inline]
    pub fn signed_distance(&self, p: Point2) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// The same plane with the normal flipped.
    pub fn flipped(&self) -> Self {
        Self {
            normal: -self.normal,
            offset: -self.offset,
        }
    }

    /// Parallel plane moved by `delta` along the normal.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            normal: self.normal,
            offset: self.offset + delta,
        }
    }

    /// Applies `x -> scale * x`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            normal: self.normal,
            offset: self.offset * scale,
        }
    }
}

/// Free function form of [`Hyperplane::signed_distance`].
#[inline]
pub fn signed_distance(h: &Hyperplane, p: Point2) -> f64 {
    h.signed_distance(p)
}

/// Which closed halfspace of a hyperplane is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `a.x >= b`
    Above,
    /// `a.x <= b`
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    pub plane: Hyperplane,
    pub side: Side,
}

impl Halfspace {
    /// `{x | a.x <= b}`.
    pub fn below(plane: Hyperplane) -> Self {
        Self {
            plane,
            side: Side::Below,
        }
    }

    pub fn above(plane: Hyperplane) -> Self {
        Self {
            plane,
            side: Side::Above,
        }
    }

    /// The same set written as `n.x <= c` with unit `n`.
    #[inline]
    pub fn as_below(&self) -> Hyperplane {
        match self.side {
            Side::Below => self.plane,
            Side::Above => self.plane.flipped(),
        }
    }

    /// Non-negative inside, negative outside; magnitude is the distance to the boundary.
    #[inline]
    pub fn slack(&self, p: Point2) -> f64 {
        -self.as_below().signed_distance(p)
    }

    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        self.slack(p) >= -tol::MEMBERSHIP
    }
}

/// Intersection of finitely many closed halfspaces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polyhedron {
    pub halfspaces: Vec<Halfspace>,
}

impl Polyhedron {
    pub fn new(halfspaces: Vec<Halfspace>) -> Self {
        Self { halfspaces }
    }

    /// Builds `{x | a_i.x <= b_i}` from planes.
    pub fn from_below(planes: impl IntoIterator<Item = Hyperplane>) -> Self {
        Self {
            halfspaces: planes.into_iter().map(Halfspace::below).collect(),
        }
    }

    /// Axis aligned box as four halfspaces.
    pub fn from_box(b: &Box2) -> Self {
        let h = |a: Point2, c: f64| Halfspace::below(Hyperplane::new(a, c).expect("unit axis"));
        Self::new(alloc::vec![
            h(Point2::new(1.0, 0.0), b.hi.x),
            h(Point2::new(-1.0, 0.0), -b.lo.x),
            h(Point2::new(0.0, 1.0), b.hi.y),
            h(Point2::new(0.0, -1.0), -b.lo.y),
        ])
    }

    pub fn push(&mut self, h: Halfspace) {
        self.halfspaces.push(h);
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.halfspaces.iter().all(|h| h.contains(p))
    }

    /// Smallest slack over all halfspaces (`+inf` when there are none).
    pub fn min_slack(&self, p: Point2) -> f64 {
        self.halfspaces
            .iter()
            .map(|h| h.slack(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Rows `(n, c)` of the `n.x <= c` form.
    pub fn rows(&self) -> impl Iterator<Item = Hyperplane> + '_ {
        self.halfspaces.iter().map(Halfspace::as_below)
    }
}

/// Free function form of [`Polyhedron::contains`].
pub fn polyhedron_contains(p: &Polyhedron, x: Point2) -> bool {
    p.contains(x)
}

/// Center and radius of the largest ball inside `p`.
///
/// Solves `max R  s.t.  n_i.q + R <= c_i, R >= 0` over the normalized rows.
pub fn chebyshev_center(p: &Polyhedron) -> Result<(Point2, f64), GeomError> {
    if p.is_empty() {
        return Err(GeomError::Empty);
    }
    let mut a = Vec::with_capacity(3 * (p.len() + 1));
    let mut b = Vec::with_capacity(p.len() + 1);
    for row in p.rows() {
        a.extend_from_slice(&[row.normal().x, row.normal().y, 1.0]);
        b.push(row.offset());
    }
    a.extend_from_slice(&[0.0, 0.0, -1.0]);
    b.push(0.0);
    let x = maximize(&[0.0, 0.0, 1.0], &a, &b)?;
    Ok((Point2::new(x[0], x[1]), x[2].max(0.0)))
}

/// Axis aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2 {
    pub lo: Point2,
    pub hi: Point2,
}

impl Box2 {
    /// Panics in debug builds when `lo > hi` on either axis.
    pub fn new(lo: Point2, hi: Point2) -> Self {
        debug_assert!(lo.x <= hi.x && lo.y <= hi.y, "inverted box");
        Self { lo, hi }
    }

    pub fn from_bounds(x: (f64, f64), y: (f64, f64)) -> Self {
        Self::new(Point2::new(x.0, y.0), Point2::new(x.1, y.1))
    }

    pub fn point(p: Point2) -> Self {
        Self { lo: p, hi: p }
    }

    /// Smallest box around `points`; `None` when empty.
    pub fn around(points: impl IntoIterator<Item = Point2>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Box2::point(first), |b, p| b.union(&Box2::point(p))))
    }

    pub fn center(&self) -> Point2 {
        self.lo.lerp(self.hi, 0.5)
    }

    pub fn width(&self) -> f64 {
        self.hi.x - self.lo.x
    }

    pub fn height(&self) -> f64 {
        self.hi.y - self.lo.y
    }

    /// Counter-clockwise from `lo`.
    pub fn corners(&self) -> [Point2; 4] {
        [
            self.lo,
            Point2::new(self.hi.x, self.lo.y),
            self.hi,
            Point2::new(self.lo.x, self.hi.y),
        ]
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.lo.x - tol::MEMBERSHIP
            && p.x <= self.hi.x + tol::MEMBERSHIP
            && p.y >= self.lo.y - tol::MEMBERSHIP
            && p.y <= self.hi.y + tol::MEMBERSHIP
    }

    pub fn contains_box(&self, o: &Box2) -> bool {
        self.contains(o.lo) && self.contains(o.hi)
    }

    pub fn union(&self, o: &Box2) -> Box2 {
        Box2 {
            lo: Point2::new(self.lo.x.min(o.lo.x), self.lo.y.min(o.lo.y)),
            hi: Point2::new(self.hi.x.max(o.hi.x), self.hi.y.max(o.hi.y)),
        }
    }

    /// Minkowski sum with `[-rx, rx] x [-ry, ry]`.
    pub fn inflate(&self, rx: f64, ry: f64) -> Box2 {
        Box2 {
            lo: Point2::new(self.lo.x - rx, self.lo.y - ry),
            hi: Point2::new(self.hi.x + rx, self.hi.y + ry),
        }
    }

    pub fn translate(&self, d: Point2) -> Box2 {
        Box2 {
            lo: self.lo + d,
            hi: self.hi + d,
        }
    }
}

/// Rectangle with a heading; `length` runs along the heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Point2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    pub fn new(center: Point2, heading: f64, length: f64, width: f64) -> Self {
        debug_assert!(length > 0.0 && width > 0.0);
        Self {
            center,
            heading,
            length,
            width,
        }
    }

    /// Body-frame corner offsets: front-left, rear-left, rear-right, front-right.
    pub fn local_corners(length: f64, width: f64) -> [Point2; 4] {
        let (hl, hw) = (0.5 * length, 0.5 * width);
        [
            Point2::new(hl, hw),
            Point2::new(-hl, hw),
            Point2::new(-hl, -hw),
            Point2::new(hl, -hw),
        ]
    }

    /// World-frame corners, counter-clockwise.
    pub fn corners(&self) -> [Point2; 4] {
        let (s, c) = (sin(self.heading), cos(self.heading));
        Self::local_corners(self.length, self.width)
            .map(|o| self.center + Point2::new(c * o.x - s * o.y, s * o.x + c * o.y))
    }

    fn axes(&self) -> [Point2; 2] {
        let u = Point2::from_angle(self.heading);
        [u, u.perp()]
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * sqrt(self.length * self.length + self.width * self.width)
    }

    pub fn contains(&self, p: Point2) -> bool {
        let [u, v] = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= 0.5 * self.length + tol::MEMBERSHIP
            && d.dot(v).abs() <= 0.5 * self.width + tol::MEMBERSHIP
    }

    /// Whether the closed segment `[a, b]` touches the rectangle.
    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        let corners = self.corners();
        let mut axes = alloc::vec::Vec::with_capacity(3);
        axes.extend_from_slice(&self.axes());
        let d = b - a;
        if d.norm_sq() > 0.0 {
            axes.push(d.perp());
        }
        axes.iter().all(|&ax| {
            let (lo1, hi1) = project(&corners, ax);
            let (lo2, hi2) = project(&[a, b], ax);
            hi1 >= lo2 && hi2 >= lo1
        })
    }
}

fn project(points: &[Point2], axis: Point2) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let s = p.dot(axis);
        (lo.min(s), hi.max(s))
    })
}

/// Separating-axis test over the four edge normals of the two rectangles.
pub fn rect_overlap(r1: &OrientedRect, r2: &OrientedRect) -> bool {
    let (c1, c2) = (r1.corners(), r2.corners());
    r1.axes().iter().chain(r2.axes().iter()).all(|&ax| {
        let (lo1, hi1) = project(&c1, ax);
        let (lo2, hi2) = project(&c2, ax);
        hi1 >= lo2 && hi2 >= lo1
    })
}

/// Even-odd point in polygon test for a closed polyline (last vertex connects to the first).
pub fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Proper or touching intersection of segments `[p1, p2]` and `[q1, q2]`.
pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point2, b: Point2, p: Point2, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(p1, p2, q1, d1) || on(p1, p2, q2, d2) || on(q1, q2, p1, d3) || on(q1, q2, p2, d4)
}
