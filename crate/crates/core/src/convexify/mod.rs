//! Convex safe regions from coupled separating hyperplanes.
//!
//! Every plane is stored in the `a.x <= b` form with the region on the
//! inside. An obstacle point `q` is separated by a plane when
//! `a.q - b >= margin`.

mod bilevel;
mod constrained;
mod dfo;

pub use bilevel::separate_bilevel;
pub use constrained::{separate_constrained, separate_constrained_with, ConstrainedSettings};

use alloc::vec::Vec;

use crate::geom::{maximize, GeomError, Hyperplane, OrientedRect, Point2, Polyhedron};
use crate::sensing::ObservableSet;
use crate::world::{centerline_frame, Track};

/// Default separation margin (m).
pub const DEFAULT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ConvexifyError {
    #[error("invalid separation problem: {0}")]
    InvalidProblem(&'static str),
    #[error("no separating arrangement found")]
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Satisfiability,
    EuclideanSum,
    HausdorffMax,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [Self::Satisfiability, Self::EuclideanSum, Self::HausdorffMax];

    /// Parses the short ids `sat`, `euclid` and `hausdorff`.
    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "sat" => Some(Self::Satisfiability),
            "euclid" => Some(Self::EuclideanSum),
            "hausdorff" => Some(Self::HausdorffMax),
            _ => None,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::Satisfiability => "sat",
            Self::EuclideanSum => "euclid",
            Self::HausdorffMax => "hausdorff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Constrained,
    Bilevel,
    Mpcc,
}

impl Method {
    pub const ALL: [Method; 3] = [Self::Mpcc, Self::Constrained, Self::Bilevel];

    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "constrained" => Some(Self::Constrained),
            "bilevel" => Some(Self::Bilevel),
            "mpcc" => Some(Self::Mpcc),
            _ => None,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::Constrained => "constrained",
            Self::Bilevel => "bilevel",
            Self::Mpcc => "mpcc",
        }
    }
}

/// Obstacles to separate from the ego footprint and its target.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationProblem {
    pub obstacles: ObservableSet,
    pub ego_corners: [Point2; 4],
    pub target: Point2,
    /// Plane count of the constrained method.
    pub n_planes: usize,
    pub margin: f64,
    /// Planes always added to the region, typically the track borders at
    /// the ego station. Planes that would cut off the ego or the target are
    /// ignored.
    pub fixed_planes: Vec<Hyperplane>,
}

impl SeparationProblem {
    pub fn new(obstacles: ObservableSet, ego: &OrientedRect, target: Point2) -> Self {
        Self {
            obstacles,
            ego_corners: ego.corners(),
            target,
            n_planes: 2,
            margin: DEFAULT_MARGIN,
            fixed_planes: Vec::new(),
        }
    }

    pub fn ego_center(&self) -> Point2 {
        let c = &self.ego_corners;
        (c[0] + c[1] + c[2] + c[3]) * 0.25
    }

    /// Points that must end up inside the region: ego corners and target.
    pub fn keep_points(&self) -> [Point2; 5] {
        let c = &self.ego_corners;
        [c[0], c[1], c[2], c[3], self.target]
    }

    pub fn validate(&self) -> Result<(), ConvexifyError> {
        if self.n_planes == 0 {
            return Err(ConvexifyError::InvalidProblem("n_planes must be at least 1"));
        }
        if !(self.margin >= 0.0) {
            return Err(ConvexifyError::InvalidProblem("margin must be non-negative"));
        }
        let pts = &self.obstacles.points.points;
        if self.keep_points().iter().chain(pts).any(|p| !p.is_finite()) {
            return Err(ConvexifyError::InvalidProblem("non-finite coordinates"));
        }
        let keep = self.keep_points();
        if pts.iter().any(|q| keep.contains(q)) {
            return Err(ConvexifyError::InvalidProblem("obstacle coincides with ego or target"));
        }
        Ok(())
    }

    /// Half-size of the square that bounds every region around the ego.
    fn bound_radius(&self) -> f64 {
        let c = self.ego_center();
        let reach = self
            .keep_points()
            .iter()
            .map(|p| (p.x - c.x).abs().max((p.y - c.y).abs()))
            .fold(0.0, f64::max);
        let d = if self.obstacles.radius_d.is_finite() && self.obstacles.radius_d > 0.0 {
            self.obstacles.radius_d
        } else {
            5.0
        };
        d.max(reach + 2.0 * self.margin)
    }

    /// Fixed planes that keep the ego and target inside, plus the bounding square.
    pub(crate) fn base_planes(&self) -> Vec<Hyperplane> {
        let keep = self.keep_points();
        let mut out: Vec<Hyperplane> = self
            .fixed_planes
            .iter()
            .filter(|h| keep.iter().all(|&p| h.signed_distance(p) <= 0.0))
            .copied()
            .collect();
        let c = self.ego_center();
        let r = self.bound_radius();
        for a in [Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0), Point2::new(0.0, 1.0), Point2::new(0.0, -1.0)] {
            out.push(Hyperplane::new(a, a.dot(c) + r).expect("unit axis"));
        }
        out
    }

    /// Obstacle points not already separated by the base planes.
    pub(crate) fn open_points(&self, base: &[Hyperplane]) -> Vec<Point2> {
        self.obstacles
            .points
            .points
            .iter()
            .copied()
            .filter(|&q| !base.iter().any(|h| h.signed_distance(q) >= self.margin))
            .collect()
    }
}

/// Pushes planes with the given unit normals out as far as the points they
/// are responsible for allow.
///
/// Each point goes to the plane it clears most deeply past the keep points
/// (by at least `2 margin`); every plane then stops `margin` short of its
/// nearest assigned point. Planes left without points are dropped. Returns
/// `None` when some point is cleared by no plane.
pub(crate) fn tighten(normals: &[Point2], open: &[Point2], keep: &[Point2], margin: f64) -> Option<Vec<Hyperplane>> {
    let floor: Vec<f64> = normals
        .iter()
        .map(|a| keep.iter().map(|e| a.dot(*e)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut b = alloc::vec![f64::INFINITY; normals.len()];
    for q in open {
        let mut best: Option<(usize, f64)> = None;
        for (j, a) in normals.iter().enumerate() {
            let depth = a.dot(*q) - floor[j];
            if depth >= 2.0 * margin - 1e-12 && best.map_or(true, |(_, d)| depth > d) {
                best = Some((j, depth));
            }
        }
        let (j, _) = best?;
        b[j] = b[j].min(normals[j].dot(*q) - margin);
    }
    Some(
        normals
            .iter()
            .zip(&b)
            .filter(|(_, b)| b.is_finite())
            .filter_map(|(a, &b)| Hyperplane::new(*a, b).ok())
            .collect(),
    )
}

/// A convex region: separating planes plus the fixed and bounding planes.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeRegion {
    pub polyhedron: Polyhedron,
    /// Separating planes only; their count is the reported `H`.
    pub planes: Vec<Hyperplane>,
    pub quality_r: f64,
}

impl SafeRegion {
    pub(crate) fn assemble(planes: Vec<Hyperplane>, base: &[Hyperplane], ego: Point2, target: Point2) -> Self {
        let polyhedron = Polyhedron::from_below(planes.iter().chain(base).copied());
        let quality_r = inscribed_radius(&polyhedron, ego, target).unwrap_or(0.0);
        Self {
            polyhedron,
            planes,
            quality_r,
        }
    }

    pub fn plane_count(&self) -> usize {
        self.planes.len()
    }
}

/// Brute-force check: every obstacle excluded by some halfspace by at least
/// `margin / 2`, and the ego corners and target inside.
pub fn verify_separation(region: &SafeRegion, p: &SeparationProblem) -> bool {
    if !p.keep_points().iter().all(|&k| region.polyhedron.contains(k)) {
        return false;
    }
    let rows: Vec<Hyperplane> = region.polyhedron.rows().collect();
    p.obstacles
        .points
        .points
        .iter()
        .all(|&q| rows.iter().any(|h| h.signed_distance(q) >= 0.5 * p.margin))
}

/// Largest ball inside the region with its center on `[ego, target]`.
pub fn inscribed_radius_quality(region: &SafeRegion, ego: Point2, target: Point2) -> Result<f64, GeomError> {
    inscribed_radius(&region.polyhedron, ego, target)
}

/// Linear program in `(lambda, R)` with center `ego + lambda (target - ego)`.
pub fn inscribed_radius(poly: &Polyhedron, ego: Point2, target: Point2) -> Result<f64, GeomError> {
    if poly.is_empty() {
        return Err(GeomError::Empty);
    }
    let dir = target - ego;
    let mut a = Vec::with_capacity(2 * (poly.len() + 3));
    let mut b = Vec::with_capacity(poly.len() + 3);
    for row in poly.rows() {
        a.extend_from_slice(&[row.normal().dot(dir), 1.0]);
        b.push(row.offset() - row.normal().dot(ego));
    }
    a.extend_from_slice(&[1.0, 0.0, -1.0, 0.0, 0.0, -1.0]);
    b.extend_from_slice(&[1.0, 0.0, 0.0]);
    let x = maximize(&[0.0, 1.0], &a, &b)?;
    Ok(x[1].max(0.0))
}

/// Plane through `p` along the boundary segment closest to it, oriented so
/// that `inside` is on the `a.x <= b` side.
fn border_tangent(track: &Track, p: Point2, inside: Point2) -> Option<Hyperplane> {
    let (mut best, mut seg) = (f64::INFINITY, None);
    for (a, b) in track.segments() {
        let d = crate::geom::point_segment_distance(p, a, b);
        if d < best {
            best = d;
            seg = Some((a, b));
        }
    }
    let (a, b) = seg?;
    let mut n = (b - a).perp();
    if n.dot(inside - p) > 0.0 {
        n = -n;
    }
    Hyperplane::through(p, n).ok()
}

/// Border planes at the station nearest `ego`, pulled inward by `inset`.
pub fn border_planes(track: &Track, ego: Point2, inset: f64) -> Vec<Hyperplane> {
    let f = centerline_frame(track, ego);
    [f.left, f.right]
        .iter()
        .filter_map(|&p| border_tangent(track, p, f.center))
        .map(|h| h.shifted(-inset))
        .collect()
}

/// Optimisation-free corridor: the two border tangents at the ego station.
///
/// `quality_r` is the inscribed radius centered at `ego`.
pub fn mpcc_corridor(track: &Track, ego: Point2) -> SafeRegion {
    let planes = border_planes(track, ego, 0.0);
    let polyhedron = Polyhedron::from_below(planes.iter().copied());
    let quality_r = inscribed_radius(&polyhedron, ego, ego).unwrap_or(0.0);
    SafeRegion {
        polyhedron,
        planes,
        quality_r,
    }
}

/// Runs one of the three methods on a problem.
pub fn separate(
    method: Method,
    p: &SeparationProblem,
    objective: ObjectiveKind,
    track: &Track,
) -> Result<SafeRegion, ConvexifyError> {
    match method {
        Method::Constrained => separate_constrained(p, objective),
        Method::Bilevel => separate_bilevel(p),
        Method::Mpcc => Ok(mpcc_corridor(track, p.ego_center())),
    }
}
