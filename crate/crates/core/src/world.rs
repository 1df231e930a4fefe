//! Tracks, static obstacles and scenarios, with exact ray casting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::control::VehicleState;
use crate::geom::{point_in_polygon, segments_intersect, OrientedRect, Point2};
use crate::math::{cos, floor, sin};

/// Spacing of the precomputed centerline samples (meters).
pub const CENTERLINE_SPACING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("invariant violated: {invariant} ({detail})")]
    Validation {
        invariant: &'static str,
        detail: String,
    },
}

fn invalid(invariant: &'static str, detail: String) -> WorldError {
    WorldError::Validation { invariant, detail }
}

/// One precomputed centerline station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterSample {
    pub s: f64,
    pub point: Point2,
    /// Unit direction of travel.
    pub tangent: Point2,
    /// Border point reached along `+tangent.perp()`.
    pub left: Point2,
    /// Border point reached along `-tangent.perp()`.
    pub right: Point2,
}

impl CenterSample {
    pub fn left_width(&self) -> f64 {
        self.point.dist(self.left)
    }

    pub fn right_width(&self) -> f64 {
        self.point.dist(self.right)
    }
}

/// Result of [`centerline_frame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub s: f64,
    pub center: Point2,
    pub left: Point2,
    pub right: Point2,
    pub tangent: Point2,
}

/// A race track bounded by two polylines.
///
/// Closed tracks are loops (`inner` inside `outer`); open tracks are
/// corridors whose drivable area is the polygon `inner ++ reverse(outer)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    inner: Vec<Point2>,
    outer: Vec<Point2>,
    closed: bool,
    centerline_input: Vec<Point2>,
    spacing: f64,
    samples: Vec<CenterSample>,
    length: f64,
}

impl Track {
    /// Builds a track and precomputes centerline stations every `spacing` meters.
    pub fn new(
        inner: Vec<Point2>,
        outer: Vec<Point2>,
        centerline: Vec<Point2>,
        closed: bool,
        spacing: f64,
    ) -> Result<Self, WorldError> {
        if inner.len() < 2 || outer.len() < 2 {
            return Err(invalid("boundary has at least two vertices", String::new()));
        }
        if closed && (inner.len() < 3 || outer.len() < 3) {
            return Err(invalid("closed boundary has at least three vertices", String::new()));
        }
        if centerline.len() < 2 {
            return Err(invalid("centerline has at least two vertices", String::new()));
        }
        if !(spacing > 0.0) {
            return Err(invalid("centerline spacing is positive", format!("{spacing}")));
        }
        if inner.iter().chain(&outer).chain(&centerline).any(|p| !p.is_finite()) {
            return Err(invalid("finite coordinates", String::new()));
        }
        let mut track = Track {
            inner,
            outer,
            closed,
            centerline_input: centerline,
            spacing,
            samples: Vec::new(),
            length: 0.0,
        };
        track.resample(spacing)?;
        Ok(track)
    }

    fn resample(&mut self, spacing: f64) -> Result<(), WorldError> {
        let mut pts = self.centerline_input.clone();
        if self.closed && pts.first() != pts.last() {
            pts.push(pts[0]);
        }
        let mut cum = Vec::with_capacity(pts.len());
        cum.push(0.0);
        for w in pts.windows(2) {
            cum.push(cum.last().unwrap() + w[0].dist(w[1]));
        }
        let length = *cum.last().unwrap();
        if !(length > 0.0) {
            return Err(invalid("centerline has positive length", String::new()));
        }
        let count = if self.closed {
            (floor(length / spacing) as usize).max(1)
        } else {
            floor(length / spacing + 1e-9) as usize + 1
        };
        let segs: Vec<(Point2, Point2)> = self.segments().collect();
        let mut samples = Vec::with_capacity(count);
        let mut seg = 0;
        for i in 0..count {
            let s = i as f64 * spacing;
            while seg + 2 < cum.len() && cum[seg + 1] <= s {
                seg += 1;
            }
            let (a, b) = (pts[seg], pts[seg + 1]);
            let seg_len = cum[seg + 1] - cum[seg];
            let t = if seg_len > 0.0 { ((s - cum[seg]) / seg_len).min(1.0) } else { 0.0 };
            let point = a.lerp(b, t);
            let d = b - a;
            let tangent = d * (1.0 / d.norm());
            let n = tangent.perp();
            let hit = |dir: Point2| -> Result<Point2, WorldError> {
                cast_segments(point, dir, f64::INFINITY, segs.iter().copied())
                    .map(|t| point + dir * t)
                    .ok_or_else(|| invalid("centerline lies between the boundaries", format!("no border normal to s={s:.2}")))
            };
            samples.push(CenterSample {
                s,
                point,
                tangent,
                left: hit(n)?,
                right: hit(-n)?,
            });
        }
        self.samples = samples;
        self.length = length;
        Ok(())
    }

    /// Loop with constant half-width around a closed counter-clockwise centerline.
    pub fn from_closed_centerline(centerline: Vec<Point2>, half_width: f64) -> Result<Self, WorldError> {
        let n = centerline.len();
        let mut inner = Vec::with_capacity(n);
        let mut outer = Vec::with_capacity(n);
        for i in 0..n {
            let prev = centerline[(i + n - 1) % n];
            let next = centerline[(i + 1) % n];
            let t = next - prev;
            let normal = t.perp() * (1.0 / t.norm());
            inner.push(centerline[i] + normal * half_width);
            outer.push(centerline[i] - normal * half_width);
        }
        Self::new(inner, outer, centerline, true, CENTERLINE_SPACING)
    }

    /// Short oval with one chicane on the back straight (about 134 m).
    pub fn porto_like() -> Self {
        let (straight, radius, chicane) = (24.0, 14.0, 1.2);
        let mut pts = Vec::new();
        let step = 0.5;
        let n_straight = (straight / step) as usize;
        let n_arc = 90;
        // bottom straight, left to right, with a cosine chicane
        for i in 0..n_straight {
            let u = i as f64 / n_straight as f64;
            let y = -radius + chicane * 0.5 * (1.0 - cos(2.0 * PI * u));
            pts.push(Point2::new(-straight / 2.0 + u * straight, y));
        }
        for i in 0..n_arc {
            let a = -PI / 2.0 + PI * i as f64 / n_arc as f64;
            pts.push(Point2::new(straight / 2.0 + radius * cos(a), radius * sin(a)));
        }
        for i in 0..n_straight {
            let u = i as f64 / n_straight as f64;
            pts.push(Point2::new(straight / 2.0 - u * straight, radius));
        }
        for i in 0..n_arc {
            let a = PI / 2.0 + PI * i as f64 / n_arc as f64;
            pts.push(Point2::new(-straight / 2.0 + radius * cos(a), radius * sin(a)));
        }
        Self::from_closed_centerline(pts, 1.6).expect("bundled track is valid")
    }

    /// Longer lobed circuit with six corners (about 140 m).
    pub fn walker_like() -> Self {
        let n = 360;
        let pts = (0..n)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n as f64;
                let r = 22.0 + 3.0 * cos(3.0 * th) + 1.5 * sin(2.0 * th);
                Point2::new(r * cos(th), r * sin(th))
            })
            .collect();
        Self::from_closed_centerline(pts, 1.3).expect("bundled track is valid")
    }

    /// Bundled track by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "porto-like" => Some(Self::porto_like()),
            "walker-like" => Some(Self::walker_like()),
            _ => None,
        }
    }

    pub fn inner(&self) -> &[Point2] {
        &self.inner
    }

    pub fn outer(&self) -> &[Point2] {
        &self.outer
    }

    pub fn centerline_input(&self) -> &[Point2] {
        &self.centerline_input
    }

    /// Requested spacing of the centerline stations.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn samples(&self) -> &[CenterSample] {
        &self.samples
    }

    /// Centerline length in meters.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Boundary segments of both polylines.
    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        polyline_segments(&self.inner, self.closed).chain(polyline_segments(&self.outer, self.closed))
    }

    /// Point-in-drivable-area test.
    pub fn contains(&self, p: Point2) -> bool {
        if self.closed {
            point_in_polygon(p, &self.outer) && !point_in_polygon(p, &self.inner)
        } else {
            let mut poly = self.inner.clone();
            poly.extend(self.outer.iter().rev());
            point_in_polygon(p, &poly)
        }
    }

    /// Whether `rect` lies in the drivable area without touching a boundary.
    pub fn contains_rect(&self, rect: &OrientedRect) -> bool {
        rect.corners().iter().all(|&c| self.contains(c))
            && !self.segments().any(|(a, b)| rect.intersects_segment(a, b))
    }

    /// Station `s` mapped into `[0, length)` for loops, clamped for corridors.
    pub fn wrap_s(&self, s: f64) -> f64 {
        if self.closed {
            let r = s - self.length * floor(s / self.length);
            if r >= self.length {
                0.0
            } else {
                r
            }
        } else {
            s.clamp(0.0, self.length)
        }
    }

    /// Sample index nearest to station `s`.
    pub fn index_at(&self, s: f64) -> usize {
        let spacing = if self.samples.len() > 1 { self.samples[1].s } else { 1.0 };
        let i = (self.wrap_s(s) / spacing + 0.5) as usize;
        if self.closed {
            i % self.samples.len()
        } else {
            i.min(self.samples.len() - 1)
        }
    }

    /// Centerline point at station `s`, interpolated between samples.
    pub fn point_at(&self, s: f64) -> Point2 {
        let n = self.samples.len();
        let spacing = if n > 1 { self.samples[1].s } else { 1.0 };
        let s = self.wrap_s(s);
        let k = floor(s / spacing) as usize;
        if !self.closed && k + 1 >= n {
            return self.samples[n - 1].point;
        }
        let a = self.samples[k % n];
        let b = self.samples[(k + 1) % n];
        let t = (s - a.s) / spacing;
        a.point.lerp(b.point, t.clamp(0.0, 1.0))
    }

    /// Validates the track invariants.
    pub fn validate(&self) -> Result<(), WorldError> {
        for (name, poly) in [("inner", &self.inner), ("outer", &self.outer)] {
            if !is_simple(poly, self.closed) {
                return Err(invalid("boundaries are simple polylines", format!("{name} boundary self-intersects")));
            }
        }
        let crosses = polyline_segments(&self.inner, self.closed).any(|(a, b)| {
            polyline_segments(&self.outer, self.closed).any(|(c, d)| segments_intersect(a, b, c, d))
        });
        if crosses {
            return Err(invalid("inner boundary strictly inside outer", "boundaries intersect".into()));
        }
        if self.closed && !self.inner.iter().all(|&p| point_in_polygon(p, &self.outer)) {
            return Err(invalid("inner boundary strictly inside outer", "inner vertex outside outer".into()));
        }
        // open corridors end on their caps, so their end stations are not checked
        let interior = if self.closed { &self.samples[..] } else { &self.samples[1..self.samples.len() - 1] };
        if let Some(bad) = interior.iter().find(|c| !self.contains(c.point)) {
            return Err(invalid("centerline lies between the boundaries", format!("s={:.2}", bad.s)));
        }
        Ok(())
    }
}

fn polyline_segments(poly: &[Point2], closed: bool) -> impl Iterator<Item = (Point2, Point2)> + '_ {
    let n = poly.len();
    let count = if closed { n } else { n.saturating_sub(1) };
    (0..count).map(move |i| (poly[i], poly[(i + 1) % n]))
}

fn is_simple(poly: &[Point2], closed: bool) -> bool {
    let segs: Vec<(Point2, Point2)> = polyline_segments(poly, closed).collect();
    let m = segs.len();
    for i in 0..m {
        for j in i + 1..m {
            let adjacent = j == i + 1 || (closed && i == 0 && j == m - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(segs[i].0, segs[i].1, segs[j].0, segs[j].1) {
                return false;
            }
        }
    }
    true
}

/// Nearest centerline station to `p` (ties go to the smaller `s`).
pub fn centerline_frame(track: &Track, p: Point2) -> Frame {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in track.samples.iter().enumerate() {
        let d = (c.point - p).norm_sq();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    let c = track.samples[best];
    Frame {
        index: best,
        s: c.s,
        center: c.point,
        left: c.left,
        right: c.right,
        tangent: c.tangent,
    }
}

/// A polygonal static obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticObstacle {
    pub polygon: Vec<Point2>,
}

impl StaticObstacle {
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        polyline_segments(&self.polygon, true)
    }
}

/// One agent of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub initial: VehicleState,
    /// Controller id: `pp`, `de`, `mpcc` or `mpc_hype`.
    pub controller: String,
    /// Local planner feeding MPC controllers: `pp` or `de`.
    pub planner: String,
    pub length: f64,
    pub width: f64,
}

impl AgentSpec {
    pub fn footprint(&self, state: &VehicleState) -> OrientedRect {
        OrientedRect::new(state.position(), state.heading, self.length, self.width)
    }
}

/// Everything needed to run an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub track: Track,
    pub static_obstacles: Vec<StaticObstacle>,
    pub agents: Vec<AgentSpec>,
    pub seed: u64,
    /// Episode duration in seconds.
    pub duration: f64,
}

impl Scenario {
    /// Checks every scenario invariant; the error names the one violated.
    pub fn validate(&self) -> Result<(), WorldError> {
        self.track.validate()?;
        if self.agents.is_empty() {
            return Err(invalid("at least one agent", String::new()));
        }
        if !(self.duration >= 0.0) {
            return Err(invalid("duration is non-negative", format!("{}", self.duration)));
        }
        for (k, o) in self.static_obstacles.iter().enumerate() {
            if o.polygon.len() < 3 || !is_simple(&o.polygon, true) {
                return Err(invalid("obstacle is a simple polygon", format!("obstacle {k}")));
            }
            let inside = o.polygon.iter().all(|&p| self.track.contains(p))
                && !o
                    .edges()
                    .any(|(a, b)| self.track.segments().any(|(c, d)| segments_intersect(a, b, c, d)));
            if !inside {
                return Err(invalid("obstacle inside the drivable region", format!("obstacle {k}")));
            }
        }
        for (k, a) in self.agents.iter().enumerate() {
            if !(a.length > 0.0 && a.width > 0.0) {
                return Err(invalid("agent footprint is positive", format!("agent {k}")));
            }
            if !a.initial.is_finite() {
                return Err(invalid("finite agent state", format!("agent {k}")));
            }
            let rect = a.footprint(&a.initial);
            if !self.track.contains_rect(&rect) {
                return Err(invalid("agents start inside the track", format!("agent {k}")));
            }
            let hits_obstacle = self.static_obstacles.iter().any(|o| {
                o.polygon.iter().any(|&p| rect.contains(p))
                    || rect.corners().iter().any(|&c| point_in_polygon(c, &o.polygon))
                    || o.edges().any(|(p, q)| rect.intersects_segment(p, q))
            });
            if hits_obstacle {
                return Err(invalid("agents start collision-free", format!("agent {k} overlaps an obstacle")));
            }
        }
        for i in 0..self.agents.len() {
            for j in i + 1..self.agents.len() {
                let (a, b) = (&self.agents[i], &self.agents[j]);
                if crate::geom::rect_overlap(&a.footprint(&a.initial), &b.footprint(&b.initial)) {
                    return Err(invalid("agents start collision-free", format!("agents {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    /// All static segments: track boundaries and obstacle edges.
    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.track
            .segments()
            .chain(self.static_obstacles.iter().flat_map(|o| o.edges()))
    }
}

/// Distance along the unit direction `dir` to the first segment hit.
fn cast_segments(
    origin: Point2,
    dir: Point2,
    max_range: f64,
    segments: impl Iterator<Item = (Point2, Point2)>,
) -> Option<f64> {
    let mut best = max_range;
    let mut found = false;
    for (a, b) in segments {
        if let Some(t) = ray_segment(origin, dir, a, b) {
            if t < best || (!found && t <= best) {
                best = t;
                found = true;
            }
        }
    }
    found.then_some(best)
}

#[inline]
fn ray_segment(o: Point2, d: Point2, a: Point2, b: Point2) -> Option<f64> {
    let e = b - a;
    let denom = d.cross(e);
    if denom.abs() < 1e-15 {
        return None;
    }
    let ao = a - o;
    let t = ao.cross(e) / denom;
    let u = ao.cross(d) / denom;
    (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(t)
}

/// Distance from `origin` along `angle` to the nearest boundary or obstacle
/// edge, or `max_range` when nothing is hit within range.
pub fn raycast(origin: Point2, angle: f64, scenario: &Scenario, max_range: f64) -> f64 {
    let dir = Point2::from_angle(angle);
    cast_segments(origin, dir, max_range, scenario.segments()).unwrap_or(max_range)
}

/// Static segments bucketed in a uniform grid, plus per-query dynamic rectangles.
#[derive(Debug, Clone)]
pub struct Scene {
    segments: Vec<(Point2, Point2)>,
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    // CSR layout: cell k owns `items[starts[k]..starts[k + 1]]`
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl Scene {
    pub fn new(scenario: &Scenario) -> Self {
        Self::from_segments(scenario.segments().collect(), 1.0)
    }

    pub fn from_segments(segments: Vec<(Point2, Point2)>, cell: f64) -> Self {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(a, b) in &segments {
            for p in [a, b] {
                lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        if segments.is_empty() {
            lo = Point2::ORIGIN;
            hi = Point2::ORIGIN;
        }
        let origin = lo - Point2::new(cell, cell);
        let nx = ((hi.x - origin.x) / cell) as usize + 2;
        let ny = ((hi.y - origin.y) / cell) as usize + 2;
        let mut buckets: Vec<Vec<u32>> = alloc::vec![Vec::new(); nx * ny];
        for (k, &(a, b)) in segments.iter().enumerate() {
            let (i0, j0) = Self::cell_of(origin, cell, Point2::new(a.x.min(b.x), a.y.min(b.y)));
            let (i1, j1) = Self::cell_of(origin, cell, Point2::new(a.x.max(b.x), a.y.max(b.y)));
            for j in j0..=j1.min(ny - 1) {
                for i in i0..=i1.min(nx - 1) {
                    buckets[j * nx + i].push(k as u32);
                }
            }
        }
        let mut starts = Vec::with_capacity(nx * ny + 1);
        let mut items = Vec::new();
        starts.push(0);
        for b in buckets {
            items.extend(b);
            starts.push(items.len() as u32);
        }
        Self {
            segments,
            origin,
            cell,
            nx,
            ny,
            starts,
            items,
        }
    }

    fn cell_of(origin: Point2, cell: f64, p: Point2) -> (usize, usize) {
        let i = floor((p.x - origin.x) / cell).max(0.0) as usize;
        let j = floor((p.y - origin.y) / cell).max(0.0) as usize;
        (i, j)
    }

    /// Grid-accelerated cast against static segments and `dynamic` rectangles.
    pub fn raycast(&self, origin: Point2, angle: f64, max_range: f64, dynamic: &[OrientedRect]) -> f64 {
        let dir = Point2::from_angle(angle);
        let mut best = self.cast_static(origin, dir, max_range);
        for r in dynamic {
            let c = r.corners();
            let edges = (0..4).map(|i| (c[i], c[(i + 1) % 4]));
            if let Some(t) = cast_segments(origin, dir, best, edges) {
                best = best.min(t);
            }
        }
        best
    }

    fn cast_static(&self, o: Point2, d: Point2, max_range: f64) -> f64 {
        let local = o - self.origin;
        let mut i = floor(local.x / self.cell) as i64;
        let mut j = floor(local.y / self.cell) as i64;
        if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
            return cast_segments(o, d, max_range, self.segments.iter().copied()).unwrap_or(max_range);
        }
        let step_i: i64 = if d.x > 0.0 { 1 } else { -1 };
        let step_j: i64 = if d.y > 0.0 { 1 } else { -1 };
        let next_boundary = |idx: i64, step: i64| (idx + if step > 0 { 1 } else { 0 }) as f64 * self.cell;
        let mut t_max_x = if d.x != 0.0 { (next_boundary(i, step_i) - local.x) / d.x } else { f64::INFINITY };
        let mut t_max_y = if d.y != 0.0 { (next_boundary(j, step_j) - local.y) / d.y } else { f64::INFINITY };
        let t_dx = if d.x != 0.0 { self.cell / d.x.abs() } else { f64::INFINITY };
        let t_dy = if d.y != 0.0 { self.cell / d.y.abs() } else { f64::INFINITY };
        let mut best = max_range;
        let mut t_enter = 0.0;
        loop {
            let k = j as usize * self.nx + i as usize;
            for &idx in &self.items[self.starts[k] as usize..self.starts[k + 1] as usize] {
                let (a, b) = self.segments[idx as usize];
                if let Some(t) = ray_segment(o, d, a, b) {
                    best = best.min(t);
                }
            }
            let t_exit = t_max_x.min(t_max_y);
            if best <= t_exit || t_enter > max_range {
                break;
            }
            t_enter = t_exit;
            if t_max_x < t_max_y {
                i += step_i;
                t_max_x += t_dx;
            } else {
                j += step_j;
                t_max_y += t_dy;
            }
            if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                break;
            }
        }
        best
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use core::f64::consts::FRAC_PI_4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 10 x 10 room centered at the origin, as a corridor whose borders
    /// close into a square.
    pub(crate) fn square_room() -> Scenario {
        let inner = vec![Point2::new(-5.0, -5.0), Point2::new(5.0, -5.0), Point2::new(5.0, 5.0)];
        let outer = vec![Point2::new(-5.0, -5.0), Point2::new(-5.0, 5.0), Point2::new(5.0, 5.0)];
        let track = Track::new(inner, outer, vec![Point2::new(-4.0, -4.0), Point2::new(4.0, 4.0)], false, 0.5).unwrap();
        Scenario {
            track,
            static_obstacles: vec![],
            agents: vec![agent(0.0, 0.0, 0.0)],
            seed: 0,
            duration: 1.0,
        }
    }

    pub(crate) fn agent(x: f64, y: f64, heading: f64) -> AgentSpec {
        AgentSpec {
            initial: VehicleState::new(x, y, heading, 0.0),
            controller: "pp".to_string(),
            planner: "pp".to_string(),
            length: 0.5,
            width: 0.3,
        }
    }

    pub(crate) fn straight_track(half: f64, len: f64, spacing: f64) -> Track {
        Track::new(
            vec![Point2::new(0.0, -half), Point2::new(len, -half)],
            vec![Point2::new(0.0, half), Point2::new(len, half)],
            vec![Point2::new(0.0, 0.0), Point2::new(len, 0.0)],
            false,
            spacing,
        )
        .unwrap()
    }

    #[test]
    fn raycast_room() {
        let sc = square_room();
        assert!((raycast(Point2::ORIGIN, 0.0, &sc, 30.0) - 5.0).abs() < 1e-12);
        assert!((raycast(Point2::ORIGIN, FRAC_PI_4, &sc, 30.0) - 5.0 * 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(raycast(Point2::ORIGIN, 0.0, &sc, 3.0), 3.0);
    }

    #[test]
    fn grid_raycast_matches_brute_force() {
        let track = Track::porto_like();
        let sc = Scenario {
            track,
            static_obstacles: vec![StaticObstacle {
                polygon: vec![
                    Point2::new(0.0, -14.5),
                    Point2::new(0.6, -14.5),
                    Point2::new(0.6, -14.0),
                    Point2::new(0.0, -14.0),
                ],
            }],
            agents: vec![],
            seed: 0,
            duration: 0.0,
        };
        let scene = Scene::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples = sc.track.samples();
        for _ in 0..2000 {
            let c = samples[rng.gen_range(0..samples.len())];
            let o = c.point + c.tangent.perp() * rng.gen_range(-1.0..1.0);
            let ang = rng.gen_range(-PI..PI);
            let a = raycast(o, ang, &sc, 30.0);
            let b = scene.raycast(o, ang, 30.0, &[]);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            assert!(a > 0.0);
        }
    }

    #[test]
    fn raycast_hits_lie_on_geometry() {
        let sc = Scenario {
            track: Track::walker_like(),
            static_obstacles: vec![],
            agents: vec![],
            seed: 0,
            duration: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let c = sc.track.samples()[rng.gen_range(0..sc.track.samples().len())];
            let ang = rng.gen_range(-PI..PI);
            let r = raycast(c.point, ang, &sc, 30.0);
            if r < 30.0 {
                let hit = c.point + Point2::from_angle(ang) * r;
                let d = sc
                    .segments()
                    .map(|(a, b)| crate::geom::point_segment_distance(hit, a, b))
                    .fold(f64::INFINITY, f64::min);
                assert!(d < 1e-6);
            }
        }
    }

    #[test]
    fn frame_straight_corridor() {
        let t = straight_track(1.0, 10.0, CENTERLINE_SPACING);
        let f = centerline_frame(&t, Point2::new(3.0, 0.5));
        assert!((f.s - 3.0).abs() < 1e-9);
        assert!(f.center.dist(Point2::new(3.0, 0.0)) < 1e-9);
        assert!(f.left.dist(Point2::new(3.0, 1.0)) < 1e-9);
        assert!(f.right.dist(Point2::new(3.0, -1.0)) < 1e-9);
        let on = centerline_frame(&t, Point2::new(4.0, 0.0));
        assert!(on.center.dist(Point2::new(4.0, 0.0)) < 1e-9);
    }

    #[test]
    fn frame_tie_prefers_smaller_s() {
        let t = straight_track(1.0, 10.0, 1.0);
        let f = centerline_frame(&t, Point2::new(1.5, 0.3));
        assert_eq!(f.s, 1.0);
    }

    #[test]
    fn bundled_tracks_validate() {
        for t in [Track::porto_like(), Track::walker_like()] {
            t.validate().unwrap();
            assert!(t.length() > 100.0);
            for c in t.samples() {
                assert!(c.left_width() > 0.5 && c.right_width() > 0.5);
            }
        }
    }

    #[test]
    fn scenario_validation() {
        let mut sc = Scenario {
            track: straight_track(1.0, 20.0, 0.1),
            static_obstacles: vec![],
            agents: vec![agent(2.0, 0.0, 0.0)],
            seed: 1,
            duration: 5.0,
        };
        sc.validate().unwrap();
        sc.agents.push(agent(2.2, 0.0, 0.0));
        assert!(matches!(sc.validate(), Err(WorldError::Validation { invariant: "agents start collision-free", .. })));
        sc.agents.pop();
        sc.agents.push(agent(5.0, 3.0, 0.0));
        assert!(matches!(sc.validate(), Err(WorldError::Validation { invariant: "agents start inside the track", .. })));
        sc.agents.clear();
        assert!(matches!(sc.validate(), Err(WorldError::Validation { invariant: "at least one agent", .. })));
    }

    #[test]
    fn corridor_contains() {
        let t = straight_track(1.0, 10.0, 0.1);
        assert!(t.contains(Point2::new(5.0, 0.9)));
        assert!(!t.contains(Point2::new(5.0, 1.1)));
        let p = Track::porto_like();
        assert!(p.contains(p.samples()[100].point));
        assert!(!p.contains(Point2::ORIGIN));
    }

    #[test]
    fn point_at_interpolates() {
        let t = Track::porto_like();
        let s = 12.34;
        let p = t.point_at(s);
        let f = centerline_frame(&t, p);
        assert!((f.s - s).abs() <= 0.051);
        assert!(t.point_at(t.length() + s).dist(p) < 1e-6);
    }
}
