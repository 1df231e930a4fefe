use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::dfo::{self, Problem};
use super::{ConvexifyError, ObjectiveKind, SafeRegion, SeparationProblem};
use crate::clock::{Deadline, NoDeadline};
use crate::geom::{Hyperplane, Point2};
use crate::math::{cos, sin};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedSettings {
    /// Angle grid used to seed the planes.
    pub angle_steps: usize,
    /// Seed arrangements scored against the objective before refinement.
    pub seed_candidates: usize,
    pub rho_start: f64,
    pub rho_end: f64,
    pub max_evals: usize,
}

impl Default for ConstrainedSettings {
    fn default() -> Self {
        Self {
            angle_steps: 360,
            seed_candidates: 256,
            rho_start: 0.2,
            rho_end: 1e-3,
            max_evals: 300,
        }
    }
}

/// Constrained method with default settings and no deadline.
pub fn separate_constrained(p: &SeparationProblem, objective: ObjectiveKind) -> Result<SafeRegion, ConvexifyError> {
    separate_constrained_with(p, objective, &ConstrainedSettings::default(), &NoDeadline)
}

/// Optimises `n_planes` planes `(phi_j, b_j)` so that every obstacle point
/// lies at least `margin` beyond one of them and the ego corners and target
/// lie at least `margin` inside all of them.
///
/// The search starts from the best arrangement on an angle grid and is
/// refined by a derivative-free trust-region method. When `deadline`
/// expires the current iterate is returned if it verifies.
pub fn separate_constrained_with(
    p: &SeparationProblem,
    objective: ObjectiveKind,
    settings: &ConstrainedSettings,
    deadline: &dyn Deadline,
) -> Result<SafeRegion, ConvexifyError> {
    p.validate()?;
    let base = p.base_planes();
    let open = p.open_points(&base);
    let keep = p.keep_points();
    let ego = p.ego_center();
    if open.is_empty() {
        return Ok(SafeRegion::assemble(Vec::new(), &base, ego, p.target));
    }
    let model = Model {
        open: &open,
        keep: &keep,
        n: p.n_planes,
        margin: p.margin,
        objective,
        spare: p.bound_radius(),
    };
    let grid = AngleGrid::new(&open, &keep, p.margin, settings.angle_steps.max(4));
    let seed = model.seed(&grid, settings.seed_candidates.max(1));

    let mut candidates = Vec::new();
    let needs_search = seed.violation > 0.0 || objective != ObjectiveKind::Satisfiability;
    if needs_search {
        let s = dfo::Settings {
            rho_start: settings.rho_start,
            rho_end: settings.rho_end,
            max_evals: settings.max_evals,
        };
        let out = dfo::minimize(&model, &seed.x, &s, deadline);
        if out.violation == 0.0 {
            candidates.push(out.x);
        }
    }
    if seed.violation == 0.0 {
        candidates.push(seed.x);
    }
    for x in candidates {
        let region = SafeRegion::assemble(model.planes(&x), &base, ego, p.target);
        if super::verify_separation(&region, p) {
            return Ok(region);
        }
    }
    Err(ConvexifyError::Infeasible)
}

struct Seed {
    x: Vec<f64>,
    violation: f64,
}

// Per-angle coverage: obstacle points that a plane at that angle, pushed just
// past the ego and target, separates by the full margin.
struct AngleGrid {
    angles: Vec<f64>,
    floor: Vec<f64>,
    cover: Vec<Vec<u64>>,
    words: usize,
}

impl AngleGrid {
    fn new(open: &[Point2], keep: &[Point2], margin: f64, steps: usize) -> Self {
        let words = open.len().div_ceil(64);
        let mut angles = Vec::with_capacity(steps);
        let mut floor = Vec::with_capacity(steps);
        let mut cover = Vec::with_capacity(steps);
        for k in 0..steps {
            let phi = 2.0 * PI * k as f64 / steps as f64;
            let a = Point2::from_angle(phi);
            let h = keep.iter().map(|e| a.dot(*e)).fold(f64::NEG_INFINITY, f64::max);
            let mut bits = vec![0u64; words];
            for (i, q) in open.iter().enumerate() {
                if a.dot(*q) >= h + 2.0 * margin {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            angles.push(phi);
            floor.push(h);
            cover.push(bits);
        }
        Self {
            angles,
            floor,
            cover,
            words,
        }
    }

    fn count(&self, bits: &[u64]) -> usize {
        bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn full(&self, n_points: usize) -> Vec<u64> {
        let mut bits = vec![u64::MAX; self.words];
        let tail = n_points % 64;
        if tail != 0 {
            bits[self.words - 1] = (1u64 << tail) - 1;
        }
        bits
    }
}

struct Model<'a> {
    open: &'a [Point2],
    keep: &'a [Point2],
    n: usize,
    margin: f64,
    objective: ObjectiveKind,
    spare: f64,
}

impl Model<'_> {
    fn planes(&self, x: &[f64]) -> Vec<Hyperplane> {
        x.chunks(2).map(|v| Hyperplane::from_angle(v[0], v[1])).collect()
    }

    // Decision vector for the given grid angles, offsets from assigning every
    // point to the plane it clears most deeply.
    fn arrangement(&self, grid: &AngleGrid, picks: &[usize]) -> Vec<f64> {
        let normals: Vec<Point2> = picks.iter().map(|&k| Point2::from_angle(grid.angles[k])).collect();
        let mut b: Vec<f64> = vec![f64::INFINITY; picks.len()];
        for q in self.open {
            let mut best: Option<(usize, f64)> = None;
            for (j, &k) in picks.iter().enumerate() {
                let depth = normals[j].dot(*q) - grid.floor[k];
                if depth >= 2.0 * self.margin && best.map_or(true, |(_, d)| depth > d) {
                    best = Some((j, depth));
                }
            }
            if let Some((j, _)) = best {
                b[j] = b[j].min(normals[j].dot(*q) - self.margin);
            }
        }
        let mut x = Vec::with_capacity(2 * self.n);
        for (j, &k) in picks.iter().enumerate() {
            let off = if b[j].is_finite() { b[j] } else { grid.floor[k] + self.margin + self.spare };
            x.extend_from_slice(&[grid.angles[k], off]);
        }
        // unused planes sit far outside, spread around the circle
        for j in picks.len()..self.n {
            let k = (j * grid.angles.len()) / self.n;
            x.extend_from_slice(&[grid.angles[k], grid.floor[k] + self.margin + self.spare]);
        }
        x
    }

    fn score(&self, x: &[f64]) -> (f64, f64) {
        let mut c = Vec::new();
        let f = self.eval(x, &mut c);
        (c.iter().fold(0.0, |m, &v| m.max(-v)), f)
    }

    fn seed(&self, grid: &AngleGrid, max_candidates: usize) -> Seed {
        let full = grid.full(self.open.len());
        let covers = |bits: &[u64]| bits == full.as_slice();
        let mut feasible: Vec<Vec<usize>> = Vec::new();
        let steps = grid.angles.len();
        if self.n == 1 {
            feasible.extend((0..steps).filter(|&k| covers(&grid.cover[k])).map(|k| vec![k]));
        } else if self.n == 2 {
            let mut or = vec![0u64; grid.words];
            for i in 0..steps {
                for j in i + 1..steps {
                    for (w, o) in or.iter_mut().enumerate() {
                        *o = grid.cover[i][w] | grid.cover[j][w];
                    }
                    if covers(&or) {
                        feasible.push(vec![i, j]);
                    }
                }
            }
        }
        if feasible.is_empty() {
            // greedy covers restarted from every angle
            let mut fallback: Option<(usize, Vec<usize>)> = None;
            for start in 0..steps {
                let mut picks = vec![start];
                let mut got = grid.cover[start].clone();
                while picks.len() < self.n && !covers(&got) {
                    let next = (0..steps)
                        .filter(|k| !picks.contains(k))
                        .max_by_key(|&k| {
                            let gain: usize = grid.cover[k]
                                .iter()
                                .zip(&got)
                                .map(|(c, g)| (c & !g).count_ones() as usize)
                                .sum();
                            (gain, core::cmp::Reverse(k))
                        });
                    let Some(next) = next else { break };
                    for (g, c) in got.iter_mut().zip(&grid.cover[next]) {
                        *g |= c;
                    }
                    picks.push(next);
                }
                if covers(&got) {
                    feasible.push(picks);
                } else {
                    let n = grid.count(&got);
                    if fallback.as_ref().map_or(true, |(m, _)| n > *m) {
                        fallback = Some((n, picks));
                    }
                }
            }
            if feasible.is_empty() {
                let picks = fallback.map(|(_, p)| p).unwrap_or_else(|| vec![0]);
                let x = self.arrangement(grid, &picks);
                let (violation, _) = self.score(&x);
                return Seed { x, violation };
            }
        }
        let stride = feasible.len().div_ceil(max_candidates);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for picks in feasible.iter().step_by(stride.max(1)) {
            let x = self.arrangement(grid, picks);
            let (viol, f) = self.score(&x);
            if viol == 0.0 && best.as_ref().map_or(true, |(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        }
        match best {
            Some((_, x)) => Seed { x, violation: 0.0 },
            None => {
                let x = self.arrangement(grid, &feasible[0]);
                let (violation, _) = self.score(&x);
                Seed { x, violation }
            }
        }
    }
}

impl Problem for Model<'_> {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn eval(&self, x: &[f64], cons: &mut Vec<f64>) -> f64 {
        cons.clear();
        let planes: Vec<(Point2, f64)> = x.chunks(2).map(|v| (Point2::new(cos(v[0]), sin(v[0])), v[1])).collect();
        let mut sum = 0.0;
        let mut worst: f64 = 0.0;
        for q in self.open {
            let mut deepest = f64::NEG_INFINITY;
            let mut nearest = f64::INFINITY;
            for (a, b) in &planes {
                let d = a.dot(*q) - b;
                deepest = deepest.max(d);
                if d >= self.margin {
                    nearest = nearest.min(d);
                }
            }
            cons.push(deepest - self.margin);
            let e = if nearest.is_finite() { nearest } else { deepest };
            sum += e;
            worst = worst.max(e);
        }
        for e in self.keep {
            let slack = planes.iter().map(|(a, b)| b - a.dot(*e)).fold(f64::INFINITY, f64::min);
            cons.push(slack - self.margin);
        }
        match self.objective {
            ObjectiveKind::Satisfiability => 0.0,
            ObjectiveKind::EuclideanSum => sum,
            ObjectiveKind::HausdorffMax => worst,
        }
    }
}
