//! Offline convexification benchmarks.
//!
//! [`bench_offline`] replays ego poses along a track, optionally with
//! opponents in an overtaking arrangement, and runs every method on the
//! resulting separation problem. [`bench_scaling`] times the optimisation
//! methods on random point sets of growing size. Only the convexification
//! call is timed.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hyperace_core::control::VehicleState;
use hyperace_core::convexify::{
    inscribed_radius_quality, separate, separate_bilevel, separate_constrained_with, ConstrainedSettings, Method,
    ObjectiveKind, SafeRegion, SeparationProblem,
};
use hyperace_core::clock::ClockDeadline;
use hyperace_core::geom::point_segment_distance;
use hyperace_core::reach::Footprint;
use hyperace_core::sensing::{ObservableSet, PointCloud};
use hyperace_core::sim::{perceive, separation_problem, Observation, SimConfig};
use hyperace_core::world::{AgentSpec, Scenario, Scene, Track};
use hyperace_core::{OrientedRect, Point2, Polyhedron};

use crate::clock::StdClock;
use crate::{Result, FORMAT_VERSION};

/// One convexification run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub seconds: f64,
    /// `None` when the method reported no region.
    pub planes: Option<usize>,
    /// Inscribed radius of the region with its center on the ego-target
    /// segment.
    pub radius: Option<f64>,
    /// Same, but the ball must also hold no obstacle point; see
    /// [`free_radius`].
    pub free_radius: Option<f64>,
    pub n_obstacles: usize,
}

/// Aggregate over the poses of one (scenario, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub format_version: u32,
    pub seed: u64,
    pub scenario: String,
    pub method: String,
    pub objective: String,
    pub n_obstacles: f64,
    pub solves: usize,
    pub infeasible: usize,
    pub mean_time_s: f64,
    pub mean_h: f64,
    pub mean_r: f64,
    pub mean_r_free: f64,
}

impl BenchRecord {
    pub fn from_samples(
        scenario: &str,
        method: Method,
        objective: ObjectiveKind,
        seed: u64,
        samples: &[Sample],
    ) -> Self {
        let n = samples.len().max(1) as f64;
        let ok: Vec<&Sample> = samples.iter().filter(|s| s.planes.is_some()).collect();
        let m = ok.len().max(1) as f64;
        Self {
            format_version: FORMAT_VERSION,
            seed,
            scenario: scenario.into(),
            method: method.id().into(),
            objective: objective_label(method, objective),
            n_obstacles: samples.iter().map(|s| s.n_obstacles as f64).sum::<f64>() / n,
            solves: samples.len(),
            infeasible: samples.len() - ok.len(),
            mean_time_s: samples.iter().map(|s| s.seconds).sum::<f64>() / n,
            mean_h: ok.iter().map(|s| s.planes.unwrap() as f64).sum::<f64>() / m,
            mean_r: ok.iter().map(|s| s.radius.unwrap()).sum::<f64>() / m,
            mean_r_free: ok.iter().map(|s| s.free_radius.unwrap()).sum::<f64>() / m,
        }
    }
}

fn objective_label(method: Method, objective: ObjectiveKind) -> String {
    match method {
        Method::Constrained => objective.id().into(),
        _ => "-".into(),
    }
}

/// Layout of the offline sweep.
#[derive(Debug, Clone)]
pub struct OfflineConfig {
    /// Poses per lap.
    pub poses: usize,
    /// 0, 1 or 2 opponents ahead of the ego.
    pub opponents: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub objective: ObjectiveKind,
    pub sim: SimConfig,
    /// Distance from the ego to its target along the path.
    pub lookahead: f64,
    /// Lateral offset of the ego path when opponents are present.
    pub ego_offset: f64,
    /// Lateral offset of the opponents.
    pub opponent_offset: f64,
    /// Stations of the opponents ahead of the ego.
    pub opponent_gaps: [f64; 2],
    pub opponent_speed: f64,
    /// Add the track border planes at the ego station.
    pub border_planes: bool,
    pub serial: bool,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        Self {
            poses: 40,
            opponents: 0,
            seeds: vec![0],
            methods: Method::ALL.to_vec(),
            objective: ObjectiveKind::EuclideanSum,
            sim: SimConfig::default(),
            lookahead: 2.0,
            ego_offset: -0.6,
            opponent_offset: 0.5,
            opponent_gaps: [1.2, 3.0],
            opponent_speed: 2.0,
            border_planes: true,
            serial: true,
        }
    }
}

/// A frozen pose of the sweep: the problem every method sees.
#[derive(Debug, Clone)]
pub struct OfflineCase {
    pub problem: SeparationProblem,
    pub ego: Point2,
    pub target: Point2,
}

fn agent(state: VehicleState) -> AgentSpec {
    AgentSpec {
        initial: state,
        controller: "pp".into(),
        planner: "pp".into(),
        length: 0.5,
        width: 0.3,
    }
}

fn on_path(track: &Track, s: f64, offset: f64, v: f64, dheading: f64) -> VehicleState {
    let t = track.samples()[track.index_at(s)].tangent;
    let p = track.point_at(s) + t.perp() * offset;
    VehicleState::new(p.x, p.y, t.y.atan2(t.x) + dheading, v)
}

/// Problems of the sweep for one seed; poses whose agents leave the track
/// or overlap are skipped.
pub fn offline_cases(track: &Track, cfg: &OfflineConfig, seed: u64) -> Vec<OfflineCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spacing = track.length() / cfg.poses.max(1) as f64;
    let lane = if cfg.opponents > 0 { cfg.ego_offset } else { 0.0 };
    let mut scenario = Scenario {
        track: track.clone(),
        static_obstacles: Vec::new(),
        agents: Vec::new(),
        seed,
        duration: 0.0,
    };
    let scene = Scene::new(&scenario);
    let mut cases = Vec::new();
    for k in 0..cfg.poses {
        let s = k as f64 * spacing + rng.gen_range(0.0..spacing);
        let dh = rng.gen_range(-0.05..=0.05);
        if !track.is_closed() && s + cfg.lookahead > track.length() {
            continue;
        }
        let ego = on_path(track, s, lane, 0.0, dh);
        let opponents: Vec<VehicleState> = cfg.opponent_gaps[..cfg.opponents.min(2)]
            .iter()
            .map(|g| on_path(track, s + g, cfg.opponent_offset, cfg.opponent_speed, 0.0))
            .collect();
        scenario.agents = core::iter::once(ego).chain(opponents.iter().copied()).map(agent).collect();
        if scenario.validate().is_err() {
            continue;
        }
        let fp = Footprint { length: 0.5, width: 0.3 };
        let others: Vec<(VehicleState, Footprint)> = opponents.iter().map(|&o| (o, fp)).collect();
        let obs = Observation {
            t: 0.0,
            index: 0,
            state: ego,
            spec: &scenario.agents[0],
            scenario: &scenario,
            scene: &scene,
            others: &others,
        };
        let (observable, _) = perceive(&obs, &cfg.sim);
        let target = {
            let t = on_path(track, s + cfg.lookahead, lane, 0.0, 0.0);
            t.position()
        };
        let rect = OrientedRect::new(ego.position(), ego.heading, 0.5, 0.3);
        let mut problem = separation_problem(observable, &rect, target, track, &cfg.sim);
        if !cfg.border_planes {
            problem.fixed_planes.clear();
        }
        cases.push(OfflineCase {
            problem,
            ego: ego.position(),
            target,
        });
    }
    cases
}

/// Runs `method` on one case and measures it.
pub fn run_case(case: &OfflineCase, method: Method, objective: ObjectiveKind, track: &Track) -> Sample {
    let start = Instant::now();
    let out = separate(method, &case.problem, objective, track);
    let seconds = start.elapsed().as_secs_f64();
    sample(out.ok(), seconds, case)
}

fn sample(region: Option<SafeRegion>, seconds: f64, case: &OfflineCase) -> Sample {
    let obstacles = &case.problem.obstacles.points.points;
    let radius = region
        .as_ref()
        .map(|r| inscribed_radius_quality(r, case.ego, case.target).unwrap_or(0.0));
    let free = region
        .as_ref()
        .map(|r| free_radius(&r.polyhedron, obstacles, case.ego, case.target, FREE_RADIUS_STEPS));
    Sample {
        seconds,
        planes: region.map(|r| r.plane_count()),
        radius,
        free_radius: free,
        n_obstacles: obstacles.len(),
    }
}

/// Centers tried along the ego-target segment by [`free_radius`].
pub const FREE_RADIUS_STEPS: usize = 2000;

/// Largest ball centered on `[ego, target]` that lies in `poly` and holds
/// no obstacle point, over `steps + 1` evenly spaced centers.
///
/// For regions that exclude every obstacle this is the inscribed radius up
/// to the sampling step; for regions that ignore obstacles it only counts
/// the part of the region that is actually free.
pub fn free_radius(poly: &Polyhedron, obstacles: &[Point2], ego: Point2, target: Point2, steps: usize) -> f64 {
    let rows: Vec<_> = poly.rows().collect();
    let mut best: f64 = 0.0;
    for k in 0..=steps {
        let c = ego.lerp(target, k as f64 / steps.max(1) as f64);
        let mut r = rows.iter().map(|h| -h.signed_distance(c)).fold(f64::INFINITY, f64::min);
        for &q in obstacles {
            r = r.min(c.dist(q));
        }
        best = best.max(r);
    }
    best
}

/// Samples of every method over every pose and seed, in method order.
pub fn offline_samples(track: &Track, cfg: &OfflineConfig) -> Vec<Vec<Sample>> {
    let cases: Vec<OfflineCase> = cfg.seeds.iter().flat_map(|&s| offline_cases(track, cfg, s)).collect();
    cfg.methods
        .iter()
        .map(|&m| {
            if cfg.serial {
                cases.iter().map(|c| run_case(c, m, cfg.objective, track)).collect()
            } else {
                cases.par_iter().map(|c| run_case(c, m, cfg.objective, track)).collect()
            }
        })
        .collect()
}

/// One record per method.
pub fn bench_offline(label: &str, track: &Track, cfg: &OfflineConfig) -> Vec<BenchRecord> {
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    offline_samples(track, cfg)
        .iter()
        .zip(&cfg.methods)
        .map(|(samples, &m)| BenchRecord::from_samples(label, m, cfg.objective, seed, samples))
        .collect()
}

/// Random instances of the scaling benchmark.
#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub counts: Vec<usize>,
    pub methods: Vec<Method>,
    pub objectives: Vec<ObjectiveKind>,
    pub seeds: Vec<u64>,
    pub n_planes: usize,
    pub margin: f64,
    /// Outer radius of the annulus (`d`).
    pub radius: f64,
    /// Points closer than this to the ego-target segment are rejected.
    pub corridor: f64,
    pub target_distance: f64,
    pub cap_seconds: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            counts: vec![10, 50, 100, 500, 1000, 2000],
            methods: vec![Method::Constrained, Method::Bilevel],
            objectives: ObjectiveKind::ALL.to_vec(),
            seeds: (0..11).collect(),
            n_planes: 4,
            margin: hyperace_core::convexify::DEFAULT_MARGIN,
            radius: 5.0,
            corridor: 0.3,
            target_distance: 2.0,
            cap_seconds: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub format_version: u32,
    pub seed: u64,
    pub method: String,
    pub objective: String,
    pub count: usize,
    pub runs: usize,
    pub mean_time_s: f64,
    pub median_time_s: f64,
    pub infeasible: usize,
    pub timeout: bool,
}

/// Uniform points in the annulus `[1, radius]` around the origin, away
/// from the segment to the target at `(target_distance, 0)`.
pub fn scaling_instance(cfg: &ScalingConfig, count: usize, seed: u64) -> SeparationProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ count as u64);
    let target = Point2::new(cfg.target_distance, 0.0);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let r = (1.0 + rng.gen::<f64>() * (cfg.radius * cfg.radius - 1.0)).sqrt();
        let q = Point2::from_angle(rng.gen_range(0.0..std::f64::consts::TAU)) * r;
        if point_segment_distance(q, Point2::new(0.0, 0.0), target) >= cfg.corridor {
            pts.push(q);
        }
    }
    let ego = OrientedRect::new(Point2::new(0.0, 0.0), 0.0, 0.5, 0.3);
    let obstacles = ObservableSet {
        points: PointCloud::new(pts),
        radius_d: cfg.radius,
    };
    let mut p = SeparationProblem::new(obstacles, &ego, target);
    p.n_planes = cfg.n_planes;
    p.margin = cfg.margin;
    p
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Rows in (method, objective, count) order; the objective only varies for
/// the constrained method.
pub fn bench_scaling(cfg: &ScalingConfig) -> Vec<ScalingRow> {
    let clock = StdClock::new();
    let cap_micros = (cfg.cap_seconds * 1e6) as u64;
    let mut cells = Vec::new();
    for &m in &cfg.methods {
        match m {
            Method::Constrained => cells.extend(cfg.objectives.iter().map(|&o| (m, o))),
            Method::Bilevel => cells.push((m, ObjectiveKind::EuclideanSum)),
            // the corridor needs a track, which random instances do not have
            Method::Mpcc => {}
        }
    }
    let mut rows = Vec::new();
    for (m, o) in cells {
        for &count in &cfg.counts {
            let mut times = Vec::new();
            let mut infeasible = 0;
            let mut timeout = false;
            let solve = |p: &SeparationProblem| match m {
                Method::Constrained => {
                    let deadline = ClockDeadline::after(&clock, cap_micros);
                    separate_constrained_with(p, o, &ConstrainedSettings::default(), &deadline)
                }
                _ => separate_bilevel(p),
            };
            // untimed warm-up on the first instance of the cell
            if let Some(&seed) = cfg.seeds.first() {
                let _ = solve(&scaling_instance(cfg, count, seed));
            }
            for &seed in &cfg.seeds {
                let p = scaling_instance(cfg, count, seed);
                let start = Instant::now();
                let out = solve(&p);
                let dt = start.elapsed().as_secs_f64();
                timeout |= dt >= cfg.cap_seconds;
                infeasible += usize::from(out.is_err());
                times.push(dt);
            }
            let mean = times.iter().sum::<f64>() / times.len().max(1) as f64;
            rows.push(ScalingRow {
                format_version: FORMAT_VERSION,
                seed: cfg.seeds.first().copied().unwrap_or(0),
                method: m.id().into(),
                objective: objective_label(m, o),
                count,
                runs: times.len(),
                mean_time_s: mean,
                median_time_s: median(&mut times),
                infeasible,
                timeout,
            });
        }
    }
    rows
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mpcc_has_two_planes_and_bounded_radius() {
        let track = Track::builtin("porto-like").unwrap();
        let cfg = OfflineConfig {
            poses: 6,
            ..Default::default()
        };
        let recs = bench_offline("porto-like", &track, &cfg);
        assert_eq!(recs.len(), 3);
        for r in &recs {
            assert!(r.mean_r <= cfg.sim.observable_radius);
            assert!(r.mean_r_free <= r.mean_r + 1e-9);
            assert!(r.mean_time_s > 0.0);
        }
        let mpcc = recs.iter().find(|r| r.method == "mpcc").unwrap();
        assert_eq!(mpcc.mean_h, 2.0);
        assert_eq!(mpcc.infeasible, 0);
    }

    #[test]
    fn overtaking_cases_see_the_opponent() {
        let track = Track::builtin("porto-like").unwrap();
        let cfg = OfflineConfig {
            poses: 8,
            opponents: 1,
            ..Default::default()
        };
        let cases = offline_cases(&track, &cfg, 1);
        assert!(!cases.is_empty());
        for c in &cases {
            assert!(c.problem.obstacles.points.len() > 4);
            assert!(c.problem.validate().is_ok());
        }
    }

    #[test]
    fn scaling_instances_respect_the_corridor() {
        let cfg = ScalingConfig::default();
        let p = scaling_instance(&cfg, 500, 3);
        assert_eq!(p.obstacles.points.len(), 500);
        for &q in &p.obstacles.points.points {
            let r = q.norm();
            assert!((1.0..=5.0).contains(&r));
            assert!(point_segment_distance(q, Point2::new(0.0, 0.0), p.target) >= 0.3);
        }
        assert_eq!(scaling_instance(&cfg, 500, 3), p);
    }

    #[test]
    fn scaling_cardinality() {
        let cfg = ScalingConfig {
            counts: vec![10, 50],
            seeds: vec![0, 1],
            ..Default::default()
        };
        let rows = bench_scaling(&cfg);
        // three objectives for constrained, one row for bilevel
        assert_eq!(rows.len(), 4 * 2);
        assert!(rows.iter().all(|r| r.runs == 2 && !r.timeout));
    }

    #[test]
    fn free_radius_oracle() {
        // corridor |y| <= 1 with a point at (1, 0.5): centers on y = 0 from
        // x = -1 to x = 3; best is at an end, min(1, dist to the point)
        let poly = Polyhedron::from_box(&hyperace_core::Box2::from_bounds((-10.0, 10.0), (-1.0, 1.0)));
        let q = [Point2::new(1.0, 0.5)];
        let r = free_radius(&poly, &q, Point2::new(-1.0, 0.0), Point2::new(3.0, 0.0), 4000);
        assert!((r - 1.0).abs() < 1e-9, "{r}");
        let wide = Polyhedron::from_box(&hyperace_core::Box2::from_bounds((-10.0, 10.0), (-5.0, 5.0)));
        let q = [Point2::new(1.0, 0.2), Point2::new(-1.5, 0.0), Point2::new(3.5, 0.0)];
        let r = free_radius(&wide, &q, Point2::new(-1.0, 0.0), Point2::new(3.0, 0.0), 4000);
        // the best center balances the point at x = 1 against x = 3.5
        let x = (3.5f64 * 3.5 - 1.0 - 0.04) / (2.0 * 2.5);
        assert!((r - (3.5 - x)).abs() < 2e-3, "{r} vs {}", 3.5 - x);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
