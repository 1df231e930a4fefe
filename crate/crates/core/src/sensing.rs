//! Simulated LiDAR, point clouds, polyline simplification and the
//! observable obstacle sets fed to the convexifier.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geom::{point_segment_distance, Point2};
use crate::reach::ReachTube;
use crate::world::{Scenario, Scene};

/// Beam layout of a planar LiDAR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarConfig {
    pub beams: usize,
    /// Total field of view (radians).
    pub fov: f64,
    pub max_range: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            beams: 1080,
            fov: 270.0_f64.to_radians(),
            max_range: 30.0,
        }
    }
}

impl LidarConfig {
    pub fn is_valid(&self) -> bool {
        self.beams >= 2 && self.fov > 0.0 && self.fov <= 2.0 * PI && self.max_range > 0.0
    }

    /// Angular increment between neighbouring beams.
    pub fn increment(&self) -> f64 {
        self.fov / (self.beams - 1) as f64
    }

    /// Beam angle relative to the heading; beam 0 is the rightmost and
    /// angles grow anti-clockwise.
    pub fn beam_offset(&self, i: usize) -> f64 {
        -self.fov / 2.0 + i as f64 * self.increment()
    }
}

/// Sensor pose: position and heading.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub position: Point2,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    pub ranges: Vec<f64>,
    pub pose: Pose,
    pub config: LidarConfig,
}

impl LidarScan {
    /// Absolute angle of beam `i`.
    pub fn beam_angle(&self, i: usize) -> f64 {
        self.pose.heading + self.config.beam_offset(i)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point2>,
}

impl PointCloud {
    pub fn new(points: Vec<Point2>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Obstacle points within `radius_d` of the ego.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservableSet {
    pub points: PointCloud,
    pub radius_d: f64,
}

impl ObservableSet {
    /// No obstacle in range: the convexifier falls back to border planes.
    pub fn is_free_space(&self) -> bool {
        self.points.is_empty()
    }
}

/// Scans a scenario's static geometry (brute force ray casting).
pub fn scan(pose: Pose, scenario: &Scenario, config: &LidarConfig) -> LidarScan {
    let ranges = (0..config.beams)
        .map(|i| {
            crate::world::raycast(pose.position, pose.heading + config.beam_offset(i), scenario, config.max_range)
        })
        .collect();
    LidarScan {
        ranges,
        pose,
        config: *config,
    }
}

/// Scans a prepared scene including dynamic rectangles (other vehicles).
pub fn scan_scene(pose: Pose, scene: &Scene, dynamic: &[crate::geom::OrientedRect], config: &LidarConfig) -> LidarScan {
    let ranges = (0..config.beams)
        .map(|i| scene.raycast(pose.position, pose.heading + config.beam_offset(i), config.max_range, dynamic))
        .collect();
    LidarScan {
        ranges,
        pose,
        config: *config,
    }
}

/// Polar to Cartesian conversion; beams at `max_range` saw nothing and are dropped.
pub fn scan_to_points(s: &LidarScan) -> PointCloud {
    let points = s
        .ranges
        .iter()
        .enumerate()
        .filter(|(_, &r)| r < s.config.max_range)
        .map(|(i, &r)| s.pose.position + Point2::from_angle(s.beam_angle(i)) * r)
        .collect();
    PointCloud { points }
}

/// Ramer-Douglas-Peucker simplification of an ordered polyline.
///
/// Endpoints are always kept; every dropped point lies within `epsilon`
/// of the returned polyline.
pub fn rdp_simplify(points: &PointCloud, epsilon: f64) -> PointCloud {
    let pts = &points.points;
    if pts.len() <= 2 {
        return points.clone();
    }
    let mut keep = alloc::vec![false; pts.len()];
    keep[0] = true;
    keep[pts.len() - 1] = true;
    // explicit stack instead of recursion
    let mut stack = alloc::vec![(0usize, pts.len() - 1)];
    while let Some((first, last)) = stack.pop() {
        if last <= first + 1 {
            continue;
        }
        let (mut idx, mut dmax) = (first, -1.0);
        for (k, &p) in pts.iter().enumerate().take(last).skip(first + 1) {
            let d = point_segment_distance(p, pts[first], pts[last]);
            if d > dmax {
                dmax = d;
                idx = k;
            }
        }
        if dmax > epsilon {
            keep[idx] = true;
            stack.push((first, idx));
            stack.push((idx, last));
        }
    }
    PointCloud {
        points: pts.iter().zip(&keep).filter(|(_, &k)| k).map(|(&p, _)| p).collect(),
    }
}

/// Keeps the points within distance `d` (inclusive) of `ego`.
pub fn observable_static(points: &PointCloud, ego: Point2, d: f64) -> ObservableSet {
    let d_sq = d * d;
    ObservableSet {
        points: PointCloud {
            points: points.points.iter().copied().filter(|p| (*p - ego).norm_sq() <= d_sq).collect(),
        },
        radius_d: d,
    }
}

/// Appends the corners of every reach box whose center lies within `d` of `ego`.
pub fn augment_with_reach(q: &ObservableSet, tubes: &[ReachTube], ego: Point2, d: f64) -> ObservableSet {
    let mut out = q.clone();
    for tube in tubes {
        for step in &tube.steps {
            if step.bounds.center().dist(ego) <= d {
                out.points.points.extend_from_slice(&step.bounds.corners());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Box2;
    use crate::reach::TubeStep;
    use crate::world::tests::square_room;
    use crate::world::StaticObstacle;
    use alloc::vec;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    use proptest::prelude::*;

    fn pc(v: &[(f64, f64)]) -> PointCloud {
        PointCloud::new(v.iter().map(|&(x, y)| Point2::new(x, y)).collect())
    }

    #[test]
    fn scan_indexing_in_room() {
        let sc = square_room();
        let cfg = LidarConfig {
            beams: 4,
            fov: 2.0 * PI * 3.0 / 4.0,
            max_range: 30.0,
        };
        let s = scan(Pose::default(), &sc, &cfg);
        let expected = [-3.0 * FRAC_PI_4, -FRAC_PI_4, FRAC_PI_4, 3.0 * FRAC_PI_4];
        for (i, &a) in expected.iter().enumerate() {
            assert!((s.beam_angle(i) - a).abs() < 1e-12);
            // per-beam oracle: every beam points at a corner of the room
            assert!((s.ranges[i] - crate::world::raycast(Point2::ORIGIN, a, &sc, 30.0)).abs() < 1e-12);
            assert!((s.ranges[i] - 5.0 * 2f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn free_environment_all_max_range() {
        let mut sc = square_room();
        sc.track = crate::world::tests::straight_track(100.0, 1.0, 0.5);
        let cfg = LidarConfig {
            beams: 9,
            fov: PI / 2.0,
            max_range: 3.0,
        };
        let s = scan(Pose { position: Point2::new(0.5, 0.0), heading: FRAC_PI_2 }, &sc, &cfg);
        assert!(s.ranges.iter().all(|&r| r == 3.0));
        assert!(scan_to_points(&s).is_empty());
    }

    #[test]
    fn obstacle_ahead() {
        let mut sc = square_room();
        sc.static_obstacles.push(StaticObstacle {
            polygon: vec![
                Point2::new(2.0, -0.5),
                Point2::new(3.0, -0.5),
                Point2::new(3.0, 0.5),
                Point2::new(2.0, 0.5),
            ],
        });
        let cfg = LidarConfig {
            beams: 181,
            fov: PI,
            max_range: 30.0,
        };
        let s = scan(Pose::default(), &sc, &cfg);
        assert!((s.ranges[90] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn points_from_scan() {
        let cfg = LidarConfig { beams: 3, fov: PI, max_range: 10.0 };
        // beam 2 has offset +pi/2
        let s = LidarScan {
            ranges: vec![10.0, 10.0, 1.0],
            pose: Pose { position: Point2::new(2.0, 3.0), heading: 0.0 },
            config: cfg,
        };
        let p = scan_to_points(&s);
        assert_eq!(p.len(), 1);
        assert!(p.points[0].dist(Point2::new(2.0, 4.0)) < 1e-12);

        let s = LidarScan {
            ranges: vec![10.0, 2.0, 10.0],
            pose: Pose { position: Point2::ORIGIN, heading: PI },
            config: cfg,
        };
        assert!(scan_to_points(&s).points[0].dist(Point2::new(-2.0, 0.0)) < 1e-12);
    }

    #[test]
    fn scan_points_lie_on_geometry() {
        let sc = crate::world::Scenario {
            track: crate::world::Track::porto_like(),
            static_obstacles: vec![],
            agents: vec![],
            seed: 0,
            duration: 0.0,
        };
        let c = sc.track.samples()[50];
        let pose = Pose { position: c.point, heading: 0.3 };
        let pts = scan_to_points(&scan(pose, &sc, &LidarConfig::default()));
        assert!(!pts.is_empty());
        for p in &pts.points {
            let d = sc
                .segments()
                .map(|(a, b)| point_segment_distance(*p, a, b))
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-6);
        }
    }

    #[test]
    fn rdp_examples() {
        assert_eq!(rdp_simplify(&pc(&[(0., 0.), (1., 0.), (2., 0.)]), 0.01), pc(&[(0., 0.), (2., 0.)]));
        let tri = pc(&[(0., 0.), (1., 1.), (2., 0.)]);
        assert_eq!(rdp_simplify(&tri, 0.5), tri);
        let zig = pc(&[(0., 0.), (1., 0.1), (2., -0.1), (3., 0.05), (4., 0.)]);
        assert_eq!(rdp_simplify(&zig, 0.0), zig);
    }

    #[test]
    fn observable_filters() {
        let p = pc(&[(1.0, 0.0), (100.0, 0.0)]);
        assert_eq!(observable_static(&p, Point2::ORIGIN, 5.0).points, pc(&[(1.0, 0.0)]));
        let p = pc(&[(3.0, 4.0)]);
        assert_eq!(observable_static(&p, Point2::ORIGIN, 5.0).points.len(), 1);
        let p = pc(&[(3.0, 4.0), (-10.0, 2.0)]);
        assert_eq!(observable_static(&p, Point2::ORIGIN, 1e3).points, p);
    }

    fn tube_at(c: Point2) -> ReachTube {
        ReachTube {
            steps: vec![TubeStep {
                t: 0.0,
                bounds: Box2::new(c - Point2::new(0.2, 0.2), c + Point2::new(0.2, 0.2)),
            }],
            horizon: 0.0,
        }
    }

    #[test]
    fn reach_augmentation() {
        let q = observable_static(&pc(&[(1.0, 0.0)]), Point2::ORIGIN, 5.0);
        let near = augment_with_reach(&q, &[tube_at(Point2::new(2.0, 0.0))], Point2::ORIGIN, 5.0);
        assert_eq!(near.points.len(), 5);
        let far = augment_with_reach(&q, &[tube_at(Point2::new(10.0, 0.0))], Point2::ORIGIN, 5.0);
        assert_eq!(far, q);
        assert_eq!(augment_with_reach(&q, &[], Point2::ORIGIN, 5.0), q);
    }

    fn arb_polyline() -> impl Strategy<Value = Vec<Point2>> {
        proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 2..60)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point2::new(x, y)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn rdp_is_subsequence_within_epsilon(line in arb_polyline(), eps in 0.0..2.0f64) {
            let input = PointCloud::new(line.clone());
            let out = rdp_simplify(&input, eps);
            // subsequence, with matching indices
            let mut idx = Vec::new();
            let mut k = 0;
            for p in &out.points {
                while k < line.len() && line[k] != *p { k += 1; }
                prop_assert!(k < line.len());
                idx.push(k);
                k += 1;
            }
            prop_assert_eq!(idx[0], 0);
            prop_assert_eq!(*idx.last().unwrap(), line.len() - 1);
            // dropped points are within eps of their span's segment
            for w in idx.windows(2) {
                for j in w[0] + 1..w[1] {
                    let d = point_segment_distance(line[j], line[w[0]], line[w[1]]);
                    prop_assert!(d <= eps + 1e-12);
                }
            }
        }

        #[test]
        fn observable_idempotent_subset(pts in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 0..50), d in 0.1..8.0f64) {
            let cloud = PointCloud::new(pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect());
            let once = observable_static(&cloud, Point2::ORIGIN, d);
            let twice = observable_static(&once.points, Point2::ORIGIN, d);
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.points.points.iter().all(|p| cloud.points.contains(p)));
            let plus = augment_with_reach(&once, &[tube_at(Point2::new(1.0, 1.0))], Point2::ORIGIN, d);
            prop_assert!(plus.points.len() >= once.points.len());
        }
    }
}
