use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{tighten, ConvexifyError, SafeRegion, SeparationProblem};
use crate::geom::{maximize, Point2};
use crate::math::atan2;

// Angular clustering around the ego-target midpoint.
const CLUSTER_GAP: f64 = 20.0 * PI / 180.0;
const CLUSTER_SPAN: f64 = 90.0 * PI / 180.0;

/// Bi-level method: the fewest separating planes found by greedy pruning,
/// each pruning step scored by the inscribed radius on the ego-target
/// segment.
///
/// Candidates are max-margin planes fitted to angular clusters of the open
/// obstacle points; clusters that cannot be separated in one piece are
/// split until they can.
pub fn separate_bilevel(p: &SeparationProblem) -> Result<SafeRegion, ConvexifyError> {
    p.validate()?;
    let base = p.base_planes();
    let open = p.open_points(&base);
    let keep = p.keep_points();
    let ego = p.ego_center();
    if open.is_empty() {
        return Ok(SafeRegion::assemble(Vec::new(), &base, ego, p.target));
    }
    let mid = ego.lerp(p.target, 0.5);
    let mut normals = Vec::new();
    for cluster in angular_clusters(&open, mid) {
        fit_cluster(&cluster, &keep, p.margin, &mut normals)?;
    }
    let mut planes = tighten(&normals, &open, &keep, p.margin).ok_or(ConvexifyError::Infeasible)?;
    let mut region = SafeRegion::assemble(planes.clone(), &base, ego, p.target);

    loop {
        let mut best: Option<(SafeRegion, Vec<Point2>)> = None;
        for skip in 0..planes.len() {
            let rest: Vec<Point2> = planes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != skip)
                .map(|(_, h)| h.normal())
                .collect();
            let Some(tight) = tighten(&rest, &open, &keep, p.margin) else {
                continue;
            };
            let cand = SafeRegion::assemble(tight, &base, ego, p.target);
            if best.as_ref().map_or(true, |(b, _)| cand.quality_r > b.quality_r) {
                best = Some((cand, rest));
            }
        }
        match best {
            Some((cand, _)) if cand.planes.len() < planes.len() => {
                planes = cand.planes.clone();
                region = cand;
            }
            _ => break,
        }
    }
    if super::verify_separation(&region, p) {
        Ok(region)
    } else {
        Err(ConvexifyError::Infeasible)
    }
}

// Points sorted by bearing from `center`, split at bearing gaps wider than
// CLUSTER_GAP and whenever a cluster would span more than CLUSTER_SPAN.
fn angular_clusters(points: &[Point2], center: Point2) -> Vec<Vec<Point2>> {
    let mut by_angle: Vec<(f64, Point2)> = points
        .iter()
        .map(|&q| {
            let d = q - center;
            (atan2(d.y, d.x), q)
        })
        .collect();
    by_angle.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = by_angle.len();
    // start right after the widest gap so no cluster straddles it
    let mut start = 0;
    let mut widest = -1.0;
    for i in 0..n {
        let next = if i + 1 < n { by_angle[i + 1].0 } else { by_angle[0].0 + 2.0 * PI };
        let gap = next - by_angle[i].0;
        if gap > widest {
            widest = gap;
            start = (i + 1) % n;
        }
    }
    let mut clusters: Vec<Vec<Point2>> = Vec::new();
    let mut first = 0.0;
    let mut prev = 0.0;
    for k in 0..n {
        let i = (start + k) % n;
        let mut ang = by_angle[i].0;
        if i < start {
            ang += 2.0 * PI;
        }
        if k == 0 || ang - prev > CLUSTER_GAP || ang - first > CLUSTER_SPAN {
            clusters.push(Vec::new());
            first = ang;
        }
        prev = ang;
        clusters.last_mut().expect("pushed above").push(by_angle[i].1);
    }
    clusters
}

// Max-margin direction between a cluster and the keep points, over
// `(a_x, a_y, b, t)` with `a` inside a 16-gon around the unit disc. Returns
// the unit normal and the normalised gap.
fn max_margin(cluster: &[Point2], keep: &[Point2]) -> Option<(Point2, f64)> {
    let mut a = Vec::with_capacity(4 * (cluster.len() + keep.len() + 5));
    let mut b = Vec::with_capacity(cluster.len() + keep.len() + 5);
    for q in cluster {
        a.extend_from_slice(&[-q.x, -q.y, 1.0, 1.0]);
        b.push(0.0);
    }
    for e in keep {
        a.extend_from_slice(&[e.x, e.y, -1.0, 1.0]);
        b.push(0.0);
    }
    for k in 0..16 {
        let d = Point2::from_angle(PI * k as f64 / 8.0);
        a.extend_from_slice(&[d.x, d.y, 0.0, 0.0]);
        b.push(1.0);
    }
    // the gap is scale free, so capping t keeps the LP bounded
    a.extend_from_slice(&[0.0, 0.0, 0.0, 1.0]);
    b.push(1e3);
    let x = maximize(&[0.0, 0.0, 0.0, 1.0], &a, &b).ok()?;
    let n = Point2::new(x[0], x[1]);
    let len = n.norm();
    if !(len > 1e-12) || x[3] <= 0.0 {
        return None;
    }
    let u = n * (1.0 / len);
    let lo = cluster.iter().map(|q| u.dot(*q)).fold(f64::INFINITY, f64::min);
    let hi = keep.iter().map(|e| u.dot(*e)).fold(f64::NEG_INFINITY, f64::max);
    Some((u, lo - hi))
}

fn fit_cluster(cluster: &[Point2], keep: &[Point2], margin: f64, out: &mut Vec<Point2>) -> Result<(), ConvexifyError> {
    let mut stack = vec![cluster.to_vec()];
    while let Some(c) = stack.pop() {
        match max_margin(&c, keep) {
            Some((u, gap)) if gap >= 2.0 * margin => out.push(u),
            _ if c.len() > 1 => {
                let (l, r) = c.split_at(c.len() / 2);
                stack.push(r.to_vec());
                stack.push(l.to_vec());
            }
            _ => return Err(ConvexifyError::Infeasible),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::tests::{clearance_bound, problem};
    use super::super::{inscribed_radius_quality, separate_constrained, verify_separation, ObjectiveKind};
    use super::*;
    use proptest::prelude::*;

    // Best inscribed radius over one- and two-plane arrangements whose
    // angles come from a grid, each plane tightened against the points.
    fn grid_best(p: &SeparationProblem, steps: usize) -> (usize, f64) {
        let base = p.base_planes();
        let open = p.open_points(&base);
        let keep = p.keep_points();
        let dirs: Vec<Point2> = (0..steps).map(|k| Point2::from_angle(2.0 * PI * k as f64 / steps as f64)).collect();
        let mut best = (usize::MAX, 0.0);
        let mut consider = |normals: &[Point2]| {
            if let Some(planes) = tighten(normals, &open, &keep, p.margin) {
                let r = SafeRegion::assemble(planes, &base, p.ego_center(), p.target);
                let key = (r.plane_count(), -r.quality_r);
                if key.0 < best.0 || (key.0 == best.0 && r.quality_r > best.1) {
                    best = (key.0, r.quality_r);
                }
            }
        };
        for i in 0..steps {
            consider(&[dirs[i]]);
            for j in i + 1..steps {
                consider(&[dirs[i], dirs[j]]);
            }
        }
        best
    }

    #[test]
    fn vertical_lines() {
        let mut pts = Vec::new();
        for k in 0..21 {
            let y = -2.0 + 0.25 * k as f64;
            pts.push(Point2::new(2.0, y));
            pts.push(Point2::new(-2.0, y));
        }
        let p = problem(pts, Point2::ORIGIN, Point2::new(0.0, 1.0), 0.3);
        let r = separate_bilevel(&p).unwrap();
        assert!(verify_separation(&r, &p));
        assert_eq!(r.plane_count(), 2);
        for h in &r.planes {
            assert!(h.normal().x.abs() > 0.95, "{h:?}");
        }
        let (h_min, r_grid) = grid_best(&p, 180);
        assert_eq!(h_min, 2);
        assert!(r.quality_r <= 2.0);
        assert!(r.quality_r <= r_grid + 1e-6);
        assert!(r.quality_r >= 1.9 - 1e-9);
        let q = inscribed_radius_quality(&r, p.ego_center(), p.target).unwrap();
        assert!((q - r.quality_r).abs() < 1e-12);
    }

    #[test]
    fn empty_is_free_space() {
        let p = problem(Vec::new(), Point2::ORIGIN, Point2::new(1.0, 0.0), 0.3);
        let r = separate_bilevel(&p).unwrap();
        assert_eq!(r.plane_count(), 0);
        assert_eq!(r.polyhedron.len(), 4);
        for h in r.polyhedron.rows() {
            assert!((h.offset() - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_single_plane() {
        let p = problem(vec![Point2::new(2.0, 0.5)], Point2::ORIGIN, Point2::new(1.0, 0.0), 0.3);
        let r = separate_bilevel(&p).unwrap();
        assert_eq!(r.plane_count(), 1);
        assert!(verify_separation(&r, &p));
    }

    #[test]
    fn point_hugging_the_ego_is_infeasible() {
        let p = problem(vec![Point2::new(0.17, 0.0)], Point2::ORIGIN, Point2::new(1.0, 1.0), 0.3);
        assert_eq!(separate_bilevel(&p), Err(ConvexifyError::Infeasible));
    }

    #[test]
    fn enclosing_ring_becomes_a_polygon() {
        let ring: Vec<Point2> = (0..200).map(|k| Point2::from_angle(2.0 * PI * k as f64 / 200.0) * 1.5).collect();
        let p = problem(ring, Point2::ORIGIN, Point2::new(0.5, 0.0), 0.3);
        let r = separate_bilevel(&p).unwrap();
        assert!(verify_separation(&r, &p));
        assert!(r.plane_count() >= 3);
    }

    #[test]
    fn ring_with_exit_needs_many_planes() {
        // surrounding ring, open only toward the target
        let ring: Vec<Point2> = (0..120)
            .map(|k| 2.0 * PI * k as f64 / 120.0)
            .filter(|t| t.cos() < 0.9)
            .map(|t| Point2::from_angle(t) * 1.5)
            .collect();
        let p = problem(ring, Point2::ORIGIN, Point2::new(1.0, 0.0), 0.3);
        let r = separate_bilevel(&p).unwrap();
        assert!(verify_separation(&r, &p));
        assert!(r.plane_count() >= 3);
    }

    #[test]
    fn clusters_respect_gap_and_span() {
        let pts: Vec<Point2> = [0.0f64, 5.0, 10.0, 60.0, 65.0, 170.0, -175.0]
            .iter()
            .map(|d| Point2::from_angle(d.to_radians()) * 2.0)
            .collect();
        let c = angular_clusters(&pts, Point2::ORIGIN);
        let sizes: Vec<usize> = c.iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 7);
        assert_eq!(c.len(), 3);
        let arc: Vec<Point2> = (0..100).map(|k| Point2::from_angle((k as f64 * 3.0).to_radians()) * 2.0).collect();
        for c in angular_clusters(&arc, Point2::ORIGIN) {
            let ang: Vec<f64> = c.iter().map(|q| q.y.atan2(q.x).rem_euclid(2.0 * PI)).collect();
            let span = ang.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ang.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(span <= CLUSTER_SPAN + 1e-9 || span >= 2.0 * PI - CLUSTER_SPAN - 1e-9);
        }
    }

    #[test]
    fn max_margin_matches_bisector() {
        let keep = [Point2::new(0.0, 0.0)];
        let (u, gap) = max_margin(&[Point2::new(3.0, 4.0)], &keep).unwrap();
        // the polygonal norm ball costs at most its vertex angle
        assert!(u.dot(Point2::new(0.6, 0.8)) >= (PI / 16.0).cos() - 1e-9);
        assert!(gap <= 5.0 + 1e-9 && gap >= 5.0 * (PI / 8.0).cos());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn never_more_planes_than_constrained(
            pts in proptest::collection::vec((0.0..6.3f64, 0.6..4.5f64), 3..40),
            tx in 0.3..1.5f64,
        ) {
            let pts: Vec<Point2> = pts.into_iter().map(|(t, r)| Point2::from_angle(t) * r).collect();
            let target = Point2::new(tx, 0.0);
            prop_assume!(pts.iter().all(|q| q.dist(target) > 0.2));
            let mut p = problem(pts, Point2::ORIGIN, target, 0.3);
            if let Ok(r) = separate_bilevel(&p) {
                prop_assert!(verify_separation(&r, &p));
                prop_assert!(r.quality_r <= clearance_bound(&p));
                let h = r.plane_count().max(1);
                p.n_planes = h;
                if let Ok(c) = separate_constrained(&p, ObjectiveKind::EuclideanSum) {
                    prop_assert!(r.plane_count() <= c.plane_count());
                }
            }
        }
    }
}
