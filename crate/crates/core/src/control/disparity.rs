use alloc::vec::Vec;

use super::ControlError;
use crate::geom::Point2;
use crate::math::ceil;
use crate::sensing::LidarScan;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisparityConfig {
    /// Range jump between neighbouring beams that counts as a disparity (m).
    pub threshold: f64,
    /// Half the vehicle width plus a safety allowance (m).
    pub half_width: f64,
    /// Beams at or below this range do not belong to any gap (m).
    pub min_range: f64,
    /// Targets are placed no farther than this (m).
    pub max_distance: f64,
}

impl Default for DisparityConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            half_width: 0.25,
            min_range: 2.5,
            max_distance: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapTarget {
    pub point: Point2,
    /// Center beam of the chosen gap.
    pub beam: usize,
    /// Extended range along that beam (m).
    pub range: f64,
}

/// Extends the nearer side of every disparity over enough beams to cover
/// `half_width` at that range.
pub fn extend_disparities(scan: &LidarScan, cfg: &DisparityConfig) -> Vec<f64> {
    let r = &scan.ranges;
    let n = r.len();
    let inc = scan.config.increment();
    let mut out = r.clone();
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (r[i], r[i + 1]);
        if (a - b).abs() <= cfg.threshold {
            continue;
        }
        let near = a.min(b);
        let m = ceil(cfg.half_width / (near * inc)) as usize;
        if m == 0 {
            continue;
        }
        if a < b {
            for v in out.iter_mut().skip(i + 1).take(m) {
                *v = v.min(near);
            }
        } else {
            for v in out[(i + 1).saturating_sub(m)..=i].iter_mut() {
                *v = v.min(near);
            }
        }
    }
    out
}

/// Disparity extender: steer for the center of the widest gap.
///
/// Ties between equally wide gaps go to the first one in beam order.
pub fn disparity_extender(scan: &LidarScan, cfg: &DisparityConfig) -> Result<GapTarget, ControlError> {
    let ext = extend_disparities(scan, cfg);
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=ext.len() {
        let open = i < ext.len() && ext[i] > cfg.min_range;
        match (open, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.map_or(true, |(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    let (s, e) = best.ok_or(ControlError::NoGap)?;
    let beam = (s + e - 1) / 2;
    let range = ext[beam];
    let dist = range.min(cfg.max_distance);
    Ok(GapTarget {
        point: scan.pose.position + Point2::from_angle(scan.beam_angle(beam)) * dist,
        beam,
        range,
    })
}
