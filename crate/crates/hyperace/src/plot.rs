//! Static SVG plots of benchmark CSVs and episode traces.

use std::collections::BTreeMap;
use std::fmt::Write;

use hyperace_core::world::Track;
use hyperace_core::Point2;

use crate::bench::ScalingRow;
use crate::trace::{read_trace, TraceRow};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Log time against log point count, one curve per method.
    Scaling,
    /// Trajectories with the plan of agent 0 at a chosen time.
    Trace,
}

impl PlotKind {
    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "scaling" => Some(Self::Scaling),
            "trace" => Some(Self::Trace),
            _ => None,
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Affine map from data coordinates to the drawing area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn around(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        Self { x0, x1, y0, y1 }
    }

    fn equal_aspect(mut self) -> Self {
        let sx = (self.x1 - self.x0) / (W - 2.0 * PAD);
        let sy = (self.y1 - self.y0) / (H - 2.0 * PAD);
        let s = sx.max(sy);
        let (cx, cy) = (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1));
        self.x0 = cx - 0.5 * s * (W - 2.0 * PAD);
        self.x1 = cx + 0.5 * s * (W - 2.0 * PAD);
        self.y0 = cy - 0.5 * s * (H - 2.0 * PAD);
        self.y1 = cy + 0.5 * s * (H - 2.0 * PAD);
        self
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }

    fn path(&self, pts: &[(f64, f64)], closed: bool) -> String {
        let mut d = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, self.px(x), self.py(y));
        }
        if closed {
            d.push('Z');
        }
        d
    }
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn parse_scaling(text: &str) -> Result<Vec<ScalingRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    Ok(rd.deserialize().collect::<std::result::Result<Vec<ScalingRow>, _>>()?)
}

/// Median solve time against point count on log-log axes.
pub fn plot_scaling(rows: &[ScalingRow]) -> String {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        let name = if r.objective == "-" { r.method.clone() } else { format!("{} ({})", r.method, r.objective) };
        series
            .entry(name)
            .or_default()
            .push(((r.count.max(1) as f64).log10(), r.median_time_s.max(1e-9).log10()));
    }
    let all = series.values().flatten();
    let f = Frame::around(all.clone().map(|p| p.0), all.map(|p| p.1));
    let mut s = header();
    let _ = writeln!(
        s,
        "<path d=\"M{PAD},{PAD} L{PAD},{b} L{r},{b}\" stroke=\"black\" fill=\"none\"/>",
        b = H - PAD,
        r = W - PAD
    );
    for e in (f.x0.floor() as i32)..=(f.x1.ceil() as i32) {
        let x = f.px(e as f64);
        if (PAD - 1.0..=W - PAD + 1.0).contains(&x) {
            let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">1e{e}</text>", H - PAD + 16.0);
        }
    }
    for e in (f.y0.floor() as i32)..=(f.y1.ceil() as i32) {
        let y = f.py(e as f64);
        if (PAD - 1.0..=H - PAD + 1.0).contains(&y) {
            let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"11\" text-anchor=\"end\">1e{e} s</text>", PAD - 4.0);
        }
    }
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">obstacle points</text>", W / 2.0, H - 12.0);
    for (k, (name, pts)) in series.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let _ = writeln!(s, "<path d=\"{}\" stroke=\"{c}\" stroke-width=\"2\" fill=\"none\"/>", f.path(pts, false));
        for &(x, y) in pts {
            let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{c}\"/>", f.px(x), f.py(y));
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"{c}\">{name}</text>",
            PAD + 10.0,
            PAD + 14.0 * k as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Clips a convex polygon to `a . x <= b`.
fn clip(poly: &[Point2], a: Point2, b: f64) -> Vec<Point2> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (dp, dq) = (a.dot(p) - b, a.dot(q) - b);
        if dp <= 0.0 {
            out.push(p);
        }
        if (dp < 0.0) != (dq < 0.0) && dp != dq {
            out.push(p.lerp(q, dp / (dp - dq)));
        }
    }
    out
}

/// Trajectories of every agent and, at the plan nearest to `at`, the
/// region, reach boxes and target of agent 0.
pub fn plot_trace(rows: &[TraceRow], track: Option<&Track>, at: f64) -> String {
    let mut paths: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == "pose") {
        paths.entry(r.agent).or_default().push((r.a, r.b));
    }
    let plan_t = rows
        .iter()
        .filter(|r| r.agent == 0 && r.kind != "pose")
        .map(|r| r.t)
        .min_by(|a, b| (a - at).abs().total_cmp(&(b - at).abs()));
    let plan: Vec<&TraceRow> = rows
        .iter()
        .filter(|r| r.agent == 0 && r.kind != "pose" && Some(r.t) == plan_t)
        .collect();

    let mut xs: Vec<f64> = paths.values().flatten().map(|p| p.0).collect();
    let mut ys: Vec<f64> = paths.values().flatten().map(|p| p.1).collect();
    if let Some(t) = track {
        for p in t.inner().iter().chain(t.outer()) {
            xs.push(p.x);
            ys.push(p.y);
        }
    }
    let f = Frame::around(xs.iter().copied(), ys.iter().copied()).equal_aspect();
    let mut s = header();
    if let Some(t) = track {
        for b in [t.inner(), t.outer()] {
            let pts: Vec<(f64, f64)> = b.iter().map(|p| (p.x, p.y)).collect();
            let _ = writeln!(s, "<path d=\"{}\" stroke=\"#3050c0\" fill=\"none\"/>", f.path(&pts, t.is_closed()));
        }
    }
    let mut region = vec![
        Point2::new(f.x0, f.y0),
        Point2::new(f.x1, f.y0),
        Point2::new(f.x1, f.y1),
        Point2::new(f.x0, f.y1),
    ];
    let mut has_planes = false;
    for r in plan.iter().filter(|r| r.kind == "plane") {
        region = clip(&region, Point2::new(r.a, r.b), r.c);
        has_planes = true;
    }
    if has_planes && region.len() >= 3 {
        let pts: Vec<(f64, f64)> = region.iter().map(|p| (p.x, p.y)).collect();
        let _ = writeln!(
            s,
            "<path d=\"{}\" fill=\"#ffe08080\" stroke=\"black\" stroke-width=\"1.5\"/>",
            f.path(&pts, true)
        );
    }
    for r in plan.iter().filter(|r| r.kind == "box") {
        let pts = [(r.a, r.b), (r.c, r.b), (r.c, r.d), (r.a, r.d)];
        let _ = writeln!(s, "<path d=\"{}\" fill=\"#40c04060\" stroke=\"#208020\"/>", f.path(&pts, true));
    }
    for (k, (_, pts)) in paths.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        let _ = writeln!(s, "<path d=\"{}\" stroke=\"{c}\" stroke-width=\"1.2\" fill=\"none\"/>", f.path(pts, false));
    }
    for r in plan.iter().filter(|r| r.kind == "target") {
        let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#a020a0\"/>", f.px(r.a), f.py(r.b));
    }
    if let Some(t) = plan_t {
        let _ = writeln!(s, "<text x=\"{PAD}\" y=\"20\" font-size=\"12\">t = {t:.2} s</text>");
    }
    s.push_str("</svg>\n");
    s
}

/// Renders CSV text; an empty file or one without data rows is a parse
/// error.
pub fn plot_csv(text: &str, kind: PlotKind, track: Option<&Track>, at: f64) -> Result<String> {
    if text.lines().filter(|l| !l.trim().is_empty()).count() < 2 {
        return Err(Error::Parse("CSV has no data rows".into()));
    }
    let wrap = |e: Error| match e {
        Error::Csv(c) => Error::Parse(c.to_string()),
        other => other,
    };
    Ok(match kind {
        PlotKind::Scaling => plot_scaling(&parse_scaling(text).map_err(wrap)?),
        PlotKind::Trace => plot_trace(&read_trace(text).map_err(wrap)?, track, at),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_csv_is_parse_error() {
        assert!(matches!(plot_csv("", PlotKind::Scaling, None, 0.0), Err(Error::Parse(_))));
        let header = "format_version,seed,method,objective,count,runs,mean_time_s,median_time_s,infeasible,timeout\n";
        assert!(matches!(plot_csv(header, PlotKind::Scaling, None, 0.0), Err(Error::Parse(_))));
        assert!(matches!(plot_csv("a,b\n1,2\n", PlotKind::Trace, None, 0.0), Err(Error::Parse(_))));
    }

    #[test]
    fn scaling_has_a_curve_per_series() {
        let text = "format_version,seed,method,objective,count,runs,mean_time_s,median_time_s,infeasible,timeout\n\
                    1,0,bilevel,-,10,5,1e-5,1e-5,0,false\n\
                    1,0,bilevel,-,100,5,1e-4,1e-4,0,false\n\
                    1,0,constrained,sat,10,5,1e-3,1e-3,0,false\n\
                    1,0,constrained,sat,100,5,1e-2,1e-2,0,false\n";
        let svg = plot_csv(text, PlotKind::Scaling, None, 0.0).unwrap();
        assert_eq!(svg.matches("stroke-width=\"2\"").count(), 2);
        assert!(svg.contains("constrained (sat)"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn clip_square_by_diagonal() {
        let sq = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let a = Point2::new(1.0, 1.0) * (1.0 / 2f64.sqrt());
        let tri = clip(&sq, a, 1.0 / 2f64.sqrt());
        // x + y <= 1 keeps the lower-left triangle
        let area: f64 = (0..tri.len())
            .map(|i| tri[i].cross(tri[(i + 1) % tri.len()]))
            .sum::<f64>()
            * 0.5;
        assert!((area - 0.5).abs() < 1e-12);
    }
}
