//! Episode traces as long-format CSV.
//!
//! One row per fact: `pose` (x, y, heading, v), `plane` (normal x, normal
//! y, offset), `box` (lo x, lo y, hi x, hi y) and `target` (x, y).

use std::io::Write;

use serde::{Deserialize, Serialize};

use hyperace_core::sim::StepRecord;

use crate::{Result, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub format_version: u32,
    pub seed: u64,
    pub t: f64,
    pub agent: usize,
    pub kind: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

pub struct TraceWriter<W: Write> {
    out: csv::Writer<W>,
    seed: u64,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(w: W, seed: u64) -> Self {
        Self {
            out: csv::Writer::from_writer(w),
            seed,
        }
    }

    fn row(&mut self, t: f64, agent: usize, kind: &str, v: [f64; 4]) -> Result<()> {
        self.out.serialize(TraceRow {
            format_version: FORMAT_VERSION,
            seed: self.seed,
            t,
            agent,
            kind: kind.into(),
            a: v[0],
            b: v[1],
            c: v[2],
            d: v[3],
        })?;
        Ok(())
    }

    pub fn record(&mut self, r: &StepRecord) -> Result<()> {
        for (i, a) in r.agents.iter().enumerate() {
            let s = a.state;
            self.row(r.t, i, "pose", [s.x, s.y, s.heading, s.v])?;
        }
        for (i, plan) in r.plans.iter().enumerate() {
            let Some(plan) = plan else { continue };
            if let Some(p) = plan.target {
                self.row(r.t, i, "target", [p.x, p.y, 0.0, 0.0])?;
            }
            for h in &plan.planes {
                let n = h.normal();
                self.row(r.t, i, "plane", [n.x, n.y, h.offset(), 0.0])?;
            }
            for b in &plan.reach_boxes {
                self.row(r.t, i, "box", [b.lo.x, b.lo.y, b.hi.x, b.hi.y])?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn read_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let rows = rd.deserialize().collect::<std::result::Result<Vec<TraceRow>, _>>()?;
    Ok(rows)
}
