// Derivative-free trust-region minimisation with linear models.
//
// Each iteration fits forward-difference linear models of the objective and
// every constraint on the simplex `x, x + rho e_i`, then takes the step that
// minimises the model inside the box `|s|_inf <= rho`. Infeasible iterates
// first minimise the linearised violation; the objective step keeps that
// violation level. Rejected steps shrink `rho`.

use alloc::vec;
use alloc::vec::Vec;

use crate::clock::Deadline;
use crate::geom::maximize;

pub(crate) trait Problem {
    fn dim(&self) -> usize;
    /// Objective value; `cons` receives constraint values, feasible when `>= 0`.
    fn eval(&self, x: &[f64], cons: &mut Vec<f64>) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Settings {
    pub rho_start: f64,
    pub rho_end: f64,
    pub max_evals: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            rho_start: 0.2,
            rho_end: 1e-3,
            max_evals: 300,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub violation: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub evals: usize,
}

fn violation(c: &[f64]) -> f64 {
    c.iter().fold(0.0, |m, &v| m.max(-v))
}

struct Point {
    x: Vec<f64>,
    f: f64,
    c: Vec<f64>,
    viol: f64,
}

impl Point {
    fn new(p: &dyn Problem, x: Vec<f64>) -> Self {
        let mut c = Vec::new();
        let f = p.eval(&x, &mut c);
        let viol = violation(&c);
        Self { x, f, c, viol }
    }

    fn better_than(&self, o: &Point) -> bool {
        if o.viol > 0.0 {
            self.viol < o.viol || (self.viol == o.viol && self.f < o.f)
        } else {
            self.viol == 0.0 && self.f < o.f - 1e-12 * (1.0 + o.f.abs())
        }
    }
}

pub(crate) fn minimize(p: &dyn Problem, x0: &[f64], s: &Settings, deadline: &dyn Deadline) -> Outcome {
    let n = p.dim();
    let mut cur = Point::new(p, x0.to_vec());
    let mut evals = 1;
    let mut rho = s.rho_start;
    let m = cur.c.len();
    let mut gf = vec![0.0; n];
    let mut gc = vec![0.0; m * n];
    while rho >= s.rho_end && evals + n + 1 <= s.max_evals && !deadline.expired() {
        let mut best_probe: Option<Point> = None;
        for i in 0..n {
            let mut x = cur.x.clone();
            x[i] += rho;
            let probe = Point::new(p, x);
            evals += 1;
            gf[i] = (probe.f - cur.f) / rho;
            for k in 0..m {
                gc[k * n + i] = (probe.c[k] - cur.c[k]) / rho;
            }
            if probe.better_than(best_probe.as_ref().unwrap_or(&cur)) {
                best_probe = Some(probe);
            }
        }

        let step = model_step(&cur, &gf, &gc, n, rho);
        let mut moved = false;
        if let Some(step) = step {
            let x: Vec<f64> = cur.x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let trial = Point::new(p, x);
            evals += 1;
            if trial.better_than(best_probe.as_ref().unwrap_or(&cur)) {
                best_probe = Some(trial);
            }
        }
        if let Some(b) = best_probe {
            if b.better_than(&cur) {
                cur = b;
                moved = true;
            }
        }
        if !moved {
            rho *= 0.5;
        }
    }
    Outcome {
        x: cur.x,
        violation: cur.viol,
        evals,
    }
}

// Two LPs over `(s, v)`: minimum linearised violation, then the model
// objective at that violation level.
fn model_step(cur: &Point, gf: &[f64], gc: &[f64], n: usize, rho: f64) -> Option<Vec<f64>> {
    let nv = n + 1;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut rows = Vec::new();
    for (k, &ck) in cur.c.iter().enumerate() {
        let g = &gc[k * n..(k + 1) * n];
        let reach: f64 = g.iter().map(|v| v.abs()).sum::<f64>() * rho;
        if ck - reach <= 0.0 {
            rows.push(k);
        }
    }
    // -(c + g.s) <= v
    for &k in &rows {
        for j in 0..n {
            a.push(-gc[k * n + j]);
        }
        a.push(-1.0);
        b.push(cur.c[k]);
    }
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; nv];
            row[j] = sign;
            a.extend_from_slice(&row);
            b.push(rho);
        }
    }
    // infeasible iterates aim slightly past the boundary so that rounding
    // does not leave them a hair outside
    let mut row = vec![0.0; nv];
    row[n] = -1.0;
    a.extend_from_slice(&row);
    b.push(if cur.viol > 0.0 { 0.01 * rho } else { 0.0 });

    let v_star = if cur.viol > 0.0 {
        let mut c = vec![0.0; nv];
        c[n] = -1.0;
        maximize(&c, &a, &b).ok()?[n]
    } else {
        0.0
    };
    // fix v at its minimum and minimise the objective model
    let mut c = vec![0.0; nv];
    for j in 0..n {
        c[j] = -gf[j];
    }
    let mut cap = vec![0.0; nv];
    cap[n] = 1.0;
    a.extend_from_slice(&cap);
    b.push(v_star + 1e-12);
    let x = maximize(&c, &a, &b).ok()?;
    let s: Vec<f64> = x[..n].to_vec();
    if s.iter().all(|v| v.abs() < 1e-14) {
        return None;
    }
    Some(s)
}
