//! Receding-horizon MPC over a convex safe region.
//!
//! Single shooting: the decision vector is the input sequence and states come
//! from rolling out the same Euler step the simulator uses, so dynamics
//! defects are exactly zero. Each SQP iteration linearizes the footprint
//! corner constraints and takes a Gauss-Newton step on the least-squares
//! cost, with an elastic slack keeping the QP feasible.

use alloc::vec;
use alloc::vec::Vec;

use super::qp::solve_qp;
use super::{integrate, ControlInput, VehicleLimits, VehicleState};
use crate::geom::{OrientedRect, Point2, Polyhedron};
use crate::math::{atan2, cos, sin, sqrt, tan};
use crate::reach::Footprint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcParams {
    pub horizon: usize,
    pub dt: f64,
    pub w_position: f64,
    pub w_heading: f64,
    pub w_speed: f64,
    /// Weight on inputs normalized by their bounds.
    pub w_input: f64,
    /// Weight on normalized input changes between steps.
    pub w_rate: f64,
    pub w_terminal: f64,
    /// Cruise speed (m/s).
    pub v_ref: f64,
    /// The speed reference is capped at `distance to target / arrival_time`.
    pub arrival_time: f64,
    pub limits: VehicleLimits,
    pub footprint: Footprint,
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this.
    pub tolerance: f64,
    /// Constraint tightening applied inside the solver (m).
    pub backoff: f64,
    /// Price of the elastic slack on the region constraints.
    pub slack_penalty: f64,
}

impl Default for MpcParams {
    fn default() -> Self {
        Self {
            horizon: 20,
            dt: 0.05,
            w_position: 1.0,
            w_heading: 0.5,
            w_speed: 0.5,
            w_input: 0.1,
            w_rate: 1.0,
            w_terminal: 5.0,
            v_ref: 4.0,
            arrival_time: 0.5,
            limits: VehicleLimits::default(),
            footprint: Footprint { length: 0.5, width: 0.3 },
            max_iterations: 30,
            tolerance: 1e-6,
            backoff: 1e-4,
            slack_penalty: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpcStatus {
    Optimal,
    /// Iteration cap hit; the best feasible iterate is returned.
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    pub inputs: Vec<ControlInput>,
    pub predicted_states: Vec<VehicleState>,
    pub status: MpcStatus,
    pub cost: f64,
    pub iterations: usize,
}

impl MpcSolution {
    pub fn first_input(&self) -> ControlInput {
        self.inputs.first().copied().unwrap_or(ControlInput::ZERO)
    }

    pub fn is_feasible(&self) -> bool {
        self.status != MpcStatus::Infeasible
    }
}

const NX: usize = 4;
const STAGE_RES: usize = 9;
const FEAS_TOL: f64 = 1e-6;

/// Linearization of the residuals and constraints at an input sequence.
struct Linearization {
    res: Vec<f64>,
    // row-major, res.len() x nu
    jac: Vec<f64>,
    g: Vec<f64>,
    gjac: Vec<f64>,
}

/// The nonlinear program solved by [`solve_mpc`], exposed for inspection.
pub struct MpcProblem<'a> {
    params: &'a MpcParams,
    s0: VehicleState,
    rows: Vec<(Point2, f64)>,
    target: Point2,
    heading_ref: Point2,
    v_ref: f64,
    prev: ControlInput,
    corners: [Point2; 4],
}

impl<'a> MpcProblem<'a> {
    pub fn new(s0: VehicleState, region: &Polyhedron, target: Point2, params: &'a MpcParams, prev: ControlInput) -> Self {
        let d = target - s0.position();
        let dist = d.norm();
        let heading = if dist > 0.05 { atan2(d.y, d.x) } else { s0.heading };
        Self {
            params,
            s0,
            rows: region
                .rows()
                .map(|h| (h.normal(), h.offset()))
                .collect(),
            target,
            heading_ref: Point2::from_angle(heading),
            v_ref: params.v_ref.min(dist / params.arrival_time),
            prev,
            corners: OrientedRect::local_corners(params.footprint.length, params.footprint.width),
        }
    }

    pub fn num_inputs(&self) -> usize {
        2 * self.params.horizon
    }

    pub fn rollout(&self, u: &[f64]) -> Vec<VehicleState> {
        let p = self.params;
        let mut out = Vec::with_capacity(p.horizon + 1);
        out.push(self.s0);
        for k in 0..p.horizon {
            let s = out[k];
            out.push(integrate(&s, &ControlInput::new(u[2 * k], u[2 * k + 1]), p.dt, p.limits.wheelbase, p.limits.v_max));
        }
        out
    }

    fn weights(&self) -> [f64; 6] {
        let p = self.params;
        [
            sqrt(p.w_position),
            sqrt(p.w_heading),
            sqrt(p.w_speed),
            sqrt(p.w_input),
            sqrt(p.w_rate),
            sqrt(p.w_terminal),
        ]
    }

    fn residuals(&self, states: &[VehicleState], u: &[f64]) -> Vec<f64> {
        let p = self.params;
        let [wp, wh, wv, wu, wr, wt] = self.weights();
        let (am, dm) = (p.limits.a_max, p.limits.steer_max);
        let mut r = Vec::with_capacity(STAGE_RES * p.horizon + 2);
        for k in 0..p.horizon {
            let s = &states[k];
            let (pa, pd) = if k == 0 { (self.prev.accel, self.prev.steer) } else { (u[2 * k - 2], u[2 * k - 1]) };
            r.extend_from_slice(&[
                wp * (s.x - self.target.x),
                wp * (s.y - self.target.y),
                wh * (cos(s.heading) - self.heading_ref.x),
                wh * (sin(s.heading) - self.heading_ref.y),
                wv * (s.v - self.v_ref),
                wu * u[2 * k] / am,
                wu * u[2 * k + 1] / dm,
                wr * (u[2 * k] - pa) / am,
                wr * (u[2 * k + 1] - pd) / dm,
            ]);
        }
        let s = &states[p.horizon];
        r.push(wt * (s.x - self.target.x));
        r.push(wt * (s.y - self.target.y));
        r
    }

    /// Nonlinear cost: sum of stage and terminal terms.
    pub fn cost(&self, u: &[f64]) -> f64 {
        let states = self.rollout(u);
        self.residuals(&states, u).iter().map(|v| v * v).sum()
    }

    /// Gradient of the QP objective at the linearization point `u`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let lin = self.linearize(u);
        let nu = self.num_inputs();
        let mut g = vec![0.0; nu];
        for (i, r) in lin.res.iter().enumerate() {
            for (j, gj) in g.iter_mut().enumerate() {
                *gj += 2.0 * r * lin.jac[i * nu + j];
            }
        }
        g
    }

    fn corner_terms(&self, s: &VehicleState) -> [(Point2, Point2); 4] {
        let (sn, cs) = (sin(s.heading), cos(s.heading));
        self.corners.map(|o| {
            let pos = Point2::new(s.x + cs * o.x - sn * o.y, s.y + sn * o.x + cs * o.y);
            let dpsi = Point2::new(-sn * o.x - cs * o.y, cs * o.x - sn * o.y);
            (pos, dpsi)
        })
    }

    /// Worst corner violation of the region over the predicted states.
    pub fn max_violation(&self, states: &[VehicleState]) -> f64 {
        let mut worst: f64 = 0.0;
        for s in states {
            for (c, _) in self.corner_terms(s) {
                for (n, b) in &self.rows {
                    worst = worst.max(n.dot(c) - b);
                }
            }
        }
        worst
    }

    fn linearize(&self, u: &[f64]) -> Linearization {
        let p = self.params;
        let n = p.horizon;
        let nu = 2 * n;
        let states = self.rollout(u);
        let (l, dt) = (p.limits.wheelbase, p.dt);

        // sens[k] is the 4 x nu sensitivity of state k to the inputs
        let mut sens = vec![0.0; (n + 1) * NX * nu];
        for k in 0..n {
            let s = states[k];
            let (a, delta) = (u[2 * k], u[2 * k + 1]);
            let (sp, cp) = (sin(s.heading), cos(s.heading));
            let vn = s.v + a * dt;
            let cv = if (0.0..=p.limits.v_max).contains(&vn) { 1.0 } else { 0.0 };
            let td = tan(delta);
            let (cur, next) = sens.split_at_mut((k + 1) * NX * nu);
            let cur = &cur[k * NX * nu..];
            let next = &mut next[..NX * nu];
            for j in 0..2 * k {
                let (s0, s1, s2, s3) = (cur[j], cur[nu + j], cur[2 * nu + j], cur[3 * nu + j]);
                next[j] = s0 - s.v * sp * dt * s2 + cp * dt * s3;
                next[nu + j] = s1 + s.v * cp * dt * s2 + sp * dt * s3;
                next[2 * nu + j] = s2 + td / l * dt * s3;
                next[3 * nu + j] = cv * s3;
            }
            let cd = cos(delta);
            next[3 * nu + 2 * k] = cv * dt;
            next[2 * nu + 2 * k + 1] = s.v / (l * cd * cd) * dt;
        }

        let res = self.residuals(&states, u);
        let [wp, wh, wv, wu, wr, wt] = self.weights();
        let (am, dm) = (p.limits.a_max, p.limits.steer_max);
        let mut jac = vec![0.0; res.len() * nu];
        for k in 0..=n {
            let sk = &sens[k * NX * nu..(k + 1) * NX * nu];
            let s = &states[k];
            let base = k * STAGE_RES;
            let w_pos = if k < n { wp } else { wt };
            for j in 0..2 * k {
                jac[base * nu + j] = w_pos * sk[j];
                jac[(base + 1) * nu + j] = w_pos * sk[nu + j];
                if k < n {
                    jac[(base + 2) * nu + j] = -wh * sin(s.heading) * sk[2 * nu + j];
                    jac[(base + 3) * nu + j] = wh * cos(s.heading) * sk[2 * nu + j];
                    jac[(base + 4) * nu + j] = wv * sk[3 * nu + j];
                }
            }
            if k < n {
                jac[(base + 5) * nu + 2 * k] = wu / am;
                jac[(base + 6) * nu + 2 * k + 1] = wu / dm;
                jac[(base + 7) * nu + 2 * k] = wr / am;
                jac[(base + 8) * nu + 2 * k + 1] = wr / dm;
                if k > 0 {
                    jac[(base + 7) * nu + 2 * k - 2] = -wr / am;
                    jac[(base + 8) * nu + 2 * k - 1] = -wr / dm;
                }
            }
        }

        let mut g = Vec::new();
        let mut gjac = Vec::new();
        for k in 1..=n {
            let sk = &sens[k * NX * nu..(k + 1) * NX * nu];
            for (c, dpsi) in self.corner_terms(&states[k]) {
                for (nrm, b) in &self.rows {
                    g.push(nrm.dot(c) - b + p.backoff);
                    let dh = nrm.dot(dpsi);
                    gjac.extend((0..nu).map(|j| nrm.x * sk[j] + nrm.y * sk[nu + j] + dh * sk[2 * nu + j]));
                }
            }
        }
        Linearization { res, jac, g, gjac }
    }
}

/// Solves the MPC from a cold start.
pub fn solve_mpc(s0: &VehicleState, region: &Polyhedron, target: Point2, params: &MpcParams) -> MpcSolution {
    solve_mpc_warm(s0, region, target, params, None, ControlInput::ZERO)
}

/// Solves the MPC from an initial input guess (for example the previous
/// plan shifted by one step); `prev` is the input currently applied.
pub fn solve_mpc_warm(
    s0: &VehicleState,
    region: &Polyhedron,
    target: Point2,
    params: &MpcParams,
    warm: Option<&[ControlInput]>,
    prev: ControlInput,
) -> MpcSolution {
    let prob = MpcProblem::new(*s0, region, target, params, prev);
    let n = params.horizon;
    let nu = 2 * n;
    let lim = &params.limits;
    let mut u = vec![0.0; nu];
    if let Some(w) = warm {
        for (k, inp) in w.iter().take(n).enumerate() {
            let c = lim.clamp(*inp);
            u[2 * k] = c.accel;
            u[2 * k + 1] = c.steer;
        }
    }
    let ub: Vec<f64> = (0..nu).map(|j| if j % 2 == 0 { lim.a_max } else { lim.steer_max }).collect();

    let pack = |u: &[f64], status: MpcStatus, iterations: usize| {
        let states = prob.rollout(u);
        MpcSolution {
            inputs: u.chunks(2).map(|c| ControlInput::new(c[0], c[1])).collect(),
            cost: prob.residuals(&states, u).iter().map(|v| v * v).sum(),
            predicted_states: states,
            status,
            iterations,
        }
    };

    if prob.max_violation(&[*s0]) > FEAS_TOL {
        return pack(&u, MpcStatus::Infeasible, 0);
    }

    let rho = params.slack_penalty;
    let merit = |u: &[f64]| {
        let states = prob.rollout(u);
        let cost: f64 = prob.residuals(&states, u).iter().map(|v| v * v).sum();
        (cost, prob.max_violation(&states))
    };
    let (mut cost, mut viol) = merit(&u);
    let mut best: Option<(f64, Vec<f64>)> = if viol <= FEAS_TOL { Some((cost, u.clone())) } else { None };
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..params.max_iterations {
        iterations = it + 1;
        let lin = prob.linearize(&u);
        let nv = nu + 1;
        let mut h = vec![0.0; nv * nv];
        let mut grad = vec![0.0; nv];
        let m_res = lin.res.len();
        for i in 0..m_res {
            let row = &lin.jac[i * nu..(i + 1) * nu];
            let r = lin.res[i];
            for a in 0..nu {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                grad[a] += 2.0 * r * ra;
                for b in a..nu {
                    h[a * nv + b] += 2.0 * ra * row[b];
                }
            }
        }
        for a in 0..nu {
            h[a * nv + a] += 1e-6;
            for b in 0..a {
                h[a * nv + b] = h[b * nv + a];
            }
        }
        h[nu * nv + nu] = 1e-2;
        grad[nu] = rho;

        let mut c = Vec::new();
        let mut d = Vec::new();
        for (i, &gi) in lin.g.iter().enumerate() {
            // rows far inside the region cannot become active in one step
            if gi < -1.5 {
                continue;
            }
            c.extend_from_slice(&lin.gjac[i * nu..(i + 1) * nu]);
            c.push(-1.0);
            d.push(-gi);
        }
        for j in 0..nu {
            let mut row = vec![0.0; nv];
            row[j] = 1.0;
            c.extend_from_slice(&row);
            d.push(ub[j] - u[j]);
            row[j] = -1.0;
            c.extend_from_slice(&row);
            d.push(u[j] + ub[j]);
        }
        let mut row = vec![0.0; nv];
        row[nu] = -1.0;
        c.extend_from_slice(&row);
        d.push(0.0);

        let Ok(sol) = solve_qp(nv, &h, &grad, &c, &d) else {
            break;
        };
        let step = &sol.x[..nu];
        let t = sol.x[nu];
        let dir: f64 = grad[..nu].iter().zip(step).map(|(a, b)| a * b).sum::<f64>() + rho * (t - viol);
        if step.iter().all(|v| v.abs() < 1e-9) {
            converged = true;
            break;
        }

        let phi = cost + rho * viol;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial: Vec<f64> = u
                .iter()
                .zip(step)
                .zip(&ub)
                .map(|((ui, si), b)| (ui + alpha * si).clamp(-b, *b))
                .collect();
            let (tc, tv) = merit(&trial);
            if tc + rho * tv <= phi + 1e-4 * alpha * dir.min(0.0) {
                accepted = Some((trial, tc, tv));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, tc, tv)) = accepted else {
            // no descent along the QP direction: stationary for this model
            converged = true;
            break;
        };
        let decrease = (cost + rho * viol) - (tc + rho * tv);
        u = trial;
        cost = tc;
        viol = tv;
        if viol <= FEAS_TOL && best.as_ref().map_or(true, |(bc, _)| cost < *bc) {
            best = Some((cost, u.clone()));
        }
        if viol <= FEAS_TOL && decrease < params.tolerance {
            converged = true;
            break;
        }
    }

    if converged && viol <= FEAS_TOL {
        return pack(&u, MpcStatus::Optimal, iterations);
    }
    match best {
        Some((_, bu)) => pack(&bu, MpcStatus::MaxIter, iterations),
        None => pack(&u, MpcStatus::Infeasible, iterations),
    }
}
