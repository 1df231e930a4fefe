// Dense two-phase simplex for small linear programs with free variables.
//
// `max c.x  s.t.  A x <= b` is solved through its dual
// `min b.y  s.t.  A^T y = c, y >= 0`, whose basis has only `n` rows. Every
// problem in this crate has a handful of variables and possibly thousands of
// rows, so the dual tableau stays tiny. The primal solution is read back
// from the simplex multipliers stored under the artificial columns.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
}

const PIVOT_EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 50_000;

enum Dual {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    // reduced costs; `obj` holds the current objective value
    d: Vec<f64>,
    obj: f64,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let cols = self.cols;
        let inv = 1.0 / self.at(p, q);
        for v in &mut self.t[p * cols..(p + 1) * cols] {
            *v *= inv;
        }
        self.rhs[p] *= inv;
        let (before, rest) = self.t.split_at_mut(p * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for (i, row) in before
            .chunks_exact_mut(cols)
            .chain(after.chunks_exact_mut(cols))
            .enumerate()
        {
            let i = if i >= p { i + 1 } else { i };
            let f = row[q];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * self.rhs[p];
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, pv) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.obj += f * self.rhs[p];
        }
        self.basis[p] = q;
    }

    /// Runs simplex iterations over entering columns `0..enter_limit`.
    /// Returns `false` when the objective is unbounded below.
    fn optimize(&mut self, enter_limit: usize, cost_eps: f64) -> bool {
        let mut degenerate_streak = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate_streak > 2 * (self.rows + 10);
            let mut q = usize::MAX;
            let mut best = -cost_eps;
            for j in 0..enter_limit {
                let dj = self.d[j];
                if dj < best {
                    q = j;
                    if bland {
                        break;
                    }
                    best = dj;
                }
            }
            if q == usize::MAX {
                return true;
            }
            let mut p = usize::MAX;
            let mut ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, q);
                if a > PIVOT_EPS {
                    let r = self.rhs[i] / a;
                    if r < ratio - 1e-12 || (r <= ratio + 1e-12 && p != usize::MAX && self.basis[i] < self.basis[p]) {
                        ratio = r;
                        p = i;
                    }
                }
            }
            if p == usize::MAX {
                return false;
            }
            if ratio <= 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(p, q);
        }
        // Pivot cap reached; treat the current basis as final.
        true
    }
}

fn solve_dual(c: &[f64], a: &[f64], b: &[f64]) -> Dual {
    let n = c.len();
    let m = b.len();
    let cols = m + n;
    let sign: Vec<f64> = c.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut t = vec![0.0; n * cols];
    for j in 0..m {
        for i in 0..n {
            t[i * cols + j] = sign[i] * a[j * n + i];
        }
    }
    for i in 0..n {
        t[i * cols + m + i] = 1.0;
    }
    let rhs: Vec<f64> = c.iter().zip(&sign).map(|(v, s)| v * s).collect();
    let scale_c: f64 = 1.0 + rhs.iter().sum::<f64>();
    let scale_b: f64 = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

    // Phase 1: minimize the sum of artificials.
    let mut d = vec![0.0; cols];
    for (j, dj) in d.iter_mut().enumerate().take(m) {
        *dj = -(0..n).map(|i| t[i * cols + j]).sum::<f64>();
    }
    let obj = rhs.iter().sum();
    let mut tab = Tableau {
        rows: n,
        cols,
        t,
        rhs,
        basis: (m..m + n).collect(),
        d,
        obj,
    };
    tab.optimize(m, 1e-11 * scale_c);
    if tab.obj > 1e-9 * scale_c {
        return Dual::Infeasible;
    }
    // Drive remaining artificials out where possible.
    for i in 0..n {
        if tab.basis[i] >= m {
            if let Some(j) = (0..m).find(|&j| tab.at(i, j).abs() > 1e-8) {
                tab.pivot(i, j);
            }
        }
    }

    // Phase 2 with the real costs.
    let cost = |j: usize| if j < m { b[j] } else { 0.0 };
    for j in 0..cols {
        tab.d[j] = cost(j) - (0..n).map(|i| cost(tab.basis[i]) * tab.at(i, j)).sum::<f64>();
    }
    tab.obj = (0..n).map(|i| cost(tab.basis[i]) * tab.rhs[i]).sum();
    if !tab.optimize(m, 1e-11 * scale_b) {
        return Dual::Unbounded;
    }
    let x = (0..n).map(|k| -sign[k] * tab.d[m + k]).collect();
    Dual::Optimal(x)
}

/// Maximizes `c.x` subject to `A x <= b` with `x` free.
///
/// `a` is row-major with `b.len()` rows of `c.len()` columns.
pub fn maximize(c: &[f64], a: &[f64], b: &[f64]) -> Result<Vec<f64>, LpError> {
    assert_eq!(a.len(), b.len() * c.len(), "constraint matrix shape");
    match solve_dual(c, a, b) {
        Dual::Optimal(x) => Ok(x),
        Dual::Unbounded => Err(LpError::Infeasible),
        Dual::Infeasible => {
            // Primal is unbounded or infeasible; the zero objective decides.
            let zero = vec![0.0; c.len()];
            match solve_dual(&zero, a, b) {
                Dual::Unbounded => Err(LpError::Infeasible),
                _ => Err(LpError::Unbounded),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0 -> (2, 6), 36
        let a = [1.0, 0.0, 0.0, 2.0, 3.0, 2.0, -1.0, 0.0, 0.0, -1.0];
        let b = [4.0, 12.0, 18.0, 0.0, 0.0];
        let x = maximize(&[3.0, 5.0], &a, &b).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn negative_objective_and_free_variables() {
        // min x + y over x >= -3, y >= -2 (free vars): max -x - y -> (-3, -2)
        let a = [-1.0, 0.0, 0.0, -1.0];
        let x = maximize(&[-1.0, -1.0], &a, &[3.0, 2.0]).unwrap();
        assert!((x[0] + 3.0).abs() < 1e-9 && (x[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn detects_unbounded_and_infeasible() {
        assert_eq!(maximize(&[1.0], &[-1.0], &[0.0]), Err(LpError::Unbounded));
        assert_eq!(maximize(&[1.0], &[], &[]), Err(LpError::Unbounded));
        assert_eq!(
            maximize(&[0.0], &[1.0, -1.0], &[-1.0, -1.0]),
            Err(LpError::Infeasible)
        );
        // infeasible and with an unbounded direction at the same time
        assert_eq!(
            maximize(&[0.0, 1.0], &[1.0, 0.0, -1.0, 0.0], &[-1.0, -1.0]),
            Err(LpError::Infeasible)
        );
    }

    #[test]
    fn no_constraints_zero_objective() {
        assert_eq!(maximize(&[0.0, 0.0], &[], &[]).unwrap(), alloc::vec![0.0, 0.0]);
    }

    #[test]
    fn degenerate_vertex() {
        // Many constraints through the optimum (1, 1).
        let mut a = alloc::vec::Vec::new();
        let mut b = alloc::vec::Vec::new();
        for k in 0..20 {
            let t = k as f64 / 19.0;
            a.extend_from_slice(&[t, 1.0 - t]);
            b.push(1.0);
        }
        let x = maximize(&[1.0, 1.0], &a, &b).unwrap();
        assert!((x[0] + x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn random_problems_match_vertex_enumeration() {
        // Oracle: enumerate all pairwise intersections in 2D.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let m = rng.gen_range(3..15);
            let mut a = alloc::vec::Vec::new();
            let mut b = alloc::vec::Vec::new();
            for _ in 0..m {
                let ang: f64 = rng.gen_range(0.0..core::f64::consts::TAU);
                a.extend_from_slice(&[libm::cos(ang), libm::sin(ang)]);
                b.push(rng.gen_range(-1.0..2.0));
            }
            let c = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let feasible = |x: f64, y: f64| (0..m).all(|i| a[2 * i] * x + a[2 * i + 1] * y <= b[i] + 1e-9);
            let mut best: Option<f64> = None;
            for i in 0..m {
                for j in i + 1..m {
                    let det = a[2 * i] * a[2 * j + 1] - a[2 * i + 1] * a[2 * j];
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let x = (b[i] * a[2 * j + 1] - a[2 * i + 1] * b[j]) / det;
                    let y = (a[2 * i] * b[j] - b[i] * a[2 * j]) / det;
                    if feasible(x, y) {
                        let v = c[0] * x + c[1] * y;
                        best = Some(best.map_or(v, |bv: f64| bv.max(v)));
                    }
                }
            }
            match maximize(&c, &a, &b) {
                Ok(x) => {
                    assert!(feasible(x[0], x[1]) || (0..m).all(|i| a[2 * i] * x[0] + a[2 * i + 1] * x[1] <= b[i] + 1e-7));
                    let v = c[0] * x[0] + c[1] * x[1];
                    let bv = best.expect("solver optimal but no feasible vertex");
                    assert!((v - bv).abs() < 1e-7, "{v} vs {bv}");
                }
                Err(LpError::Infeasible) => assert!(best.is_none()),
                Err(LpError::Unbounded) => {}
            }
        }
    }
}
