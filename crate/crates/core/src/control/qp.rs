//! Dense strictly convex QP solver (Goldfarb-Idnani dual active set).
//!
//! Solves `min 1/2 x'Hx + g'x  s.t.  C x <= d` with `H` positive definite.
//! The dual method starts from the unconstrained minimum and adds violated
//! constraints one at a time, so a problem with hundreds of mostly inactive
//! rows costs little more than one with a handful.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{cholesky, dot};
use crate::math::{hypot, sqrt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum QpError {
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("active-set iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Indices of the active constraints.
    pub active: Vec<usize>,
    /// Multipliers of the active constraints, same order.
    pub multipliers: Vec<f64>,
}

struct Factors {
    n: usize,
    // column-major: column k is j[k*n..(k+1)*n]
    j: Vec<f64>,
    r: Vec<f64>,
    q: usize,
}

impl Factors {
    fn col(&self, k: usize) -> &[f64] {
        &self.j[k * self.n..(k + 1) * self.n]
    }

    fn rotate_j(&mut self, a: usize, b: usize, c: f64, s: f64) {
        let n = self.n;
        for i in 0..n {
            let (x, y) = (self.j[a * n + i], self.j[b * n + i]);
            self.j[a * n + i] = c * x + s * y;
            self.j[b * n + i] = -s * x + c * y;
        }
    }

    fn add(&mut self, d: &mut [f64]) {
        let n = self.n;
        for k in (self.q + 1..n).rev() {
            let (a, b) = (d[k - 1], d[k]);
            if b == 0.0 {
                continue;
            }
            let h = hypot(a, b);
            let (c, s) = (a / h, b / h);
            d[k - 1] = h;
            d[k] = 0.0;
            self.rotate_j(k - 1, k, c, s);
        }
        let q = self.q;
        self.r[q * n..q * n + q + 1].copy_from_slice(&d[..=q]);
        self.q += 1;
    }

    fn drop(&mut self, l: usize) {
        let n = self.n;
        let q = self.q;
        for k in l..q - 1 {
            let (src, dst) = ((k + 1) * n, k * n);
            self.r.copy_within(src..src + n, dst);
        }
        for k in l..q - 1 {
            let (a, b) = (self.r[k * n + k], self.r[k * n + k + 1]);
            if b == 0.0 {
                continue;
            }
            let h = hypot(a, b);
            let (c, s) = (a / h, b / h);
            for col in k..q - 1 {
                let (x, y) = (self.r[col * n + k], self.r[col * n + k + 1]);
                self.r[col * n + k] = c * x + s * y;
                self.r[col * n + k + 1] = -s * x + c * y;
            }
            self.rotate_j(k, k + 1, c, s);
        }
        self.q -= 1;
    }

    /// Solves `R r = d[..q]` by back substitution.
    fn r_solve(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        let q = self.q;
        let mut r = d[..q].to_vec();
        for i in (0..q).rev() {
            for k in i + 1..q {
                r[i] -= self.r[k * n + i] * r[k];
            }
            r[i] /= self.r[i * n + i];
        }
        r
    }
}

/// Solves `min 1/2 x'Hx + g'x` subject to `C x <= d`.
///
/// `h` is `n x n` and `c` is `m x n`, both row-major.
pub fn solve_qp(n: usize, h: &[f64], g: &[f64], c: &[f64], d: &[f64]) -> Result<QpSolution, QpError> {
    let m = d.len();
    assert_eq!(h.len(), n * n);
    assert_eq!(g.len(), n);
    assert_eq!(c.len(), m * n);
    let l = cholesky(n, h).ok_or(QpError::NotPositiveDefinite)?;

    // J = L^{-T}, upper triangular; stored column-major.
    let mut j = vec![0.0; n * n];
    for col in 0..n {
        // solve L^T x = e_col
        let mut x = vec![0.0; n];
        x[col] = 1.0;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        j[col * n..(col + 1) * n].copy_from_slice(&x);
    }
    let mut f = Factors { n, j, r: vec![0.0; n * n], q: 0 };

    // unconstrained minimum x = -J J^T g
    let jtg: Vec<f64> = (0..n).map(|k| dot(f.col(k), g)).collect();
    let mut x = vec![0.0; n];
    for k in 0..n {
        for i in 0..n {
            x[i] -= f.col(k)[i] * jtg[k];
        }
    }

    let norms: Vec<f64> = (0..m).map(|i| sqrt(dot(&c[i * n..(i + 1) * n], &c[i * n..(i + 1) * n]))).collect();
    let slack = |x: &[f64], i: usize| d[i] - dot(&c[i * n..(i + 1) * n], x);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let max_iter = 1000 + 10 * (m + n);
    let mut iter = 0;

    loop {
        // most violated constraint, scaled by row norm
        let mut p = usize::MAX;
        let mut worst = 0.0;
        for i in 0..m {
            if norms[i] == 0.0 || active.contains(&i) {
                continue;
            }
            let s = slack(&x, i) / norms[i];
            if s < -1e-10 * (1.0 + d[i].abs() / norms[i]) && s < worst {
                worst = s;
                p = i;
            }
        }
        if p == usize::MAX {
            return Ok(QpSolution { x, active, multipliers: u });
        }
        let np: Vec<f64> = c[p * n..(p + 1) * n].iter().map(|v| -v).collect();
        let mut u_plus = u.clone();
        u_plus.push(0.0);
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(QpError::IterationLimit);
            }
            let mut dv: Vec<f64> = (0..n).map(|k| dot(f.col(k), &np)).collect();
            let q = f.q;
            let mut z = vec![0.0; n];
            for k in q..n {
                if dv[k] != 0.0 {
                    for (zi, ji) in z.iter_mut().zip(f.col(k)) {
                        *zi += dv[k] * ji;
                    }
                }
            }
            let r = f.r_solve(&dv);
            let mut t1 = f64::INFINITY;
            let mut l_idx = usize::MAX;
            for k in 0..q {
                if r[k] > 1e-14 {
                    let ratio = u_plus[k] / r[k];
                    if ratio < t1 {
                        t1 = ratio;
                        l_idx = k;
                    }
                }
            }
            let zn = dot(&z, &np);
            let t2 = if zn > 1e-14 * dot(&np, &np) {
                -slack(&x, p) / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(QpError::Infeasible);
            }
            if t2.is_infinite() {
                for k in 0..q {
                    u_plus[k] -= t * r[k];
                }
                u_plus[q] += t;
                u_plus.remove(l_idx);
                active.remove(l_idx);
                f.drop(l_idx);
                continue;
            }
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += t * zi;
            }
            for k in 0..q {
                u_plus[k] -= t * r[k];
            }
            u_plus[q] += t;
            if t2 <= t1 {
                f.add(&mut dv);
                active.push(p);
                u = u_plus;
                break;
            }
            u_plus.remove(l_idx);
            active.remove(l_idx);
            f.drop(l_idx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Lu;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn objective(n: usize, h: &[f64], g: &[f64], x: &[f64]) -> f64 {
        let mut v = dot(g, x);
        for i in 0..n {
            for k in 0..n {
                v += 0.5 * x[i] * h[i * n + k] * x[k];
            }
        }
        v
    }

    // Oracle: try every active set of size <= n, keep the best feasible KKT point.
    fn brute_force(n: usize, h: &[f64], g: &[f64], c: &[f64], d: &[f64]) -> Option<Vec<f64>> {
        let m = d.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << m) {
            let act: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
            if act.len() > n {
                continue;
            }
            let k = n + act.len();
            let mut kkt = vec![0.0; k * k];
            let mut rhs = vec![0.0; k];
            for i in 0..n {
                for j in 0..n {
                    kkt[i * k + j] = h[i * n + j];
                }
                rhs[i] = -g[i];
            }
            for (a, &row) in act.iter().enumerate() {
                for j in 0..n {
                    kkt[(n + a) * k + j] = c[row * n + j];
                    kkt[j * k + n + a] = c[row * n + j];
                }
                rhs[n + a] = d[row];
            }
            let Some(lu) = Lu::new(k, &kkt) else { continue };
            let sol = lu.solve(&rhs);
            let x = &sol[..n];
            if sol[n..].iter().any(|&l| l < -1e-9) {
                continue;
            }
            if (0..m).any(|i| dot(&c[i * n..(i + 1) * n], x) > d[i] + 1e-9) {
                continue;
            }
            let v = objective(n, h, g, x);
            if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
                best = Some((v, x.to_vec()));
            }
        }
        best.map(|b| b.1)
    }

    #[test]
    fn unconstrained_minimum() {
        let s = solve_qp(2, &[2.0, 0.0, 0.0, 4.0], &[-2.0, -4.0], &[], &[]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_onto_halfplane() {
        // min |x - (2,2)|^2 s.t. x + y <= 1 -> (0.5, 0.5)
        let s = solve_qp(2, &[2.0, 0.0, 0.0, 2.0], &[-4.0, -4.0], &[1.0, 1.0], &[1.0]).unwrap();
        assert!((s.x[0] - 0.5).abs() < 1e-12 && (s.x[1] - 0.5).abs() < 1e-12);
        assert_eq!(s.active, alloc::vec![0]);
        assert!((s.multipliers[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_indefinite() {
        let h = [1.0, 0.0, 0.0, 1.0];
        let c = [1.0, 0.0, -1.0, 0.0];
        assert_eq!(solve_qp(2, &h, &[0.0, 0.0], &c, &[-1.0, -1.0]), Err(QpError::Infeasible));
        assert_eq!(
            solve_qp(2, &[1.0, 0.0, 0.0, -1.0], &[0.0, 0.0], &[], &[]),
            Err(QpError::NotPositiveDefinite)
        );
    }

    #[test]
    fn random_problems_match_active_set_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut solved = 0;
        for _ in 0..300 {
            let n = rng.gen_range(1..4);
            let m = rng.gen_range(0..7);
            // H = A A^T + 0.1 I
            let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut h = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum::<f64>();
                }
                h[i * n + i] += 0.1;
            }
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let c: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let oracle = brute_force(n, &h, &g, &c, &d);
            match solve_qp(n, &h, &g, &c, &d) {
                Ok(s) => {
                    let o = oracle.expect("solver found a point the oracle missed");
                    let (vs, vo) = (objective(n, &h, &g, &s.x), objective(n, &h, &g, &o));
                    assert!((vs - vo).abs() < 1e-7 * (1.0 + vo.abs()), "{vs} vs {vo}");
                    assert!((0..m).all(|i| dot(&c[i * n..(i + 1) * n], &s.x) <= d[i] + 1e-8));
                    assert!(s.multipliers.iter().all(|&u| u >= -1e-9));
                    solved += 1;
                }
                Err(QpError::Infeasible) => assert!(oracle.is_none()),
                Err(e) => panic!("{e}"),
            }
        }
        assert!(solved > 100);
    }
}
