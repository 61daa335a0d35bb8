//! Dense dual active-set solver for strictly convex quadratic programs.
//!
//! Solves `min 1/2 x'Hx + c'x` subject to `a_i'x >= b_i`, with `H` given as
//! symmetric positive-definite diagonal blocks (the condensed MPC Hessian
//! decouples per platform axis, so factoring blockwise is much cheaper than
//! factoring the full matrix). The method is the classical dual active-set
//! scheme: start at the unconstrained minimum, repeatedly add the most
//! violated constraint while keeping dual feasibility, updating a QR
//! factorization of the active normals by Givens rotations. No feasible
//! starting point is needed and infeasibility is detected directly, which is
//! what the receding-horizon loop wants.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Normalized violation below which a constraint counts as satisfied.
const VIOLATION_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("hessian block {0} is not positive definite")]
    NotPositiveDefinite(usize),
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("active-set iteration limit reached")]
    IterationLimit,
    #[error("malformed problem: {0}")]
    Malformed(String),
}

/// One inequality `sum(terms) >= rhs`, terms as (variable index, coefficient).
#[derive(Clone, Debug)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn dot(&self, x: &DVector<f64>) -> f64 {
        self.terms.iter().map(|&(i, v)| v * x[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(_, v)| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Lagrange multiplier per constraint (zero for inactive ones).
    pub multipliers: Vec<f64>,
    /// Indices of the constraints active at the solution.
    pub active: Vec<usize>,
    /// Number of constraint additions performed.
    pub iterations: usize,
}

/// Reusable solver state; one instance per control loop.
#[derive(Debug, Default)]
pub struct DualActiveSet {
    n: usize,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    d: DVector<f64>,
    z: DVector<f64>,
    rvec: Vec<f64>,
    u: Vec<f64>,
    active: Vec<usize>,
    is_active: Vec<bool>,
    norms: Vec<f64>,
}

impl DualActiveSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn resize(&mut self, n: usize, m: usize) {
        if self.n != n {
            self.n = n;
            self.j = DMatrix::zeros(n, n);
            self.r = DMatrix::zeros(n, n);
            self.d = DVector::zeros(n);
            self.z = DVector::zeros(n);
            self.rvec = vec![0.0; n];
        }
        self.u.clear();
        self.active.clear();
        self.is_active.clear();
        self.is_active.resize(m, false);
        self.norms.resize(m, 0.0);
    }

    /// Solve the QP. `blocks` are consumed (their Cholesky factors are taken
    /// in place).
    pub fn solve(
        &mut self,
        blocks: Vec<DMatrix<f64>>,
        c: &DVector<f64>,
        cons: &[LinearConstraint],
    ) -> Result<QpSolution, QpError> {
        let n: usize = blocks.iter().map(|b| b.nrows()).sum();
        if c.len() != n {
            return Err(QpError::Malformed(format!(
                "gradient length {} does not match dimension {n}",
                c.len()
            )));
        }
        self.resize(n, cons.len());
        self.j.fill(0.0);

        // Unconstrained minimum and J = L^{-T}, filled blockwise. The
        // factors are kept for the final KKT polish.
        let mut x = DVector::zeros(n);
        let mut chols = Vec::new();
        let mut off = 0;
        for (bi, block) in blocks.into_iter().enumerate() {
            let m = block.nrows();
            if block.ncols() != m {
                return Err(QpError::Malformed(format!("block {bi} is not square")));
            }
            let chol = nalgebra::Cholesky::new(block)
                .ok_or(QpError::NotPositiveDefinite(bi))?;
            let xb = chol.solve(&c.rows(off, m).clone_owned());
            for i in 0..m {
                x[off + i] = -xb[i];
            }
            // Row jc of the J block is column jc of L^{-1} (forward
            // substitution against unit vectors); lt holds L^T so the inner
            // accumulation walks down a contiguous column.
            let lt = chol.l().transpose();
            let mut y = vec![0.0; m];
            for jc in 0..m {
                y[jc] = 1.0 / lt[(jc, jc)];
                for i in jc + 1..m {
                    let mut acc = 0.0;
                    for k in jc..i {
                        acc += lt[(k, i)] * y[k];
                    }
                    y[i] = -acc / lt[(i, i)];
                }
                for i in jc..m {
                    self.j[(off + jc, off + i)] = y[i];
                }
            }
            chols.push((off, m, chol));
            off += m;
        }

        for (i, con) in cons.iter().enumerate() {
            self.norms[i] = con.norm();
            if self.norms[i] == 0.0 && con.rhs > VIOLATION_TOL {
                return Err(QpError::Infeasible);
            }
        }

        let mut iterations = 0usize;
        let mut ops = 0usize;
        let ops_limit = 40 * n + 400;

        'outer: loop {
            // Most violated constraint, scaled by row norm.
            let mut p = usize::MAX;
            let mut worst = -VIOLATION_TOL;
            for (i, con) in cons.iter().enumerate() {
                if self.is_active[i] || self.norms[i] <= 0.0 {
                    continue;
                }
                let v = (con.dot(&x) - con.rhs) / self.norms[i];
                if v < worst {
                    worst = v;
                    p = i;
                }
            }
            if p == usize::MAX {
                break 'outer;
            }

            let con = &cons[p];
            let mut slack = con.dot(&x) - con.rhs;
            let mut u_plus = 0.0;

            loop {
                ops += 1;
                if ops > ops_limit {
                    return Err(QpError::IterationLimit);
                }
                let q = self.active.len();

                // d = J^T a_p, z = J_2 d_2, rvec = R^{-1} d_1.
                for col in 0..n {
                    let mut acc = 0.0;
                    for &(idx, v) in &con.terms {
                        acc += self.j[(idx, col)] * v;
                    }
                    self.d[col] = acc;
                }
                self.z.fill(0.0);
                let mut ztn = 0.0;
                for col in q..n {
                    let dc = self.d[col];
                    ztn += dc * dc;
                    if dc != 0.0 {
                        for row in 0..n {
                            self.z[row] += dc * self.j[(row, col)];
                        }
                    }
                }
                for i in (0..q).rev() {
                    let mut acc = self.d[i];
                    for k in i + 1..q {
                        acc -= self.r[(i, k)] * self.rvec[k];
                    }
                    self.rvec[i] = acc / self.r[(i, i)];
                }

                let mut t1 = f64::INFINITY;
                let mut drop_idx = usize::MAX;
                for i in 0..q {
                    if self.rvec[i] > 1e-14 {
                        let t = self.u[i] / self.rvec[i];
                        if t < t1 {
                            t1 = t;
                            drop_idx = i;
                        }
                    }
                }
                let step_ok = ztn > 1e-16 * self.norms[p] * self.norms[p];
                let t2 = if step_ok { -slack / ztn } else { f64::INFINITY };

                if !t1.is_finite() && !t2.is_finite() {
                    return Err(QpError::Infeasible);
                }

                if t2.is_finite() {
                    let t = t1.min(t2);
                    x.axpy(t, &self.z, 1.0);
                    slack += t * ztn;
                    for i in 0..q {
                        self.u[i] -= t * self.rvec[i];
                    }
                    u_plus += t;
                    if t2 <= t1 {
                        self.add_active(p, q);
                        self.u.push(u_plus);
                        iterations += 1;
                        continue 'outer;
                    }
                    self.drop_active(drop_idx);
                } else {
                    for i in 0..q {
                        self.u[i] -= t1 * self.rvec[i];
                    }
                    u_plus += t1;
                    self.drop_active(drop_idx);
                }
            }
        }

        self.polish(&chols, c, cons, &mut x);

        let mut multipliers = vec![0.0; cons.len()];
        for (&ci, &ui) in self.active.iter().zip(&self.u) {
            multipliers[ci] = ui;
        }
        Ok(QpSolution {
            x,
            multipliers,
            active: self.active.clone(),
            iterations,
        })
    }

    /// One exact KKT solve on the final active set. The incremental QR
    /// updates accumulate rounding over long add/drop sequences; re-solving
    /// `[H A'; A 0]` from the kept Cholesky factors pushes the solution back
    /// to factorization accuracy. Skipped if it would turn a multiplier
    /// negative or break an inactive constraint.
    fn polish(
        &mut self,
        chols: &[(usize, usize, nalgebra::Cholesky<f64, nalgebra::Dyn>)],
        c: &DVector<f64>,
        cons: &[LinearConstraint],
        x: &mut DVector<f64>,
    ) {
        let ma = self.active.len();
        if ma == 0 {
            return;
        }
        let n = self.n;
        let solve_h = |v: &DVector<f64>| {
            let mut out = DVector::zeros(n);
            for (off, m, chol) in chols {
                let sol = chol.solve(&v.rows(*off, *m).clone_owned());
                for i in 0..*m {
                    out[off + i] = sol[i];
                }
            }
            out
        };

        let mut y = DMatrix::zeros(n, ma);
        for (col, &ci) in self.active.iter().enumerate() {
            let mut av = DVector::zeros(n);
            for &(idx, v) in &cons[ci].terms {
                av[idx] += v;
            }
            y.set_column(col, &solve_h(&av));
        }
        let h_inv_c = solve_h(c);

        let dot_col = |ci: usize, m: &DMatrix<f64>, col: usize| -> f64 {
            cons[ci].terms.iter().map(|&(idx, v)| v * m[(idx, col)]).sum()
        };
        let mut s = DMatrix::zeros(ma, ma);
        let mut rhs = DVector::zeros(ma);
        for i in 0..ma {
            let ci = self.active[i];
            rhs[i] = cons[ci].rhs + cons[ci].dot(&h_inv_c);
            for col in 0..ma {
                s[(i, col)] = dot_col(ci, &y, col);
            }
        }
        let Some(chol_s) = nalgebra::Cholesky::new(s) else {
            return;
        };
        let lam = chol_s.solve(&rhs);
        if lam.iter().any(|&l| l < -1e-9) {
            return;
        }

        let mut x_new = -h_inv_c;
        for (col, &l) in lam.iter().enumerate() {
            x_new.axpy(l, &y.column(col).clone_owned(), 1.0);
        }
        let feasible = cons.iter().enumerate().all(|(i, con)| {
            self.is_active[i] || con.dot(&x_new) - con.rhs >= -1e-9 * self.norms[i].max(1.0)
        });
        if feasible {
            *x = x_new;
            self.u.copy_from_slice(lam.as_slice());
        }
    }

    /// Append constraint `p` to the active set; `self.d` holds J^T a_p.
    fn add_active(&mut self, p: usize, q: usize) {
        let n = self.n;
        for i in ((q + 1)..n).rev() {
            let a = self.d[i - 1];
            let b = self.d[i];
            if b == 0.0 {
                continue;
            }
            let h = if a == 0.0 { b.abs() } else { a.hypot(b).copysign(a) };
            let gc = a / h;
            let gs = b / h;
            self.d[i - 1] = h;
            for row in 0..n {
                let x1 = self.j[(row, i - 1)];
                let x2 = self.j[(row, i)];
                self.j[(row, i - 1)] = gc * x1 + gs * x2;
                self.j[(row, i)] = gc * x2 - gs * x1;
            }
        }
        for row in 0..=q {
            self.r[(row, q)] = self.d[row];
        }
        self.active.push(p);
        self.is_active[p] = true;
    }

    /// Remove the `l`-th active constraint, restoring the triangular factor.
    fn drop_active(&mut self, l: usize) {
        let q = self.active.len();
        for j in l..q - 1 {
            for row in 0..=j + 1 {
                self.r[(row, j)] = self.r[(row, j + 1)];
            }
        }
        for j in l..q - 1 {
            let a = self.r[(j, j)];
            let b = self.r[(j + 1, j)];
            if b != 0.0 {
                let h = if a == 0.0 { b.abs() } else { a.hypot(b).copysign(a) };
                let gc = a / h;
                let gs = b / h;
                self.r[(j, j)] = h;
                self.r[(j + 1, j)] = 0.0;
                for col in j + 1..q - 1 {
                    let x1 = self.r[(j, col)];
                    let x2 = self.r[(j + 1, col)];
                    self.r[(j, col)] = gc * x1 + gs * x2;
                    self.r[(j + 1, col)] = gc * x2 - gs * x1;
                }
                for row in 0..self.n {
                    let x1 = self.j[(row, j)];
                    let x2 = self.j[(row, j + 1)];
                    self.j[(row, j)] = gc * x1 + gs * x2;
                    self.j[(row, j + 1)] = gc * x2 - gs * x1;
                }
            }
        }
        let removed = self.active.remove(l);
        self.is_active[removed] = false;
        self.u.remove(l);
    }
}
