//! Semismooth Newton method for the proximal ALM subproblem
//!
//! ```text
//! phi(y) = L_sigma(y; u~, v~) + (c / 2 sigma) |y - y~|^2
//! grad   = A^T max(0, sigma(Ay - b) + u~) + D Pi_C2(sigma D y + v~) + (c/sigma)(y - y~)
//! H      = sigma A^T U A + sigma D V D + (c/sigma) I
//! ```
//!
//! `phi` is evaluated up to an additive constant that does not depend on `y`.
//! Everything works on the involved variables of a [`ReducedOperator`].

use log::trace;
use nalgebra::{DMatrix, DVector};

use crate::config::SsnConfig;
use crate::error::{Error, Result};
use crate::prox::{dot, jac_hstar, jac_qstar, norm2, prox_qstar, q_value, DiagLowRankJacobian};
use crate::triop::ReducedOperator;
use crate::types::Norm;

/// Data of one inner subproblem: the operator, `sigma`, the proximal scale
/// `c` (for `H = c I`) and the anchors `y~`, `u~`, `v~`.
#[derive(Debug, Clone, Copy)]
pub struct InnerSubproblem<'a> {
    pub op: &'a ReducedOperator,
    pub norm: Norm,
    pub sigma: f64,
    pub h_scale: f64,
    pub anchor_y: &'a [f64],
    pub anchor_u: &'a [f64],
    pub anchor_v: &'a [f64],
}

/// Value, gradient and the prox arguments at a point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub grad: Vec<f64>,
    /// `sigma (A y - b) + u~`
    pub row_arg: Vec<f64>,
    /// `sigma D y + v~`
    pub var_arg: Vec<f64>,
}

impl InnerSubproblem<'_> {
    pub fn dim(&self) -> usize {
        self.op.num_vars()
    }

    fn row_arg(&self, y: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.op.num_rows()];
        self.op.apply(y, &mut w);
        for ((wi, bi), ui) in w.iter_mut().zip(self.op.b()).zip(self.anchor_u) {
            *wi = self.sigma * (*wi - bi) + ui;
        }
        w
    }

    fn var_arg(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.op.weights())
            .zip(self.anchor_v)
            .map(|((yi, wi), vi)| self.sigma * wi * yi + vi)
            .collect()
    }

    fn value_parts(&self, y: &[f64], row_arg: &[f64], var_arg: &[f64], proj: &[f64]) -> f64 {
        let s = self.sigma;
        let h_part: f64 = row_arg.iter().map(|w| w.max(0.0).powi(2)).sum::<f64>() / (2.0 * s);
        // t* = (z - P) / sigma is the prox point of q
        let t: Vec<f64> = var_arg.iter().zip(proj).map(|(z, p)| (z - p) / s).collect();
        let q_part = q_value(&t, self.norm) + dot(proj, proj) / (2.0 * s);
        let prox_part: f64 =
            self.h_scale / (2.0 * s) * y.iter().zip(self.anchor_y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        h_part + q_part + prox_part
    }

    /// `phi(y)` alone (line search).
    pub fn value(&self, y: &[f64]) -> f64 {
        let row_arg = self.row_arg(y);
        let var_arg = self.var_arg(y);
        let proj = prox_qstar(&var_arg, self.norm);
        self.value_parts(y, &row_arg, &var_arg, &proj)
    }

    pub fn evaluate(&self, y: &[f64]) -> Evaluation {
        let row_arg = self.row_arg(y);
        let var_arg = self.var_arg(y);
        let proj = prox_qstar(&var_arg, self.norm);
        let value = self.value_parts(y, &row_arg, &var_arg, &proj);
        let pos: Vec<f64> = row_arg.iter().map(|w| w.max(0.0)).collect();
        let mut grad = vec![0.0; self.dim()];
        self.op.apply_t(&pos, &mut grad);
        let c_over_s = self.h_scale / self.sigma;
        for i in 0..grad.len() {
            grad[i] += self.op.weights()[i] * proj[i] + c_over_s * (y[i] - self.anchor_y[i]);
        }
        Evaluation { value, grad, row_arg, var_arg }
    }
}

/// `phi(y)` and its gradient.
pub fn phi_and_grad(y: &[f64], sub: &InnerSubproblem) -> (f64, Vec<f64>) {
    let e = sub.evaluate(y);
    (e.value, e.grad)
}

/// Generalized Hessian `H = sigma A^T U A + sigma D V D + (c/sigma) I` with
/// `U`, `V` frozen.
#[derive(Debug, Clone)]
pub struct NewtonMatrix<'a> {
    sub: InnerSubproblem<'a>,
    row_mask: Vec<f64>,
    v_jac: DiagLowRankJacobian,
}

impl<'a> NewtonMatrix<'a> {
    pub fn new(sub: InnerSubproblem<'a>, u_jac: &DiagLowRankJacobian, v_jac: DiagLowRankJacobian) -> Self {
        assert_eq!(u_jac.dim(), sub.op.num_rows());
        assert_eq!(v_jac.dim(), sub.dim());
        NewtonMatrix { sub, row_mask: u_jac.diag.clone(), v_jac }
    }

    /// Jacobians at the current point.
    pub fn at(sub: InnerSubproblem<'a>, eval: &Evaluation) -> Self {
        let u = jac_hstar(&eval.row_arg);
        let v = jac_qstar(&eval.var_arg, sub.norm);
        Self::new(sub, &u, v)
    }

    pub fn dim(&self) -> usize {
        self.sub.dim()
    }

    pub fn apply(&self, d: &[f64], out: &mut [f64]) {
        let op = self.sub.op;
        let s = self.sub.sigma;
        let mut ad = vec![0.0; op.num_rows()];
        op.apply(d, &mut ad);
        for (a, m) in ad.iter_mut().zip(&self.row_mask) {
            *a *= s * m;
        }
        op.apply_t(&ad, out);
        let w = op.weights();
        let wd: Vec<f64> = d.iter().zip(w).map(|(di, wi)| di * wi).collect();
        let vwd = self.v_jac.apply_vec(&wd);
        let c_over_s = self.sub.h_scale / s;
        for i in 0..out.len() {
            out[i] += s * w[i] * vwd[i] + c_over_s * d[i];
        }
    }

    pub fn apply_vec(&self, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; d.len()];
        self.apply(d, &mut out);
        out
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let op = self.sub.op;
        let s = self.sub.sigma;
        let mut deg = vec![0.0; op.num_vars()];
        op.masked_degree(&self.row_mask, &mut deg);
        let w = op.weights();
        let c_over_s = self.sub.h_scale / s;
        (0..deg.len()).map(|i| s * deg[i] + s * w[i] * w[i] * self.v_jac.diag_entry(i) + c_over_s).collect()
    }

    fn dense(&self) -> DMatrix<f64> {
        let op = self.sub.op;
        let m = op.num_vars();
        let s = self.sub.sigma;
        let mut h = DMatrix::<f64>::zeros(m, m);
        for (row, &mask) in op.rows().iter().zip(&self.row_mask) {
            if mask == 0.0 {
                continue;
            }
            let signs = [1.0, -1.0, -1.0];
            for (p, &i) in row.iter().enumerate() {
                for (q, &j) in row.iter().enumerate() {
                    h[(i as usize, j as usize)] += s * mask * signs[p] * signs[q];
                }
            }
        }
        let w = op.weights();
        for i in 0..m {
            h[(i, i)] += s * w[i] * w[i] * self.v_jac.diag[i] + self.sub.h_scale / s;
        }
        if let Some((g, alpha)) = &self.v_jac.lowrank {
            for i in 0..m {
                let gi = g[i] * w[i];
                if gi == 0.0 {
                    continue;
                }
                for j in 0..m {
                    h[(i, j)] -= s * alpha * gi * g[j] * w[j];
                }
            }
        }
        h
    }
}

/// `H d` for frozen Jacobians `U` (rows) and `V` (variables).
pub fn hess_apply(d: &[f64], u_jac: &DiagLowRankJacobian, v_jac: &DiagLowRankJacobian, sub: &InnerSubproblem) -> Vec<f64> {
    NewtonMatrix::new(*sub, u_jac, v_jac.clone()).apply_vec(d)
}

/// Result of one linear solve.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub direction: Vec<f64>,
    pub cg_iters: usize,
    pub residual: f64,
    /// `false` when CG hit its cap before reaching the tolerance.
    pub converged: bool,
}

/// Solves `H dy = -grad` to residual `min(eta_bar, |grad|^(1+tau))`, either by
/// a dense Cholesky factorization (small systems) or by Jacobi-preconditioned CG.
pub fn newton_step(grad: &[f64], hess: &NewtonMatrix, cfg: &SsnConfig) -> NewtonStep {
    let gnorm = norm2(grad);
    let eta = cfg.eta_bar.min(gnorm.powf(1.0 + cfg.tau));
    let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
    if hess.dim() <= cfg.direct_max_dim {
        if let Some(chol) = hess.dense().cholesky() {
            let x = chol.solve(&DVector::from_column_slice(&rhs));
            let direction: Vec<f64> = x.iter().copied().collect();
            let hx = hess.apply_vec(&direction);
            let residual = norm2(&hx.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
            if residual <= eta {
                return NewtonStep { direction, cg_iters: 0, residual, converged: true };
            }
        }
    }
    pcg(hess, &rhs, eta, cfg.cg_max_iters)
}

fn pcg(hess: &NewtonMatrix, rhs: &[f64], tol: f64, max_iters: usize) -> NewtonStep {
    let m = rhs.len();
    let inv_diag: Vec<f64> = hess.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; m];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; m];
    let mut residual = norm2(&r);
    for it in 1..=max_iters {
        hess.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return NewtonStep { direction: x, cg_iters: it, residual, converged: false };
        }
        let alpha = rz / pap;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        residual = norm2(&r);
        if residual <= tol {
            return NewtonStep { direction: x, cg_iters: it, residual, converged: true };
        }
        for i in 0..m {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    NewtonStep { direction: x, cg_iters: max_iters, residual, converged: false }
}

/// Armijo backtracking: the first `alpha = delta^m` with
/// `phi(y + alpha dy) <= phi(y) + mu alpha <grad, dy>`.
///
/// Returns `(alpha, phi(y + alpha dy))`.
pub fn line_search(
    y: &[f64],
    dy: &[f64],
    phi0: f64,
    slope: f64,
    sub: &InnerSubproblem,
    cfg: &SsnConfig,
) -> Result<(f64, f64)> {
    if !(slope < 0.0) {
        return Err(Error::arg(format!("not a descent direction (slope {slope:e})")));
    }
    let mut alpha = 1.0;
    let mut trial = vec![0.0; y.len()];
    for _ in 0..=cfg.max_backtracks {
        for i in 0..y.len() {
            trial[i] = y[i] + alpha * dy[i];
        }
        let target = phi0 + cfg.mu * alpha * slope;
        if target >= phi0 {
            // the required decrease is below the resolution of phi
            break;
        }
        let phi = sub.value(&trial);
        if phi <= target {
            return Ok((alpha, phi));
        }
        alpha *= cfg.delta;
    }
    Err(Error::LineSearch { steps: cfg.max_backtracks, slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsnStatus {
    Converged,
    MaxIterations,
    /// The line search could not make progress; typically the gradient is at
    /// the rounding floor of `phi`.
    Stagnated,
}

#[derive(Debug, Clone)]
pub struct SsnOutcome {
    pub y: Vec<f64>,
    pub status: SsnStatus,
    pub iterations: usize,
    pub cg_iters: usize,
    pub cg_failures: usize,
    /// `|grad phi|` at every iterate, starting with `y0`.
    pub grad_norms: Vec<f64>,
    /// Evaluation at the returned `y`.
    pub eval: Evaluation,
}

/// Runs semismooth Newton from `y0` until `|grad phi| <= stop_grad_norm`.
pub fn ssn_solve(sub: &InnerSubproblem, y0: &[f64], stop_grad_norm: f64, cfg: &SsnConfig) -> SsnOutcome {
    ssn_solve_with(sub, y0, cfg, |_, _, gnorm| gnorm <= stop_grad_norm)
}

/// Semismooth Newton with a caller-supplied stopping test
/// `stop(y, eval, |grad|)`.
pub fn ssn_solve_with(
    sub: &InnerSubproblem,
    y0: &[f64],
    cfg: &SsnConfig,
    mut stop: impl FnMut(&[f64], &Evaluation, f64) -> bool,
) -> SsnOutcome {
    let mut y = y0.to_vec();
    let mut eval = sub.evaluate(&y);
    let mut gnorm = norm2(&eval.grad);
    let mut out = SsnOutcome {
        y: Vec::new(),
        status: SsnStatus::MaxIterations,
        iterations: 0,
        cg_iters: 0,
        cg_failures: 0,
        grad_norms: vec![gnorm],
        eval: eval.clone(),
    };
    for j in 0..cfg.max_iters {
        if stop(&y, &eval, gnorm) {
            out.status = SsnStatus::Converged;
            break;
        }
        let hess = NewtonMatrix::at(*sub, &eval);
        let step = newton_step(&eval.grad, &hess, cfg);
        out.cg_iters += step.cg_iters;
        let mut dy = step.direction;
        let mut slope = dot(&eval.grad, &dy);
        if !step.converged {
            out.cg_failures += 1;
        }
        if !(slope < 0.0) {
            dy = eval.grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
        }
        match line_search(&y, &dy, eval.value, slope, sub, cfg) {
            Ok((alpha, _)) => {
                for i in 0..y.len() {
                    y[i] += alpha * dy[i];
                }
                eval = sub.evaluate(&y);
                gnorm = norm2(&eval.grad);
                out.grad_norms.push(gnorm);
                out.iterations = j + 1;
                trace!("ssn iter {} |grad| {:.3e} alpha {} cg {}", j + 1, gnorm, alpha, step.cg_iters);
            }
            Err(_) => {
                // Armijo cannot resolve decreases below the rounding floor of phi;
                // accept a full step that still shrinks the gradient.
                let trial: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + b).collect();
                let te = sub.evaluate(&trial);
                let tn = norm2(&te.grad);
                let floor = 64.0 * f64::EPSILON * eval.value.abs().max(1.0);
                if tn < gnorm && te.value <= eval.value + floor {
                    y = trial;
                    eval = te;
                    gnorm = tn;
                    out.grad_norms.push(gnorm);
                    out.iterations = j + 1;
                } else {
                    out.status = SsnStatus::Stagnated;
                    break;
                }
            }
        }
    }
    if out.status == SsnStatus::MaxIterations && stop(&y, &eval, gnorm) {
        out.status = SsnStatus::Converged;
    }
    out.y = y;
    out.eval = eval;
    out
}
