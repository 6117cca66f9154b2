//! Proximal augmented Lagrangian method over a fixed working set.
//!
//! Each outer iteration minimizes `phi_k` with semismooth Newton, then sets
//! `u = max(0, sigma (A y - b) + u)` and `v = Pi_C2(sigma D y + v)`. The inner
//! solve stops once `|grad phi_k|` drops below the practical target
//! `min(0.1 eta_kkt_prev, tol)`, or below the summable bound
//! `eps_k sqrt(lambda_min) / sigma_k` while the companion step-relative bound
//! `delta_k sqrt(lambda_min) / sigma_k |(y,u,v)+ - (y,u,v)|_M` also holds.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::prox::{norm2, prox_q, prox_qstar, q_value};
use crate::ssn::{ssn_solve_with, InnerSubproblem, SsnStatus};
use crate::triop::{apply_a, apply_at, ReducedOperator};
use crate::types::{Norm, ProblemInstance, TriVec};

/// Per-iteration record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PalmIterate {
    pub sigma: f64,
    pub eta_kkt: f64,
    pub rel_gap: f64,
    /// `max(A_S y - b_S)`.
    pub max_violation: f64,
    pub pobj: f64,
    pub dobj: f64,
    pub ssn_iters: usize,
    pub cg_iters: usize,
    pub inner_grad_norm: f64,
    pub inner_stagnated: bool,
}

/// Primal-dual iterate of the proximal ALM.
///
/// `y` and `v` are full length and vanish off the involved variables; `u` is
/// aligned with the working set.
#[derive(Debug, Clone, PartialEq)]
pub struct PalmState {
    pub y: TriVec,
    pub u: Vec<f64>,
    pub v: TriVec,
    pub sigma: f64,
    pub iterations: usize,
    pub history: Vec<PalmIterate>,
}

impl PalmState {
    pub fn new(n: usize, num_constraints: usize, sigma: f64) -> Self {
        PalmState {
            y: TriVec::zeros(n),
            u: vec![0.0; num_constraints],
            v: TriVec::zeros(n),
            sigma,
            iterations: 0,
            history: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PalmOutcome {
    pub state: PalmState,
    pub converged: bool,
    pub ssn_iters: usize,
    pub cg_iters: usize,
}

/// Dual update at a new primal point `y` (local variables).
pub fn update_multipliers(
    op: &ReducedOperator,
    norm: Norm,
    sigma: f64,
    y: &[f64],
    u: &[f64],
    v: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut ay = vec![0.0; op.num_rows()];
    op.apply(y, &mut ay);
    let u_new = ay
        .iter()
        .zip(op.b())
        .zip(u)
        .map(|((a, b), ui)| (sigma * (a - b) + ui).max(0.0))
        .collect();
    let z: Vec<f64> = y.iter().zip(op.weights()).zip(v).map(|((yi, wi), vi)| sigma * wi * yi + vi).collect();
    (u_new, prox_qstar(&z, norm))
}

/// The three KKT terms from their ingredients.
pub(crate) fn kkt_from_parts(
    dual_resid: &[f64],
    dv: &[f64],
    slack_resid_sq: f64,
    slack_sq: f64,
    dy: &[f64],
    dy_plus_v: &[f64],
    norm: Norm,
) -> f64 {
    let t1 = norm2(dual_resid) / (1.0 + norm2(dv));
    let t2 = slack_resid_sq.sqrt() / (1.0 + slack_sq.sqrt());
    let p = prox_q(dy_plus_v, norm, 1.0);
    let d3: Vec<f64> = dy.iter().zip(&p).map(|(a, b)| a - b).collect();
    let t3 = norm2(&d3) / (1.0 + norm2(dy));
    t1.max(t2).max(t3)
}

/// Relative KKT residual of the problem restricted to the rows of `set`:
///
/// ```text
/// max( |A_S^T u + D v| / (1 + |D v|),
///      |A_S y - b_S - Pi_{R-}(A_S y - b_S + u)| / (1 + |A_S y - b_S|),
///      |D y - Prox_q(D y + v)| / (1 + |D y|) )
/// ```
pub fn kkt_residual(y: &[f64], u: &[f64], v: &[f64], set: &ConstraintSet, instance: &ProblemInstance) -> Result<f64> {
    let n = instance.n();
    let m = instance.num_pairs();
    if y.len() != m || v.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: if y.len() != m { y.len() } else { v.len() } });
    }
    let w = instance.weights_dense();
    let dv: Vec<f64> = v.iter().zip(w).map(|(a, b)| a * b).collect();
    let mut dual = apply_at(u, set, n)?;
    for (d, x) in dual.iter_mut().zip(&dv) {
        *d += x;
    }
    let ay = apply_a(y, set);
    let (mut rs, mut ss) = (0.0, 0.0);
    for ((a, r), ui) in ay.iter().zip(set.records()).zip(u) {
        let s = a - r.b_value;
        let e = s - (s + ui).min(0.0);
        rs += e * e;
        ss += s * s;
    }
    let dy: Vec<f64> = y.iter().zip(w).map(|(a, b)| a * b).collect();
    let dyv: Vec<f64> = dy.iter().zip(v).map(|(a, b)| a + b).collect();
    Ok(kkt_from_parts(&dual, &dv, rs, ss, &dy, &dyv, instance.norm()))
}

/// `(pobj, dobj, R_g)` with `pobj = q(D y)`, `dobj = -<b_S, u_S>`.
pub fn objective_values(y: &[f64], u: &[f64], set: &ConstraintSet, instance: &ProblemInstance) -> (f64, f64, f64) {
    let dy: Vec<f64> = y.iter().zip(instance.weights_dense()).map(|(a, b)| a * b).collect();
    let pobj = q_value(&dy, instance.norm());
    let dobj = -set.records().iter().zip(u).map(|(r, ui)| r.b_value * ui).sum::<f64>();
    (pobj, dobj, relative_gap(pobj, dobj))
}

pub fn relative_gap(pobj: f64, dobj: f64) -> f64 {
    (pobj - dobj).abs() / (1.0 + dobj.abs())
}

struct ReducedMetrics {
    eta_kkt: f64,
    pobj: f64,
    dobj: f64,
    max_violation: f64,
}

fn reduced_metrics(op: &ReducedOperator, norm: Norm, y: &[f64], u: &[f64], v: &[f64]) -> ReducedMetrics {
    let w = op.weights();
    let dv: Vec<f64> = v.iter().zip(w).map(|(a, b)| a * b).collect();
    let mut dual = vec![0.0; op.num_vars()];
    op.apply_t(u, &mut dual);
    for (d, x) in dual.iter_mut().zip(&dv) {
        *d += x;
    }
    let mut ay = vec![0.0; op.num_rows()];
    op.apply(y, &mut ay);
    let (mut rs, mut ss, mut maxv) = (0.0, 0.0, f64::NEG_INFINITY);
    let mut dobj = 0.0;
    for ((a, b), ui) in ay.iter().zip(op.b()).zip(u) {
        let s = a - b;
        let e = s - (s + ui).min(0.0);
        rs += e * e;
        ss += s * s;
        maxv = maxv.max(s);
        dobj -= b * ui;
    }
    let dy: Vec<f64> = y.iter().zip(w).map(|(a, b)| a * b).collect();
    let dyv: Vec<f64> = dy.iter().zip(v).map(|(a, b)| a + b).collect();
    ReducedMetrics {
        eta_kkt: kkt_from_parts(&dual, &dv, rs, ss, &dy, &dyv, norm),
        pobj: q_value(&dy, norm),
        dobj,
        max_violation: maxv,
    }
}

/// Runs the proximal ALM on the rows of `set`, starting from `warm`.
///
/// Variables outside `set.involved()` are held at zero, and so are the
/// matching entries of `v`.
pub fn palm_solve(
    instance: &ProblemInstance,
    set: &ConstraintSet,
    warm: PalmState,
    config: &SolverConfig,
) -> Result<PalmOutcome> {
    if set.is_empty() {
        return Err(Error::arg("working set is empty"));
    }
    if warm.u.len() != set.len() {
        return Err(Error::DimensionMismatch { expected: set.len(), got: warm.u.len() });
    }
    let norm = instance.norm();
    let op = ReducedOperator::new(set, instance);
    let c = config.h_scale_for(norm);
    let sqrt_lam = c.min(1.0).sqrt();

    let mut y = op.gather(&warm.y);
    let mut v = op.gather(&warm.v);
    let mut u = warm.u;
    let mut sigma = warm.sigma;
    let mut history = warm.history;
    let mut eta_prev = f64::INFINITY;
    let mut converged = false;
    let (mut ssn_total, mut cg_total) = (0, 0);
    let mut iterations = warm.iterations;

    for k in 0..config.palm_max_iters {
        let kk = (k + 1) as f64;
        let eps_k = config.eps_seq_scale / (kk * kk);
        let delta_k = (config.delta_seq_scale / (kk * kk)).min(0.9);
        let bound_a = eps_k * sqrt_lam / sigma;
        let practical = (0.1 * eta_prev).min(config.tol);

        let sub = InnerSubproblem { op: &op, norm, sigma, h_scale: c, anchor_y: &y, anchor_u: &u, anchor_v: &v };
        let out = ssn_solve_with(&sub, &y, &config.ssn, |yn, e, g| {
            if g <= practical {
                return true;
            }
            if g > bound_a {
                return false;
            }
            let mut dist = 0.0;
            for (a, b) in yn.iter().zip(&y) {
                dist += c * (a - b) * (a - b);
            }
            for (w, ui) in e.row_arg.iter().zip(&u) {
                dist += (w.max(0.0) - ui).powi(2);
            }
            let vp = prox_qstar(&e.var_arg, norm);
            for (a, b) in vp.iter().zip(&v) {
                dist += (a - b) * (a - b);
            }
            g <= delta_k * sqrt_lam / sigma * dist.sqrt()
        });
        ssn_total += out.iterations;
        cg_total += out.cg_iters;

        let u_new: Vec<f64> = out.eval.row_arg.iter().map(|w| w.max(0.0)).collect();
        let v_new = prox_qstar(&out.eval.var_arg, norm);
        y = out.y;
        u = u_new;
        v = v_new;
        iterations += 1;

        let m = reduced_metrics(&op, norm, &y, &u, &v);
        let rel_gap = relative_gap(m.pobj, m.dobj);
        history.push(PalmIterate {
            sigma,
            eta_kkt: m.eta_kkt,
            rel_gap,
            max_violation: m.max_violation,
            pobj: m.pobj,
            dobj: m.dobj,
            ssn_iters: out.iterations,
            cg_iters: out.cg_iters,
            inner_grad_norm: *out.grad_norms.last().unwrap_or(&f64::NAN),
            inner_stagnated: out.status == SsnStatus::Stagnated,
        });
        debug!(
            "palm {k}: sigma {sigma:.1e} eta {:.2e} gap {rel_gap:.2e} feas {:.2e} pobj {:.6e} ssn {}",
            m.eta_kkt, m.max_violation, m.pobj, out.iterations
        );
        eta_prev = m.eta_kkt;
        if m.eta_kkt < config.tol && rel_gap < config.tol && m.max_violation < config.feas_tol {
            converged = true;
            break;
        }
        sigma = (sigma * config.sigma_growth).min(config.sigma_max);
    }

    let n = instance.n();
    let state = PalmState { y: op.scatter(&y, n), u, v: op.scatter(&v, n), sigma, iterations, history };
    Ok(PalmOutcome { state, converged, ssn_iters: ssn_total, cg_iters: cg_total })
}
