//! Delayed constraint generation around the proximal ALM.
//!
//! Start from the rows violated at `y = 0`, solve the reduced problem, scan
//! for violated rows outside the working set, add the worst of them (and drop
//! slack ones when the set grows past half the variable count), and repeat
//! until the full-problem certificate passes or nothing new is violated.

use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::constraint::{ConstraintRecord, ConstraintSet};
use crate::error::{Error, Result};
use crate::palm::{kkt_from_parts, palm_solve, relative_gap, PalmState};
use crate::prox::q_value;
use crate::report::SolveReport;
use crate::triop::{apply_a, apply_at, feasibility_scan, violated_rows, ViolationBatch};
use crate::types::{ProblemInstance, TriVec};

/// Full-problem optimality measures at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Relative KKT residual over all rows, with `u = 0` outside the set.
    pub eta_kkt: f64,
    /// `max(A y - b)` over all rows.
    pub eta_f: f64,
    pub pobj: f64,
    pub dobj: f64,
    pub rel_gap: f64,
    /// Violated rows outside the set.
    pub num_violated_outside: usize,
}

/// Solution returned by [`dcgm_solve`].
#[derive(Debug, Clone)]
pub struct DcgmSolution {
    /// `y = trivec(X - X_tilde)`.
    pub y: TriVec,
    /// Final working set with its multipliers.
    pub constraints: ConstraintSet,
    pub v: TriVec,
    pub report: SolveReport,
}

impl DcgmSolution {
    /// Nearest metric `X = X_tilde + y`, as a pair vector.
    pub fn metric(&self, instance: &ProblemInstance) -> TriVec {
        let x: Vec<f64> = self.y.iter().zip(instance.dissim_dense()).map(|(a, b)| a + b).collect();
        TriVec::from_values(instance.n(), x).expect("same length")
    }
}

/// Rows violated at `y = 0`, i.e. those with `b_r < 0`.
pub fn initial_constraints(instance: &ProblemInstance) -> ConstraintSet {
    let zero = vec![0.0; instance.num_pairs()];
    let rows = violated_rows(&zero, instance);
    let records = rows.into_iter().map(|r| ConstraintRecord::new_unchecked(r, instance)).collect();
    ConstraintSet::from_sorted_records(records)
}

/// Working-set update from a scan taken at `y` with the current set excluded.
///
/// If more rows are violated outside than inside, and the set holds more
/// than `n(n-1)/4` rows, the half of the set with the smallest `A_j y - b_j`
/// is dropped first (ties: larger row id dropped last). Then the top
/// `min(|S|, |S'|)` violated rows are added, or `min(|S'|, n)` if the set
/// is empty. Multipliers of kept rows are preserved; new rows start at zero.
pub fn update_working_set(set: &mut ConstraintSet, batch: &ViolationBatch, y: &[f64], instance: &ProblemInstance) {
    let n = instance.n();
    let s_len = set.len();
    let s_new = batch.num_violated;
    if s_new == 0 {
        return;
    }
    if s_new > s_len && s_len > n * (n - 1) / 4 {
        let slack = apply_a(y, set);
        let mut order: Vec<usize> = (0..s_len).collect();
        let recs = set.records();
        order.sort_by(|&i, &j| {
            (slack[i] - recs[i].b_value)
                .total_cmp(&(slack[j] - recs[j].b_value))
                .then(recs[i].row_id.cmp(&recs[j].row_id))
        });
        let mut drop = vec![false; s_len];
        for &i in &order[..s_len / 2] {
            drop[i] = true;
        }
        set.retain_indices(|i| !drop[i]);
    }
    let add = if s_len == 0 { s_new.min(n) } else { s_len.min(s_new) };
    let records = batch.rows.iter().take(add).map(|&(r, _)| ConstraintRecord::new_unchecked(r, instance)).collect();
    set.insert_records(records);
}

fn certify_with_scan(
    y: &[f64],
    u: &[f64],
    v: &[f64],
    set: &ConstraintSet,
    instance: &ProblemInstance,
    scan: &ViolationBatch,
) -> Result<Certificate> {
    let n = instance.n();
    let m = instance.num_pairs();
    if y.len() != m || v.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: if y.len() != m { y.len() } else { v.len() } });
    }
    if u.len() != set.len() {
        return Err(Error::DimensionMismatch { expected: set.len(), got: u.len() });
    }
    let w = instance.weights_dense();
    let dv: Vec<f64> = v.iter().zip(w).map(|(a, b)| a * b).collect();
    let mut dual = apply_at(u, set, n)?;
    for (d, x) in dual.iter_mut().zip(&dv) {
        *d += x;
    }
    let ay = apply_a(y, set);
    let (mut rs, mut ss) = (scan.pos_sq_outside, scan.resid_sq_outside);
    let mut dobj = 0.0;
    for ((a, r), ui) in ay.iter().zip(set.records()).zip(u) {
        let s = a - r.b_value;
        let e = s - (s + ui).min(0.0);
        rs += e * e;
        ss += s * s;
        dobj -= r.b_value * ui;
    }
    let dy: Vec<f64> = y.iter().zip(w).map(|(a, b)| a * b).collect();
    let dyv: Vec<f64> = dy.iter().zip(v).map(|(a, b)| a + b).collect();
    let norm = instance.norm();
    let pobj = q_value(&dy, norm);
    Ok(Certificate {
        eta_kkt: kkt_from_parts(&dual, &dv, rs, ss, &dy, &dyv, norm),
        eta_f: if scan.max_violation.is_finite() { scan.max_violation } else { 0.0 },
        pobj,
        dobj,
        rel_gap: relative_gap(pobj, dobj),
        num_violated_outside: scan.num_violated,
    })
}

/// Full-problem certificate of `(y, u, v)` with `u` aligned to `set` and
/// zero on every other row.
pub fn certify(y: &[f64], u: &[f64], v: &[f64], set: &ConstraintSet, instance: &ProblemInstance) -> Result<Certificate> {
    if y.len() != instance.num_pairs() {
        return Err(Error::DimensionMismatch { expected: instance.num_pairs(), got: y.len() });
    }
    let scan = feasibility_scan(y, instance, set, 0);
    certify_with_scan(y, u, v, set, instance, &scan)
}

fn zero_outside(v: &mut TriVec, involved: &[usize]) {
    let mut it = involved.iter().peekable();
    for (i, x) in v.iter_mut().enumerate() {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            *x = 0.0;
        }
    }
}

/// Solves the weighted metric nearness problem.
pub fn dcgm_solve(instance: &ProblemInstance, config: &SolverConfig) -> Result<DcgmSolution> {
    config.validate()?;
    if config.threads == 0 {
        return solve_inner(instance, config);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::arg(format!("thread pool: {e}")))?;
    pool.install(|| solve_inner(instance, config))
}

fn solve_inner(instance: &ProblemInstance, config: &SolverConfig) -> Result<DcgmSolution> {
    let n = instance.n();
    let start = Instant::now();
    let mut report = SolveReport::default();

    let t = Instant::now();
    let mut set = initial_constraints(instance);
    report.add_time("initial_scan", t.elapsed().as_secs_f64());

    let mut y = TriVec::zeros(n);
    let mut v = TriVec::zeros(n);
    let mut sigma = config.sigma0;

    let mut cert;
    loop {
        if set.is_empty() {
            let t = Instant::now();
            let scan = feasibility_scan(&y, instance, &set, n);
            cert = certify_with_scan(&y, &[], &v, &set, instance, &scan)?;
            report.add_time("scan", t.elapsed().as_secs_f64());
            if scan.num_violated == 0 || report.dcgm_iters >= config.dcgm_max_rounds {
                report.converged = scan.num_violated == 0 && cert.eta_kkt < config.tol;
                break;
            }
            update_working_set(&mut set, &scan, &y, instance);
            continue;
        }

        let t = Instant::now();
        let warm = PalmState { y, u: set.multipliers().to_vec(), v, sigma, iterations: 0, history: Vec::new() };
        let out = palm_solve(instance, &set, warm, config)?;
        report.add_time("palm", t.elapsed().as_secs_f64());
        report.dcgm_iters += 1;
        report.palm_iters_total += out.state.iterations;
        report.ssn_iters_total += out.ssn_iters;
        report.cg_iters_total += out.cg_iters;
        report.working_set_sizes.push(set.len());
        report.involved_var_counts.push(set.involved().len());
        y = out.state.y;
        v = out.state.v;
        sigma = out.state.sigma;
        set.set_multipliers(out.state.u)?;

        let t = Instant::now();
        let k = set.len().max(n);
        let scan = feasibility_scan(&y, instance, &set, k);
        report.add_time("scan", t.elapsed().as_secs_f64());
        cert = certify_with_scan(&y, set.multipliers(), &v, &set, instance, &scan)?;
        info!(
            "round {}: |S| {} |I| {} violated {} eta_f {:.2e} eta_kkt {:.2e} pobj {:.6e} palm {}",
            report.dcgm_iters,
            set.len(),
            set.involved().len(),
            scan.num_violated,
            cert.eta_f,
            cert.eta_kkt,
            cert.pobj,
            out.state.iterations
        );
        let certified = cert.eta_f < config.feas_tol && cert.eta_kkt < config.tol;
        if certified || scan.num_violated == 0 {
            report.converged = certified || (out.converged && cert.eta_kkt < config.tol);
            break;
        }
        if report.dcgm_iters >= config.dcgm_max_rounds {
            break;
        }
        update_working_set(&mut set, &scan, &y, instance);
        zero_outside(&mut y, set.involved());
        zero_outside(&mut v, set.involved());
    }

    report.pobj = cert.pobj;
    report.dobj = cert.dobj;
    report.eta_kkt = cert.eta_kkt;
    report.eta_f = cert.eta_f;
    report.rel_gap = cert.rel_gap;
    report.add_time("total", start.elapsed().as_secs_f64());
    Ok(DcgmSolution { y, constraints: set, v, report })
}
