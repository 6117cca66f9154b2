//! Dykstra's cyclic projection (in Hildreth's form for half-spaces) on the
//! regularized reformulations
//!
//! ```text
//! min <c, z> + 1/(2 gamma) z' D z   s.t.  A z <= b
//! ```
//!
//! which is the `D`-metric projection of `z0 = -gamma D^{-1} c` onto the
//! polyhedron. For `p = 1`, `z = [y; s]` with rows `+-y_i - s_i <= 0` and
//! `c = [0; w]`; for `p = inf`, `z = [y; t]` with rows `+-w_i y_i - t <= 0`
//! and `c = [0; 1]`; for `p = 2` the problem is the plain projection of the
//! origin under `diag(w)^2`.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{num_pairs, num_rows};
use crate::prox::q_value;
use crate::triop::feasibility_scan;
use crate::constraint::ConstraintSet;
use crate::types::{Norm, ProblemInstance, TriVec};

/// Above this many triangle rows, corrections live in a hash map.
const DENSE_CORRECTIONS_MAX: usize = 1 << 26;

/// A single half-space `a' z <= b` with sparse `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceRow {
    pub coefs: Vec<(usize, f64)>,
    pub b: f64,
}

/// Implicit description of the reformulated feasible set and metric.
#[derive(Debug, Clone)]
pub struct HalfSpaceSystem {
    n: usize,
    norm: Norm,
    gamma: f64,
    metric: Vec<f64>,
    base_point: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    w: Vec<f64>,
}

pub fn default_gamma(norm: Norm) -> f64 {
    match norm {
        Norm::L1 => 1.0,
        Norm::L2 => 1.0,
        Norm::Linf => 500.0,
    }
}

/// Builds the system for `instance.norm()`. `gamma` is ignored for `p = 2`.
pub fn build_system(instance: &ProblemInstance, gamma: f64) -> Result<HalfSpaceSystem> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::arg("gamma must be positive"));
    }
    let n = instance.n();
    let m = num_pairs(n);
    let w = instance.weights_dense().to_vec();
    let norm = instance.norm();
    let (gamma, metric, cost) = match norm {
        Norm::L2 => (1.0, w.iter().map(|x| x * x).collect(), vec![0.0; m]),
        Norm::L1 => {
            let mut d = w.clone();
            d.extend_from_slice(&w);
            let mut c = vec![0.0; m];
            c.extend_from_slice(&w);
            (gamma, d, c)
        }
        Norm::Linf => {
            let mut d = w.clone();
            d.push(1.0);
            let mut c = vec![0.0; m];
            c.push(1.0);
            (gamma, d, c)
        }
    };
    let base_point = cost.iter().zip(&metric).map(|(c, d)| -gamma * c / d).collect();
    Ok(HalfSpaceSystem { n, norm, gamma, metric, base_point, cost, x: instance.dissim_dense().to_vec(), w })
}

impl HalfSpaceSystem {
    pub fn dimension(&self) -> usize {
        self.metric.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn metric(&self) -> &[f64] {
        &self.metric
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn num_triangle_rows(&self) -> usize {
        num_rows(self.n)
    }

    pub fn num_norm_rows(&self) -> usize {
        match self.norm {
            Norm::L2 => 0,
            _ => 2 * num_pairs(self.n),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.num_triangle_rows() + self.num_norm_rows()
    }

    /// Row `k`: triangle rows first (by row id), then the norm rows, two per
    /// pair slot (`+` then `-`).
    pub fn row(&self, k: usize) -> Result<HalfSpaceRow> {
        let nt = self.num_triangle_rows();
        if k < nt {
            let coefs = crate::triop::row_coefficients(k, self.n)?.to_vec();
            let [l, a, b] = crate::index::row_pairs(k, self.n)?;
            return Ok(HalfSpaceRow { coefs, b: self.x[a] + self.x[b] - self.x[l] });
        }
        let j = k - nt;
        if j >= self.num_norm_rows() {
            return Err(Error::arg(format!("row {k} out of range")));
        }
        let (i, sign) = (j / 2, if j % 2 == 0 { 1.0 } else { -1.0 });
        let m = num_pairs(self.n);
        let coefs = match self.norm {
            Norm::L1 => vec![(i, sign), (m + i, -1.0)],
            Norm::Linf => vec![(i, sign * self.w[i]), (m, -1.0)],
            Norm::L2 => unreachable!(),
        };
        Ok(HalfSpaceRow { coefs, b: 0.0 })
    }

    /// `<c, z> + z' D z / (2 gamma)`.
    pub fn qp_objective(&self, z: &[f64]) -> f64 {
        let lin: f64 = self.cost.iter().zip(z).map(|(c, x)| c * x).sum();
        lin + self.quad(z)
    }

    fn quad(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.metric).map(|(x, d)| d * x * x).sum::<f64>() / (2.0 * self.gamma)
    }
}

/// `D`-metric projection of `z` onto `{a' z <= b}`; returns the step size
/// `max(0, (a'z - b) / (a' D^{-1} a))`.
pub fn halfspace_project(z: &mut [f64], row: &HalfSpaceRow, metric: &[f64]) -> f64 {
    let az: f64 = row.coefs.iter().map(|&(i, a)| a * z[i]).sum();
    let ada: f64 = row.coefs.iter().map(|&(i, a)| a * a / metric[i]).sum();
    let theta = ((az - row.b) / ada).max(0.0);
    if theta > 0.0 {
        for &(i, a) in &row.coefs {
            z[i] -= theta * a / metric[i];
        }
    }
    theta
}

#[derive(Debug, Clone)]
enum Corrections {
    Dense(Vec<f64>),
    Sparse(HashMap<usize, f64>),
}

impl Corrections {
    fn new(rows: usize) -> Self {
        if rows <= DENSE_CORRECTIONS_MAX {
            Corrections::Dense(vec![0.0; rows])
        } else {
            Corrections::Sparse(HashMap::new())
        }
    }

    #[inline]
    fn get(&self, r: usize) -> f64 {
        match self {
            Corrections::Dense(v) => v[r],
            Corrections::Sparse(m) => m.get(&r).copied().unwrap_or(0.0),
        }
    }

    #[inline]
    fn set(&mut self, r: usize, x: f64) {
        match self {
            Corrections::Dense(v) => v[r] = x,
            Corrections::Sparse(m) => {
                if x == 0.0 {
                    m.remove(&r);
                } else {
                    m.insert(r, x);
                }
            }
        }
    }

    fn iter_nonzero(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            Corrections::Dense(v) => Box::new(v.iter().copied().enumerate().filter(|p| p.1 != 0.0)),
            Corrections::Sparse(m) => Box::new(m.iter().map(|(&r, &x)| (r, x))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DykstraOptions {
    pub max_iters: usize,
    /// Stop once `max(R_g, eta_f)` falls below this.
    pub tol: f64,
    /// Sweeps between stopping tests.
    pub check_every: usize,
    /// Use a hash map for corrections regardless of size.
    pub sparse_corrections: bool,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        DykstraOptions { max_iters: 10_000, tol: 1e-2, check_every: 10, sparse_corrections: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DykstraReport {
    pub converged: bool,
    pub iters: usize,
    pub gamma: f64,
    /// `q(D y)` of the returned `y`.
    pub pobj: f64,
    /// `-<b, lambda> / gamma` over triangle rows.
    pub dobj: f64,
    pub qp_pobj: f64,
    pub qp_dobj: f64,
    /// Relative gap of the regularized problem; drives the stopping test.
    pub rel_gap: f64,
    /// `max(0, max(A y - b))` over triangle rows.
    pub eta_f: f64,
    pub active_corrections: usize,
    pub time_total: f64,
    pub time_per_iter: f64,
}

#[derive(Debug, Clone)]
pub struct DykstraSolution {
    pub z: Vec<f64>,
    pub y: TriVec,
    /// Nonzero triangle-row multipliers `(row_id, lambda / gamma)`.
    pub triangle_duals: Vec<(usize, f64)>,
    pub report: DykstraReport,
}

/// Builds the system for the instance and runs [`dykstra_solve`].
pub fn dykstra(instance: &ProblemInstance, gamma: f64, opts: &DykstraOptions) -> Result<DykstraSolution> {
    let sys = build_system(instance, gamma)?;
    dykstra_solve(&sys, opts, |_, _| {})
}

struct Sweeper<'a> {
    sys: &'a HalfSpaceSystem,
    minv: Vec<f64>,
    col: Vec<usize>,
    tri: Corrections,
    nrm: Vec<f64>,
}

impl Sweeper<'_> {
    #[inline]
    fn tri_update(&mut self, r: usize, idx: [usize; 3], b: f64, z: &mut [f64]) {
        let [l, a, c] = idx;
        let lam = self.tri.get(r);
        let az = z[l] - z[a] - z[c];
        if lam == 0.0 && az <= b {
            return;
        }
        let ada = self.minv[l] + self.minv[a] + self.minv[c];
        let theta = (lam + (az - b) / ada).max(0.0);
        let d = theta - lam;
        if d != 0.0 {
            z[l] -= d * self.minv[l];
            z[a] += d * self.minv[a];
            z[c] += d * self.minv[c];
            self.tri.set(r, theta);
        }
    }

    fn sweep(&mut self, z: &mut [f64]) {
        let n = self.sys.n;
        let x = &self.sys.x;
        let mut r = 0;
        for i in 0..n {
            for j in i + 1..n {
                let ij = self.col[j] + i;
                for k in j + 1..n {
                    let ik = self.col[k] + i;
                    let jk = self.col[k] + j;
                    self.tri_update(r, [ij, ik, jk], x[ik] + x[jk] - x[ij], z);
                    self.tri_update(r + 1, [ik, ij, jk], x[ij] + x[jk] - x[ik], z);
                    self.tri_update(r + 2, [jk, ij, ik], x[ij] + x[ik] - x[jk], z);
                    r += 3;
                }
            }
        }
        let m = num_pairs(n);
        match self.sys.norm {
            Norm::L2 => {}
            Norm::L1 => {
                for i in 0..m {
                    for (s, sign) in [(0, 1.0), (1, -1.0)] {
                        let q = 2 * i + s;
                        let lam = self.nrm[q];
                        let az = sign * z[i] - z[m + i];
                        let ada = self.minv[i] + self.minv[m + i];
                        let theta = (lam + az / ada).max(0.0);
                        let d = theta - lam;
                        if d != 0.0 {
                            z[i] -= d * sign * self.minv[i];
                            z[m + i] += d * self.minv[m + i];
                            self.nrm[q] = theta;
                        }
                    }
                }
            }
            Norm::Linf => {
                let w = &self.sys.w;
                for i in 0..m {
                    for (s, sign) in [(0, 1.0), (1, -1.0)] {
                        let q = 2 * i + s;
                        let a = sign * w[i];
                        let lam = self.nrm[q];
                        let az = a * z[i] - z[m];
                        let ada = a * a * self.minv[i] + self.minv[m];
                        let theta = (lam + az / ada).max(0.0);
                        let d = theta - lam;
                        if d != 0.0 {
                            z[i] -= d * a * self.minv[i];
                            z[m] += d * self.minv[m];
                            self.nrm[q] = theta;
                        }
                    }
                }
            }
        }
    }
}

fn measure(sys: &HalfSpaceSystem, z: &[f64], tri: &Corrections, instance_like: &ProblemInstance) -> DykstraReport {
    let m = num_pairs(sys.n);
    let y = &z[..m];
    let dy: Vec<f64> = y.iter().zip(&sys.w).map(|(a, b)| a * b).collect();
    let bdot: f64 = tri
        .iter_nonzero()
        .map(|(r, lam)| {
            let [l, a, b] = crate::index::row_pairs(r, sys.n).expect("row in range");
            lam * (sys.x[a] + sys.x[b] - sys.x[l])
        })
        .sum();
    let quad = sys.quad(z);
    let qp_pobj = sys.qp_objective(z);
    let qp_dobj = -bdot / sys.gamma - quad;
    let scan = feasibility_scan(y, instance_like, &ConstraintSet::new(), 0);
    DykstraReport {
        gamma: sys.gamma,
        pobj: q_value(&dy, sys.norm),
        dobj: -bdot / sys.gamma,
        qp_pobj,
        qp_dobj,
        rel_gap: (qp_pobj - qp_dobj).abs() / (1.0 + qp_dobj.abs()),
        eta_f: scan.max_violation.max(0.0),
        active_corrections: tri.iter_nonzero().count(),
        ..Default::default()
    }
}

/// Runs Dykstra sweeps from the base point. `on_sweep(k, z)` is called after
/// every sweep.
pub fn dykstra_solve(
    sys: &HalfSpaceSystem,
    opts: &DykstraOptions,
    mut on_sweep: impl FnMut(usize, &[f64]),
) -> Result<DykstraSolution> {
    if opts.check_every == 0 || !(opts.tol > 0.0) {
        return Err(Error::arg("check_every and tol must be positive"));
    }
    let start = Instant::now();
    let m = num_pairs(sys.n);
    let ones = vec![1.0; m];
    // instance view for the feasibility scan
    let view = ProblemInstance::from_dense(sys.n, &sys.x, &ones, Norm::L2)?;
    let ntri = sys.num_triangle_rows();
    let mut sw = Sweeper {
        sys,
        minv: sys.metric.iter().map(|d| 1.0 / d).collect(),
        col: (0..sys.n).map(|c| if c == 0 { 0 } else { c * (c - 1) / 2 }).collect(),
        tri: if opts.sparse_corrections { Corrections::Sparse(HashMap::new()) } else { Corrections::new(ntri) },
        nrm: vec![0.0; sys.num_norm_rows()],
    };
    let mut z = sys.base_point.clone();
    let mut iters = 0;
    let mut report = None;
    while iters < opts.max_iters {
        sw.sweep(&mut z);
        iters += 1;
        on_sweep(iters, &z);
        if iters % opts.check_every == 0 || iters == opts.max_iters {
            let rep = measure(sys, &z, &sw.tri, &view);
            if rep.rel_gap.max(rep.eta_f) < opts.tol {
                report = Some(DykstraReport { converged: true, ..rep });
                break;
            }
            report = Some(rep);
        }
    }
    let mut report = report.unwrap_or_else(|| measure(sys, &z, &sw.tri, &view));
    report.iters = iters;
    report.time_total = start.elapsed().as_secs_f64();
    report.time_per_iter = if iters > 0 { report.time_total / iters as f64 } else { 0.0 };
    let mut triangle_duals: Vec<(usize, f64)> = sw.tri.iter_nonzero().map(|(r, l)| (r, l / sys.gamma)).collect();
    triangle_duals.sort_unstable_by_key(|p| p.0);
    let y = TriVec::from_values(sys.n, z[..m].to_vec())?;
    Ok(DykstraSolution { z, y, triangle_duals, report })
}
