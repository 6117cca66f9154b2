use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome summary of a solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub pobj: f64,
    pub dobj: f64,
    /// Relative KKT residual over all triangle rows.
    pub eta_kkt: f64,
    /// Largest triangle violation `max(Ay - b)`.
    pub eta_f: f64,
    pub rel_gap: f64,
    /// Constraint-generation rounds, i.e. reduced problems solved.
    pub dcgm_iters: usize,
    pub palm_iters_total: usize,
    pub ssn_iters_total: usize,
    pub cg_iters_total: usize,
    pub working_set_sizes: Vec<usize>,
    pub involved_var_counts: Vec<usize>,
    /// Seconds spent per phase.
    pub timings: BTreeMap<String, f64>,
}

impl SolveReport {
    pub(crate) fn add_time(&mut self, phase: &str, secs: f64) {
        *self.timings.entry(phase.to_string()).or_insert(0.0) += secs;
    }
}
