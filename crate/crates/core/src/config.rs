use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Norm;

/// Parameters of the semismooth Newton inner solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsnConfig {
    /// Armijo constant, in `(0, 1/2)`.
    pub mu: f64,
    /// Cap on the linear-solve tolerance, in `(0, 1)`.
    pub eta_bar: f64,
    /// Forcing exponent: the linear solve targets `min(eta_bar, |grad|^(1+tau))`.
    pub tau: f64,
    /// Backtracking factor, in `(0, 1)`.
    pub delta: f64,
    pub cg_max_iters: usize,
    pub max_iters: usize,
    pub max_backtracks: usize,
    /// Systems with at most this many unknowns are factorized densely.
    pub direct_max_dim: usize,
}

impl Default for SsnConfig {
    fn default() -> Self {
        SsnConfig {
            mu: 1e-4,
            eta_bar: 0.1,
            tau: 0.5,
            delta: 0.5,
            cg_max_iters: 300,
            max_iters: 200,
            max_backtracks: 50,
            direct_max_dim: 200,
        }
    }
}

impl SsnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(Error::arg("ssn.mu must lie in (0, 1/2)"));
        }
        if !(self.eta_bar > 0.0 && self.eta_bar < 1.0) {
            return Err(Error::arg("ssn.eta_bar must lie in (0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::arg("ssn.tau must lie in (0, 1]"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::arg("ssn.delta must lie in (0, 1)"));
        }
        if self.max_iters == 0 || self.cg_max_iters == 0 {
            return Err(Error::arg("ssn iteration caps must be positive"));
        }
        Ok(())
    }
}

/// Solver configuration shared by the constraint-generation driver and the
/// proximal ALM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target for the relative KKT residual and the relative gap.
    pub tol: f64,
    /// Target for the largest triangle violation.
    pub feas_tol: f64,
    pub sigma0: f64,
    pub sigma_growth: f64,
    pub sigma_max: f64,
    /// Scale `c` of the proximal term `H = c I`; `None` picks the norm default.
    pub h_scale: Option<f64>,
    pub ssn: SsnConfig,
    pub palm_max_iters: usize,
    /// `eps_k = eps_seq_scale / (k+1)^2`.
    pub eps_seq_scale: f64,
    /// `delta_k = min(0.9, delta_seq_scale / (k+1)^2)`.
    pub delta_seq_scale: f64,
    pub dcgm_max_rounds: usize,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-4,
            feas_tol: 1e-2,
            sigma0: 1.0,
            sigma_growth: 2.0,
            sigma_max: 1e6,
            h_scale: None,
            ssn: SsnConfig::default(),
            palm_max_iters: 1000,
            eps_seq_scale: 1.0,
            delta_seq_scale: 0.5,
            dcgm_max_rounds: 100,
            threads: 0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Proximal scale actually used for `norm`.
    pub fn h_scale_for(&self, norm: Norm) -> f64 {
        self.h_scale.unwrap_or(match norm {
            Norm::L1 | Norm::Linf => 1e-3,
            Norm::L2 => 1e-6,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.ssn.validate()?;
        if !(self.tol > 0.0 && self.feas_tol > 0.0) {
            return Err(Error::arg("tolerances must be positive"));
        }
        if !(self.sigma0 > 0.0) || self.sigma_growth < 1.0 || self.sigma_max < self.sigma0 {
            return Err(Error::arg("need sigma0 > 0, sigma_growth >= 1, sigma_max >= sigma0"));
        }
        if let Some(c) = self.h_scale {
            if !(c > 0.0) {
                return Err(Error::arg("h_scale must be positive"));
            }
        }
        if !(self.eps_seq_scale > 0.0 && self.delta_seq_scale > 0.0) {
            return Err(Error::arg("summable sequence scales must be positive"));
        }
        if self.palm_max_iters == 0 {
            return Err(Error::arg("palm_max_iters must be positive"));
        }
        Ok(())
    }
}
