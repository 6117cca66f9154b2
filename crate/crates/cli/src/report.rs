//! Report, solution and instance file formats.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use metric_nearness::{Certificate, DykstraOptions, DykstraReport, Norm, SolveReport, SolverConfig};
use serde::{Deserialize, Serialize};

/// Where the instance came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: Option<String>,
    pub random_n: Option<usize>,
    pub seed: Option<u64>,
    /// Nodes dropped by the largest-component filter.
    pub dropped_nodes: usize,
}

/// JSON report written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// `dcgm_palm`, `dykstra` or `check`.
    pub solver: String,
    pub input: InputInfo,
    pub norm: Norm,
    pub n: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<SolverConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dykstra_options: Option<DykstraOptions>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solve: Option<SolveReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dykstra: Option<DykstraReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<Certificate>,
}

impl RunReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Headline numbers `(pobj, dobj, rel_gap, eta_kkt, eta_f, iterations, seconds)`.
    fn headline(&self) -> (f64, f64, f64, f64, f64, usize, f64) {
        if let Some(s) = &self.solve {
            let t = s.timings.get("total").copied().unwrap_or(0.0);
            (s.pobj, s.dobj, s.rel_gap, s.eta_kkt, s.eta_f, s.palm_iters_total, t)
        } else if let Some(d) = &self.dykstra {
            let kkt = self.certificate.map_or(f64::NAN, |c| c.eta_kkt);
            (d.pobj, d.dobj, d.rel_gap, kkt, d.eta_f, d.iters, d.time_total)
        } else if let Some(c) = &self.certificate {
            (c.pobj, c.dobj, c.rel_gap, c.eta_kkt, c.eta_f, 0, 0.0)
        } else {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0, 0.0)
        }
    }

    /// Appends one CSV row, writing the header first if the file is new.
    pub fn append_csv(&self, path: &Path) -> Result<()> {
        let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(f, "solver,input,norm,n,converged,pobj,dobj,rel_gap,eta_kkt,eta_f,iters,seconds")?;
        }
        let (p, d, g, k, e, it, t) = self.headline();
        let input = match (&self.input.path, self.input.random_n) {
            (Some(p), _) => p.replace(',', "_"),
            (None, Some(n)) => format!("random:{n}:{}", self.input.seed.unwrap_or(0)),
            _ => String::new(),
        };
        writeln!(f, "{},{input},{},{},{},{p:e},{d:e},{g:e},{k:e},{e:e},{it},{t:.6}", self.solver, self.norm, self.n, self.converged)?;
        Ok(())
    }
}

/// Primal-dual point: `y` over all pairs, multipliers `u` on triangle `rows`,
/// and `v` over all pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub n: usize,
    pub y: Vec<f64>,
    #[serde(default)]
    pub rows: Vec<usize>,
    #[serde(default)]
    pub u: Vec<f64>,
    #[serde(default)]
    pub v: Option<Vec<f64>>,
}

impl SolutionFile {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Dense instance file: pair vectors in column order; weights default to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub dissimilarity: Vec<f64>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}
