//! Command-line front end: `solve`, `check`, `dykstra` and `export-lp`.
//!
//! Exit codes: 0 converged (or command succeeded), 1 solver did not
//! converge, 2 usage or input error.

pub mod lp;
pub mod report;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use metric_nearness::dcgm::initial_constraints;
use metric_nearness::dykstra::default_gamma;
use metric_nearness::index::num_rows;
use metric_nearness::{
    build_instance, certify, dcgm_solve, dykstra, gen_random_instance, largest_component, load_edge_list,
    ConstraintSet, DykstraOptions, InstanceOptions, Norm, ProblemInstance, SolverConfig,
};

use report::{InputInfo, InstanceFile, RunReport, SolutionFile};

#[derive(Debug, Parser)]
#[command(name = "metric-nearness", version, about = "Weighted l1/l2/linf metric nearness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve with constraint generation + proximal ALM.
    Solve(SolveArgs),
    /// Certify a solution against every triangle inequality.
    Check(CheckArgs),
    /// Run the Dykstra projection baseline.
    Dykstra(DykstraArgs),
    /// Write the LP reformulation (l1, linf) in CPLEX LP format.
    ExportLp(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Edge list, or a dense instance if the name ends in `.json`.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub input: Option<PathBuf>,
    /// Random dense instance on N nodes.
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// l1, l2 or linf.
    #[arg(long)]
    pub norm: Norm,
    #[arg(long, default_value_t = 0.0)]
    pub edge_dissim: f64,
    #[arg(long, default_value_t = 1.0)]
    pub nonedge_dissim: f64,
    #[arg(long, default_value_t = 1.0)]
    pub edge_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    pub nonedge_weight: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma0: f64,
    /// Worker threads, 0 = all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Proximal scale `c` (default 1e-3 for l1/linf, 1e-6 for l2).
    #[arg(long)]
    pub h_scale: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub palm_max_iters: usize,
    #[arg(long, default_value_t = 100)]
    pub max_rounds: usize,
    /// JSON report path.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Append a summary row to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write `y`, `u`, `v` as JSON.
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Solution JSON (`y`, optional `rows`/`u`, optional `v`).
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DykstraArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Regularization (default 1 for l1, 500 for linf; unused for l2).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Stop once max(R_g, eta_f) is below this.
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    #[arg(long, default_value_t = 10)]
    pub check_every: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Include every triangle row (n <= 60).
    #[arg(long, conflicts_with = "rows_from")]
    pub full: bool,
    /// Use the rows of a solution file instead of the initial working set.
    #[arg(long)]
    pub rows_from: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

/// Loads the instance described by `args`.
pub fn load_instance(args: &InputArgs) -> Result<(ProblemInstance, InputInfo)> {
    let mut info = InputInfo { path: None, random_n: None, seed: None, dropped_nodes: 0 };
    let inst = if let Some(n) = args.random {
        info.random_n = Some(n);
        info.seed = Some(args.seed);
        gen_random_instance(n, args.seed, args.norm)?
    } else {
        let path = args.input.as_ref().context("either --input or --random is required")?;
        info.path = Some(path.display().to_string());
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: InstanceFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let w = file.weights.unwrap_or_else(|| vec![1.0; file.dissimilarity.len()]);
            ProblemInstance::from_dense(file.n, &file.dissimilarity, &w, args.norm)?
        } else {
            let g = load_edge_list(path)?;
            let c = largest_component(&g);
            info.dropped_nodes = g.num_nodes() - c.num_nodes();
            let opts = InstanceOptions {
                edge_dissim: args.edge_dissim,
                nonedge_dissim: args.nonedge_dissim,
                edge_weight: args.edge_weight,
                nonedge_weight: args.nonedge_weight,
            };
            build_instance(&c, args.norm, &opts)?
        }
    };
    Ok((inst, info))
}

fn finish(report: &RunReport, output: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    if let Some(p) = output {
        report.write(p)?;
    }
    if let Some(p) = csv {
        report.append_csv(p)?;
    }
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> Result<u8> {
    let (inst, input) = load_instance(&args.input)?;
    let config = SolverConfig {
        tol: args.tol,
        feas_tol: args.feas_tol,
        sigma0: args.sigma0,
        sigma_max: SolverConfig::default().sigma_max.max(args.sigma0),
        threads: args.threads,
        h_scale: args.h_scale,
        palm_max_iters: args.palm_max_iters,
        dcgm_max_rounds: args.max_rounds,
        seed: args.input.seed,
        ..Default::default()
    };
    let sol = dcgm_solve(&inst, &config)?;
    let r = &sol.report;
    info!("working set sizes {:?}, involved variables {:?}", r.working_set_sizes, r.involved_var_counts);
    println!(
        "{} pobj {:.10e} eta_kkt {:.3e} eta_f {:.3e} rel_gap {:.3e} rounds {} palm {} ssn {}",
        if r.converged { "converged" } else { "NOT converged" },
        r.pobj,
        r.eta_kkt,
        r.eta_f,
        r.rel_gap,
        r.dcgm_iters,
        r.palm_iters_total,
        r.ssn_iters_total
    );
    if let Some(p) = &args.solution {
        SolutionFile {
            n: inst.n(),
            y: sol.y.to_vec(),
            rows: sol.constraints.row_ids().collect(),
            u: sol.constraints.multipliers().to_vec(),
            v: Some(sol.v.to_vec()),
        }
        .write(p)?;
    }
    let report = RunReport {
        solver: "dcgm_palm".into(),
        input,
        norm: inst.norm(),
        n: inst.n(),
        converged: r.converged,
        config: Some(config),
        dykstra_options: None,
        solve: Some(sol.report.clone()),
        dykstra: None,
        certificate: None,
    };
    finish(&report, args.output.as_deref(), args.csv.as_deref())?;
    Ok(if report.converged { 0 } else { 1 })
}

pub fn cmd_check(args: &CheckArgs) -> Result<u8> {
    let (inst, input) = load_instance(&args.input)?;
    let sol = SolutionFile::read(&args.solution)?;
    let m = inst.num_pairs();
    if sol.n != inst.n() || sol.y.len() != m {
        bail!("solution has n = {} and {} entries, instance needs n = {} and {m}", sol.n, sol.y.len(), inst.n());
    }
    if sol.rows.len() != sol.u.len() {
        bail!("solution has {} rows but {} multipliers", sol.rows.len(), sol.u.len());
    }
    let v = sol.v.clone().unwrap_or_else(|| vec![0.0; m]);
    if v.len() != m {
        bail!("v has {} entries, expected {m}", v.len());
    }
    // rows may arrive in any order; align u with the sorted set
    let mut pairs: Vec<(usize, f64)> = sol.rows.iter().copied().zip(sol.u.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    pairs.dedup_by_key(|p| p.0);
    let rows: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let set = if rows.is_empty() { ConstraintSet::new() } else { ConstraintSet::from_rows(&inst, &rows)? };
    let u: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let cert = certify(&sol.y, &u, &v, &set, &inst)?;
    println!("eta_f {:.6e} eta_kkt {:.6e} pobj {:.10e}", cert.eta_f, cert.eta_kkt, cert.pobj);
    let report = RunReport {
        solver: "check".into(),
        input,
        norm: inst.norm(),
        n: inst.n(),
        converged: cert.num_violated_outside == 0 || cert.eta_f <= 0.0,
        config: None,
        dykstra_options: None,
        solve: None,
        dykstra: None,
        certificate: Some(cert),
    };
    finish(&report, args.output.as_deref(), None)?;
    Ok(0)
}

pub fn cmd_dykstra(args: &DykstraArgs) -> Result<u8> {
    let (inst, input) = load_instance(&args.input)?;
    let gamma = args.gamma.unwrap_or_else(|| default_gamma(inst.norm()));
    let opts = DykstraOptions {
        max_iters: args.max_iters,
        tol: args.tol,
        check_every: args.check_every,
        sparse_corrections: false,
    };
    let sol = dykstra(&inst, gamma, &opts)?;
    let r = &sol.report;
    println!(
        "{} pobj {:.10e} rel_gap {:.3e} eta_f {:.3e} iters {} time/iter {:.3e}s",
        if r.converged { "converged" } else { "NOT converged" },
        r.pobj,
        r.rel_gap,
        r.eta_f,
        r.iters,
        r.time_per_iter
    );
    if let Some(p) = &args.solution {
        let (rows, u) = sol.triangle_duals.iter().copied().unzip();
        SolutionFile { n: inst.n(), y: sol.y.to_vec(), rows, u, v: None }.write(p)?;
    }
    let report = RunReport {
        solver: "dykstra".into(),
        input,
        norm: inst.norm(),
        n: inst.n(),
        converged: r.converged,
        config: None,
        dykstra_options: Some(opts),
        solve: None,
        dykstra: Some(sol.report.clone()),
        certificate: None,
    };
    finish(&report, args.output.as_deref(), args.csv.as_deref())?;
    Ok(if report.converged { 0 } else { 1 })
}

pub fn cmd_export_lp(args: &ExportArgs) -> Result<u8> {
    let (inst, _) = load_instance(&args.input)?;
    if inst.norm() == Norm::L2 {
        bail!("LP export is unsupported for l2 (the problem is not an LP)");
    }
    let n = inst.n();
    let rows: Vec<usize> = if args.full {
        if n > 60 {
            bail!("--full is limited to n <= 60 (n = {n})");
        }
        (0..num_rows(n)).collect()
    } else if let Some(p) = &args.rows_from {
        let mut rows = SolutionFile::read(p)?.rows;
        rows.sort_unstable();
        rows.dedup();
        if let Some(&r) = rows.iter().find(|&&r| r >= num_rows(n)) {
            bail!("row {r} out of range for n = {n}");
        }
        rows
    } else {
        initial_constraints(&inst).row_ids().collect()
    };
    let (text, vars, cons) = lp::write_lp(&inst, &rows)?;
    std::fs::write(&args.output, text).with_context(|| format!("writing {}", args.output.display()))?;
    println!("wrote {} ({vars} variables, {cons} constraints)", args.output.display());
    Ok(0)
}

/// Runs a parsed command and returns its exit code.
pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Check(a) => cmd_check(a),
        Command::Dykstra(a) => cmd_dykstra(a),
        Command::ExportLp(a) => cmd_export_lp(a),
    }
}

