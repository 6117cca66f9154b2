//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion to stderr (bypassing output capture) and then asserts.

mod common;

use std::io::Write;
use std::time::Instant;

use metric_nearness::dcgm::initial_constraints;
use metric_nearness::ingest::gen_random_graph;
use metric_nearness::prox::{jac_hstar, jac_qstar, project_simplex, prox_hstar, prox_q, prox_qstar};
use metric_nearness::ssn::{hess_apply, ssn_solve, InnerSubproblem, NewtonMatrix, SsnStatus};
use metric_nearness::triop::{apply_a, apply_at, compute_b, feasibility_scan, ReducedOperator};
use metric_nearness::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const NORMS: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

fn verdict(id: u32, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] AC{id:<2} {title}: {detail}");
}

fn serial() -> SolverConfig {
    SolverConfig { threads: 1, ..Default::default() }
}

fn random_vec(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-scale..scale)).collect()
}

#[test]
fn ac01_three_node_optima() {
    let expect = [(Norm::L1, 1.0), (Norm::L2, 1.0 / 3f64.sqrt()), (Norm::Linf, 1.0 / 3.0)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (norm, opt) in expect {
        let inst = ProblemInstance::unweighted(3, &[1.0, 1.0, 3.0], norm).unwrap();
        let t = Instant::now();
        let sol = dcgm_solve(&inst, &serial()).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let err = (sol.report.pobj - opt).abs();
        pass &= sol.report.converged && err <= 1e-4 && secs < 1.0;
        detail.push(format!("{norm} pobj {:.8} (err {err:.1e}, {secs:.3}s)", sol.report.pobj));
    }
    verdict(1, "analytic 3-node optima", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn ac02_self_certification_at_scale() {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [20, 50, 100] {
        for norm in NORMS {
            let inst = gen_random_instance(n, 2024 + n as u64, norm).unwrap();
            let t = Instant::now();
            let sol = dcgm_solve(&inst, &serial()).unwrap();
            let secs = t.elapsed().as_secs_f64();
            let r = &sol.report;
            // independent feasibility check over every triple
            let eta_f = brute_max_violation(&inst, &sol.y);
            let ok = r.eta_f < 1e-2 && eta_f < 1e-2 && r.eta_kkt < 1e-4 && (n < 100 || secs < 60.0);
            pass &= ok;
            detail.push(format!(
                "n={n} {norm}: eta_f {eta_f:.1e} eta_kkt {:.1e} rounds {} {secs:.2}s{}",
                r.eta_kkt,
                r.dcgm_iters,
                if ok { "" } else { " <-" }
            ));
        }
    }
    verdict(2, "self-certification at scale", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn ac03_l2_oracle_equivalence() {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [5, 10, 20, 30] {
        let inst = gen_random_instance(n, 77 + n as u64, Norm::L2).unwrap();
        let sol = dcgm_solve(&inst, &serial()).unwrap();
        let opts = DykstraOptions { max_iters: 100_000, tol: 1e-10, check_every: 10, sparse_corrections: false };
        let dyk = dykstra(&inst, 1.0, &opts).unwrap();
        let p = sol.report.pobj;
        let rel = (p - dyk.report.pobj).abs() / (1.0 + p);
        pass &= rel <= 1e-2;
        detail.push(format!("n={n} rel {rel:.1e} ({} sweeps)", dyk.report.iters));
    }
    verdict(3, "l2 oracle equivalence with Dykstra", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn ac04_dense_operator_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut scan_ok = true;
    for n in 3..=12 {
        for norm in NORMS {
            let inst = gen_random_instance(n, n as u64 * 31 + norm as u64, norm).unwrap();
            let m = inst.num_pairs();
            let rows = dense_rows(&inst);
            let all: Vec<usize> = (0..rows.len()).collect();
            let full = ConstraintSet::from_rows(&inst, &all).unwrap();
            for (r, row) in rows.iter().enumerate() {
                worst = worst.max((compute_b(r, &inst).unwrap() - row.b).abs());
            }
            let y = random_vec(&mut rng, m, 1.0);
            let u = random_vec(&mut rng, rows.len(), 1.0);
            worst = worst.max(max_abs_diff(&apply_a(&y, &full), &dense_apply(&rows, &y)));
            worst = worst.max(max_abs_diff(&apply_at(&u, &full, n).unwrap(), &dense_apply_t(&rows, &u, m)));

            // feasibility scan against sorting every residual
            let excl: Vec<usize> = all.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
            let exclude = ConstraintSet::from_rows(&inst, &excl).unwrap();
            let resid: Vec<f64> = dense_apply(&rows, &y).iter().zip(&rows).map(|(a, r)| a - r.b).collect();
            let mut outside: Vec<(usize, f64)> =
                resid.iter().copied().enumerate().filter(|(r, _)| !excl.contains(r)).collect();
            let pos_sq: f64 = outside.iter().map(|p| p.1.max(0.0).powi(2)).sum();
            let res_sq: f64 = outside.iter().map(|p| p.1 * p.1).sum();
            outside.retain(|p| p.1 > 0.0);
            let count = outside.len();
            outside.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let k = n;
            outside.truncate(k);
            let scan = feasibility_scan(&y, &inst, &exclude, k);
            let maxv = resid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            scan_ok &= scan.num_violated == count
                && scan.rows.iter().map(|p| p.0).eq(outside.iter().map(|p| p.0))
                && (scan.max_violation - maxv).abs() <= 1e-12
                && (scan.pos_sq_outside - pos_sq).abs() <= 1e-12 * (1.0 + pos_sq)
                && (scan.resid_sq_outside - res_sq).abs() <= 1e-12 * (1.0 + res_sq);
            for (a, b) in scan.rows.iter().zip(&outside) {
                worst = worst.max((a.1 - b.1).abs());
            }

            // generalized Hessian against a dense assembly
            let op = ReducedOperator::new(&full, &inst);
            assert_eq!(op.num_vars(), m);
            let sigma = rng.random_range(0.5..20.0);
            let c = 1e-3;
            let ay = random_vec(&mut rng, m, 1.0);
            let au: Vec<f64> = (0..rows.len()).map(|_| rng.random_range(0.0..1.0)).collect();
            let av = prox_qstar(&random_vec(&mut rng, m, 1.0), norm);
            let sub = InnerSubproblem { op: &op, norm, sigma, h_scale: c, anchor_y: &ay, anchor_u: &au, anchor_v: &av };
            let e = sub.evaluate(&y);
            let uj = jac_hstar(&e.row_arg);
            let vj = jac_qstar(&e.var_arg, norm);
            let d = random_vec(&mut rng, m, 1.0);
            let got = hess_apply(&d, &uj, &vj, &sub);
            let w = inst.weights_dense();
            let ad = dense_apply(&rows, &d);
            let uad: Vec<f64> = ad.iter().enumerate().map(|(r, x)| uj.diag[r] * x).collect();
            let mut want: Vec<f64> = dense_apply_t(&rows, &uad, m).iter().map(|x| sigma * x).collect();
            let vd = vj.to_dense();
            for i in 0..m {
                let mut s = 0.0;
                for j in 0..m {
                    s += vd[i][j] * w[j] * d[j];
                }
                want[i] += sigma * w[i] * s + c / sigma * d[i];
            }
            let scale = 1.0 + want.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            worst = worst.max(max_abs_diff(&got, &want) / scale);
        }
    }
    let pass = worst <= 1e-12 && scan_ok;
    verdict(4, "dense operator equivalence (n <= 12)", pass, &format!("max deviation {worst:.1e}, scan agrees {scan_ok}"));
    assert!(pass);
}

#[test]
fn ac05_prox_calculus() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut moreau: f64 = 0.0;
    let mut closed_form: f64 = 0.0;
    for norm in NORMS {
        for _ in 0..1000 {
            let dim = rng.random_range(1..12);
            let scale = rng.random_range(0.1..5.0);
            let x = random_vec(&mut rng, dim, scale);
            let sigma = rng.random_range(0.1..10.0);
            let p = prox_q(&x, norm, sigma);
            let pi = prox_qstar(&x.iter().map(|v| sigma * v).collect::<Vec<_>>(), norm);
            let back: Vec<f64> = p.iter().zip(&pi).map(|(a, b)| a + b / sigma).collect();
            moreau = moreau.max(max_abs_diff(&back, &x));
            // independent characterization of argmin |p| + sigma/2 |p - x|^2
            let err = match norm {
                Norm::L1 => {
                    let soft: Vec<f64> = x.iter().map(|v| v.signum() * (v.abs() - 1.0 / sigma).max(0.0)).collect();
                    max_abs_diff(&p, &soft)
                }
                Norm::L2 => {
                    let nx = norm_of(&x);
                    let f = if nx > 0.0 { (1.0 - 1.0 / (sigma * nx)).max(0.0) } else { 0.0 };
                    max_abs_diff(&p, &x.iter().map(|v| f * v).collect::<Vec<_>>())
                }
                Norm::Linf => {
                    // g = sigma (x - p) must be a subgradient of |.|_inf at p
                    let g: Vec<f64> = x.iter().zip(&p).map(|(a, b)| sigma * (a - b)).collect();
                    let g1: f64 = g.iter().map(|v| v.abs()).sum();
                    let pinf = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let gp: f64 = g.iter().zip(&p).map(|(a, b)| a * b).sum();
                    if pinf > 0.0 {
                        (g1 - 1.0).abs().max((gp - pinf).abs())
                    } else {
                        (g1 - 1.0).max(0.0)
                    }
                }
            };
            closed_form = closed_form.max(err);
        }
    }
    for _ in 0..1000 {
        let w = random_vec(&mut rng, 10, 3.0);
        let pos = prox_hstar(&w);
        let neg: Vec<f64> = w.iter().map(|v| v.min(0.0)).collect();
        let sum: Vec<f64> = pos.iter().zip(&neg).map(|(a, b)| a + b).collect();
        moreau = moreau.max(max_abs_diff(&sum, &w));
    }

    let mut brute: f64 = 0.0;
    for _ in 0..500 {
        let dim = rng.random_range(1..=8);
        let sc = rng.random_range(0.1..3.0);
        let v = random_vec(&mut rng, dim, sc);
        brute = brute.max(max_abs_diff(&project_simplex(&v), &brute_simplex(&v)));
        brute = brute.max(max_abs_diff(&prox_qstar(&v, Norm::Linf), &brute_l1_ball(&v)));
    }

    // Jacobian actions against central differences at generic points
    let mut jac: f64 = 0.0;
    let h = 1e-7;
    for norm in NORMS {
        for _ in 0..300 {
            let dim = rng.random_range(2..10);
            let sc = rng.random_range(0.2..3.0);
            let v = random_vec(&mut rng, dim, sc);
            let d = random_vec(&mut rng, dim, 1.0);
            let jd = jac_qstar(&v, norm).apply_vec(&d);
            let plus: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a - h * b).collect();
            let (pp, pm) = (prox_qstar(&plus, norm), prox_qstar(&minus, norm));
            let fd: Vec<f64> = pp.iter().zip(&pm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let diff: Vec<f64> = fd.iter().zip(&jd).map(|(a, b)| a - b).collect();
            jac = jac.max(norm_of(&diff) / norm_of(&jd).max(1.0));
        }
    }
    for _ in 0..300 {
        let w = random_vec(&mut rng, 8, 2.0);
        let d = random_vec(&mut rng, 8, 1.0);
        let jd = jac_hstar(&w).apply_vec(&d);
        let plus: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a - h * b).collect();
        let fd: Vec<f64> = prox_hstar(&plus).iter().zip(&prox_hstar(&minus)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let diff: Vec<f64> = fd.iter().zip(&jd).map(|(a, b)| a - b).collect();
        jac = jac.max(norm_of(&diff) / norm_of(&jd).max(1.0));
    }
    let pass = moreau <= 1e-12 && closed_form <= 1e-12 && brute <= 1e-10 && jac <= 1e-5;
    verdict(
        5,
        "prox calculus",
        pass,
        &format!("Moreau {moreau:.1e}, prox optimality {closed_form:.1e}, brute force {brute:.1e}, Jacobian FD {jac:.1e}"),
    );
    assert!(pass);
}

fn norm_of(a: &[f64]) -> f64 {
    norm(a)
}

#[test]
fn ac06_gradient_hessian_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut grad_err: f64 = 0.0;
    let mut curvature_ok = true;
    for t in 0..100 {
        let norm = NORMS[t % 3];
        let n = rng.random_range(4..8);
        let inst = gen_random_instance(n, 600 + t as u64, norm).unwrap();
        let set = initial_constraints(&inst);
        if set.is_empty() {
            continue;
        }
        let op = ReducedOperator::new(&set, &inst);
        let dim = op.num_vars();
        let sigma = rng.random_range(0.5..10.0);
        let c = [1e-3, 1e-6, 1.0][t % 3];
        let ay = random_vec(&mut rng, dim, 0.5);
        let au: Vec<f64> = (0..op.num_rows()).map(|_| rng.random_range(0.0..1.0)).collect();
        let av = prox_qstar(&random_vec(&mut rng, dim, 1.0), norm);
        let sub = InnerSubproblem { op: &op, norm, sigma, h_scale: c, anchor_y: &ay, anchor_u: &au, anchor_v: &av };
        let y = random_vec(&mut rng, dim, 1.0);
        let e = sub.evaluate(&y);
        let h = 1e-6;
        let mut fd = vec![0.0; dim];
        for i in 0..dim {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[i] += h;
            ym[i] -= h;
            fd[i] = (sub.value(&yp) - sub.value(&ym)) / (2.0 * h);
        }
        let diff: Vec<f64> = fd.iter().zip(&e.grad).map(|(a, b)| a - b).collect();
        grad_err = grad_err.max(norm_of(&diff) / norm_of(&e.grad).max(1.0));

        let hess = NewtonMatrix::at(sub, &e);
        for _ in 0..5 {
            let d = random_vec(&mut rng, dim, 1.0);
            let hd = hess.apply_vec(&d);
            let dhd: f64 = hd.iter().zip(&d).map(|(a, b)| a * b).sum();
            let dd: f64 = d.iter().map(|x| x * x).sum();
            curvature_ok &= dhd >= c / sigma * dd * (1.0 - 1e-12);
        }
    }
    let pass = grad_err <= 1e-5 && curvature_ok;
    verdict(6, "gradient/Hessian consistency", pass, &format!("FD gradient error {grad_err:.1e}, <Hd,d> >= c/sigma |d|^2: {curvature_ok}"));
    assert!(pass);
}

#[test]
fn ac07_ssn_superlinear_tail() {
    let tol = 1e-8;
    let mut pass = true;
    let mut worst_final: f64 = 0.0;
    let mut tails = Vec::new();
    for seed in 0..20u64 {
        let inst = gen_random_instance(15, seed, Norm::L2).unwrap();
        let set = initial_constraints(&inst);
        let op = ReducedOperator::new(&set, &inst);
        let zy = vec![0.0; op.num_vars()];
        let zu = vec![0.0; op.num_rows()];
        let cfg = SolverConfig::default();
        let sub = InnerSubproblem { op: &op, norm: Norm::L2, sigma: 1.0, h_scale: cfg.h_scale_for(Norm::L2), anchor_y: &zy, anchor_u: &zu, anchor_v: &zy };
        let out = ssn_solve(&sub, &zy, tol, &cfg.ssn);
        let g = &out.grad_norms;
        let last = *g.last().unwrap();
        worst_final = worst_final.max(last);
        let ratios: Vec<f64> = g.windows(2).map(|w| w[1] / w[0]).collect();
        let ok = out.status == SsnStatus::Converged
            && last <= tol
            && ratios.len() >= 3
            && ratios[ratios.len() - 3] > ratios[ratios.len() - 2]
            && ratios[ratios.len() - 2] > ratios[ratios.len() - 1];
        if ratios.len() >= 3 {
            tails.push(format!("{:.0e}", ratios[ratios.len() - 1]));
        }
        pass &= ok;
    }
    verdict(7, "SsN superlinear tail", pass, &format!("20 subproblems, max final |grad| {worst_final:.1e}, last ratios [{}]", tails.join(" ")));
    assert!(pass);
}

#[test]
fn ac08_zero_solution_invariance() {
    let mut pass = true;
    let mut cases = 0;
    for seed in 0..4u64 {
        for n in [3, 7, 15] {
            let inputs = [band_metric(n, seed), shortest_path_metric(n, seed), vec![1.0; n * (n - 1) / 2]];
            for x in inputs {
                for norm in NORMS {
                    let w: Vec<f64> = (0..x.len()).map(|i| 0.1 + (i % 7) as f64 * 0.1).collect();
                    let inst = ProblemInstance::from_dense(n, &x, &w, norm).unwrap();
                    assert!(brute_max_violation(&inst, &vec![0.0; x.len()]) <= 0.0);
                    let sol = dcgm_solve(&inst, &serial()).unwrap();
                    pass &= sol.y.iter().all(|&v| v == 0.0) && sol.report.dcgm_iters == 0 && sol.report.converged;
                    cases += 1;
                }
            }
        }
    }
    verdict(8, "zero-solution invariance", pass, &format!("{cases} metric inputs returned y = 0 with no rounds"));
    assert!(pass);
}

#[test]
fn ac09_working_set_economy() {
    let n = 300;
    let graph = gen_random_graph(n, 6.0, 1).unwrap();
    let n2 = 3 * n * (n - 1) * (n - 2) / 6;
    let n1 = n * (n - 1) / 2;
    let mut pass = true;
    let mut detail = Vec::new();
    for norm in NORMS {
        let inst = build_instance(&graph, norm, &InstanceOptions::default()).unwrap();
        let sol = dcgm_solve(&inst, &serial()).unwrap();
        let r = &sol.report;
        let max_s = r.working_set_sizes.iter().copied().max().unwrap_or(0);
        let max_i = r.involved_var_counts.iter().copied().max().unwrap_or(0);
        let ok = r.converged && (max_s as f64) < 0.05 * n2 as f64 && max_i < n1;
        pass &= ok;
        detail.push(format!(
            "{norm}: max|S| {max_s} ({:.2e} n2), max|I| {max_i} ({:.2} n1), rounds {}",
            max_s as f64 / n2 as f64,
            max_i as f64 / n1 as f64,
            r.dcgm_iters
        ));
    }
    verdict(9, "working-set economy (n = 300 sparse graph)", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn ac10_gamma_sensitivity() {
    let graph = gen_random_graph(30, 6.0, 0).unwrap();
    let inst = build_instance(&graph, Norm::Linf, &InstanceOptions::default()).unwrap();
    let target = dcgm_solve(&inst, &serial()).unwrap().report.pobj;
    let opts = DykstraOptions { max_iters: 10_000, ..Default::default() };
    let small = dykstra(&inst, 5.0, &opts).unwrap().report.pobj;
    let large = dykstra(&inst, 500.0, &opts).unwrap().report.pobj;
    let pass = (large - target).abs() < (small - target).abs();
    verdict(
        10,
        "gamma sensitivity (linf, n = 30)",
        pass,
        &format!("DCGM {target:.6}, Dykstra gamma=500 {large:.6}, gamma=5 {small:.6}"),
    );
    assert!(pass);
}

#[test]
fn ac11_determinism() {
    let inst = gen_random_instance(30, 11, Norm::Linf).unwrap();
    let strip = |mut r: SolveReport| {
        r.timings.clear();
        r
    };
    let a = dcgm_solve(&inst, &serial()).unwrap();
    let b = dcgm_solve(&inst, &serial()).unwrap();
    let same_run = a.y.as_slice() == b.y.as_slice() && strip(a.report.clone()) == strip(b.report.clone());

    let big = gen_random_instance(45, 3, Norm::L1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let y = random_vec(&mut rng, big.num_pairs(), 0.5);
    let excl: Vec<usize> = (0..index::num_rows(45)).filter(|r| r % 17 == 0).collect();
    let exclude = ConstraintSet::from_rows(&big, &excl).unwrap();
    let scans: Vec<_> = [1, 2, 8]
        .iter()
        .map(|&t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            pool.install(|| feasibility_scan(&y, &big, &exclude, 500))
        })
        .collect();
    let same_scan = scans.windows(2).all(|w| w[0] == w[1]);
    let pass = same_run && same_scan;
    verdict(
        11,
        "determinism",
        pass,
        &format!("repeated solves identical: {same_run}; scans over 1/2/8 threads identical: {same_scan}"),
    );
    assert!(pass);
}
