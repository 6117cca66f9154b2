//! CPLEX LP-format export of the linear reformulations.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use metric_nearness::index::{pair_unrank, row_pairs};
use metric_nearness::{Norm, ProblemInstance};

fn pair_name(prefix: &str, k: usize, n: usize) -> String {
    let (i, j) = pair_unrank(k, n).expect("slot in range");
    format!("{prefix}_{i}_{j}")
}

fn term(out: &mut String, coef: f64, var: &str, first: bool) {
    let sign = if coef < 0.0 { "-" } else if first { "" } else { "+" };
    let mag = coef.abs();
    let lead = if first && sign.is_empty() { "" } else { " " };
    if mag == 1.0 {
        let _ = write!(out, "{lead}{sign} {var}");
    } else {
        let _ = write!(out, "{lead}{sign} {mag} {var}");
    }
}

/// LP text for `min <c, z> s.t. A z <= b` restricted to triangle `rows`,
/// plus every norm row. Every variable is free.
///
/// Returns `(text, num_variables, num_constraints)`.
pub fn write_lp(instance: &ProblemInstance, rows: &[usize]) -> Result<(String, usize, usize)> {
    let norm = instance.norm();
    if norm == Norm::L2 {
        bail!("LP export is only defined for l1 and linf");
    }
    let n = instance.n();
    let m = instance.num_pairs();
    let w = instance.weights_dense();
    let x = instance.dissim_dense();
    let y: Vec<String> = (0..m).map(|k| pair_name("y", k, n)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ weighted {norm} metric nearness, n = {n}, y = X - X~");
    out.push_str("Minimize\n obj:");
    let aux: Vec<String> = match norm {
        Norm::L1 => {
            let s: Vec<String> = (0..m).map(|k| pair_name("s", k, n)).collect();
            for (k, name) in s.iter().enumerate() {
                term(&mut out, w[k], name, k == 0);
            }
            s
        }
        _ => {
            out.push_str(" t");
            vec!["t".to_string()]
        }
    };
    out.push_str("\nSubject To\n");
    let mut count = 0;
    for &r in rows {
        let [l, a, b] = row_pairs(r, n)?;
        let _ = writeln!(out, " tri_{r}: {} - {} - {} <= {}", y[l], y[a], y[b], x[a] + x[b] - x[l]);
        count += 1;
    }
    for k in 0..m {
        for (tag, sign) in [("p", 1.0), ("m", -1.0)] {
            let mut line = format!(" abs_{tag}{}:", &y[k][1..]);
            match norm {
                Norm::L1 => {
                    term(&mut line, sign, &y[k], true);
                    term(&mut line, -1.0, &aux[k], false);
                }
                _ => {
                    term(&mut line, sign * w[k], &y[k], true);
                    term(&mut line, -1.0, "t", false);
                }
            }
            let _ = writeln!(out, "{line} <= 0");
            count += 1;
        }
    }
    out.push_str("Bounds\n");
    for name in y.iter().chain(&aux) {
        let _ = writeln!(out, " {name} free");
    }
    out.push_str("End\n");
    Ok((out, m + aux.len(), count))
}
