//! The triangle-constraint operator `A`, evaluated on the fly.
//!
//! `A` has `3 C(n,3)` rows and is never stored. Rows are decoded from their
//! id, `b = -A x~` is evaluated from the dissimilarities, and full scans walk
//! the triples in lexicographic order (which is row-id order).

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::constraint::{ConstraintRecord, ConstraintSet};
use crate::error::{Error, Result};
use crate::index::{num_pairs, num_rows, row_pairs, triples_before_first};
use crate::types::{ProblemInstance, TriVec};

/// Below this many work items kernels run serially.
const PAR_MIN: usize = 4096;

/// Nonzeros of a row: `+1` on the long edge, `-1` on the other two.
pub fn row_coefficients(row_id: usize, n: usize) -> Result<[(usize, f64); 3]> {
    let [l, a, b] = row_pairs(row_id, n)?;
    Ok([(l, 1.0), (a, -1.0), (b, -1.0)])
}

/// Entry `b_r` of `b = -A x~`.
pub fn compute_b(row_id: usize, instance: &ProblemInstance) -> Result<f64> {
    Ok(ConstraintRecord::new(row_id, instance)?.b_value)
}

/// `A_S y`.
pub fn apply_a(y: &[f64], set: &ConstraintSet) -> Vec<f64> {
    let recs = set.records();
    if recs.len() < PAR_MIN {
        recs.iter().map(|r| r.apply(y)).collect()
    } else {
        recs.par_iter().map(|r| r.apply(y)).collect()
    }
}

/// `A_S^T u` as a full-length vector.
pub fn apply_at(u: &[f64], set: &ConstraintSet, n: usize) -> Result<TriVec> {
    if u.len() != set.len() {
        return Err(Error::DimensionMismatch { expected: set.len(), got: u.len() });
    }
    let mut out = TriVec::zeros(n);
    for (r, &ur) in set.records().iter().zip(u) {
        out[r.pair_long] += ur;
        out[r.pair_a] -= ur;
        out[r.pair_b] -= ur;
    }
    Ok(out)
}

/// Sorted pair slots touched by the rows of `set`.
pub fn involved_variables(set: &ConstraintSet) -> Vec<usize> {
    set.involved().to_vec()
}

/// Result of a full feasibility scan.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationBatch {
    /// Top violated rows outside the excluded set, as `(row_id, A_r y - b_r)`,
    /// by decreasing violation (ties: smaller row id first).
    pub rows: Vec<(usize, f64)>,
    /// Number of violated rows outside the excluded set.
    pub num_violated: usize,
    /// `max_r (A_r y - b_r)` over every row, excluded ones included.
    pub max_violation: f64,
    /// `sum max(0, A_r y - b_r)^2` over rows outside the excluded set.
    pub pos_sq_outside: f64,
    /// `sum (A_r y - b_r)^2` over rows outside the excluded set.
    pub resid_sq_outside: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    violation: f64,
    row: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // greater = more urgent
    fn cmp(&self, other: &Self) -> Ordering {
        self.violation.total_cmp(&other.violation).then_with(|| other.row.cmp(&self.row))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct BlockScan {
    top: Vec<Candidate>,
    count: usize,
    max_violation: f64,
    pos_sq: f64,
    resid_sq: f64,
}

/// Visits every row whose triple starts at 0-based node `a`, in row-id order,
/// calling `f(row_id, violation)`.
#[inline]
fn for_each_row_in_block(
    a: usize,
    n: usize,
    x: &[f64],
    y: &[f64],
    col: &[usize],
    mut f: impl FnMut(usize, f64),
) {
    let mut row = 3 * triples_before_first(a, n);
    for b in a + 1..n - 1 {
        let ab = col[b] + a;
        let (x_ab, y_ab) = (x[ab], y[ab]);
        for c in b + 1..n {
            let ac = col[c] + a;
            let bc = col[c] + b;
            let (x_ac, y_ac, x_bc, y_bc) = (x[ac], y[ac], x[bc], y[bc]);
            f(row, (y_ab - y_ac - y_bc) - (x_ac + x_bc - x_ab));
            f(row + 1, (y_ac - y_ab - y_bc) - (x_ab + x_bc - x_ac));
            f(row + 2, (y_bc - y_ab - y_ac) - (x_ab + x_ac - x_bc));
            row += 3;
        }
    }
}

fn column_offsets(n: usize) -> Vec<usize> {
    (0..n).map(|c| if c == 0 { 0 } else { c * (c - 1) / 2 }).collect()
}

/// Full pass over all rows: top-`k` violated rows outside `exclude`, the global
/// maximum violation, and residual accumulators for the full-problem KKT test.
///
/// Work is split by the first node of each triple and merged in a fixed
/// order, so the result does not depend on the thread count.
pub fn feasibility_scan(y: &[f64], instance: &ProblemInstance, exclude: &ConstraintSet, k: usize) -> ViolationBatch {
    let n = instance.n();
    assert_eq!(y.len(), num_pairs(n), "y has wrong length");
    let x = instance.dissim_dense();
    let col = column_offsets(n);
    let excluded: Vec<usize> = exclude.row_ids().collect();

    let scan_block = |a: usize| -> BlockScan {
        let first_row = 3 * triples_before_first(a, n);
        let mut ptr = excluded.partition_point(|&r| r < first_row);
        let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::new();
        let mut out = BlockScan { top: Vec::new(), count: 0, max_violation: f64::NEG_INFINITY, pos_sq: 0.0, resid_sq: 0.0 };
        for_each_row_in_block(a, n, x, y, &col, |row, viol| {
            if viol > out.max_violation {
                out.max_violation = viol;
            }
            while ptr < excluded.len() && excluded[ptr] < row {
                ptr += 1;
            }
            if ptr < excluded.len() && excluded[ptr] == row {
                return;
            }
            out.resid_sq += viol * viol;
            if viol > 0.0 {
                out.count += 1;
                out.pos_sq += viol * viol;
                if k == 0 {
                    return;
                }
                let cand = Candidate { violation: viol, row };
                if heap.len() < k {
                    heap.push(Reverse(cand));
                } else if let Some(Reverse(worst)) = heap.peek() {
                    if cand > *worst {
                        heap.pop();
                        heap.push(Reverse(cand));
                    }
                }
            }
        });
        out.top = heap.into_iter().map(|Reverse(c)| c).collect();
        out
    };

    let blocks: Vec<BlockScan> = if num_rows(n) < PAR_MIN {
        (0..n - 2).map(scan_block).collect()
    } else {
        (0..n - 2).into_par_iter().map(scan_block).collect()
    };

    let mut batch = ViolationBatch { max_violation: f64::NEG_INFINITY, ..Default::default() };
    let mut all = Vec::new();
    for blk in blocks {
        batch.num_violated += blk.count;
        batch.max_violation = batch.max_violation.max(blk.max_violation);
        batch.pos_sq_outside += blk.pos_sq;
        batch.resid_sq_outside += blk.resid_sq;
        all.extend(blk.top);
    }
    all.sort_unstable_by(|a, b| b.cmp(a));
    all.truncate(k);
    batch.rows = all.into_iter().map(|c| (c.row, c.violation)).collect();
    batch
}

/// Every row with `A_r y - b_r > 0`, sorted by row id.
pub fn violated_rows(y: &[f64], instance: &ProblemInstance) -> Vec<usize> {
    let n = instance.n();
    assert_eq!(y.len(), num_pairs(n), "y has wrong length");
    let x = instance.dissim_dense();
    let col = column_offsets(n);
    let scan_block = |a: usize| {
        let mut rows = Vec::new();
        for_each_row_in_block(a, n, x, y, &col, |row, viol| {
            if viol > 0.0 {
                rows.push(row);
            }
        });
        rows
    };
    let blocks: Vec<Vec<usize>> = if num_rows(n) < PAR_MIN {
        (0..n - 2).map(scan_block).collect()
    } else {
        (0..n - 2).into_par_iter().map(scan_block).collect()
    };
    blocks.concat()
}

/// `A_S` restricted to the involved variables, with local indexing and a
/// column-compressed transpose.
///
/// Local variable `i` is the global pair slot `vars()[i]`.
#[derive(Debug, Clone)]
pub struct ReducedOperator {
    vars: Vec<usize>,
    rows: Vec<[u32; 3]>,
    b: Vec<f64>,
    weights: Vec<f64>,
    col_ptr: Vec<usize>,
    col_entries: Vec<(u32, f64)>,
}

impl ReducedOperator {
    pub fn new(set: &ConstraintSet, instance: &ProblemInstance) -> Self {
        let vars = set.involved().to_vec();
        let local = |g: usize| vars.binary_search(&g).expect("pair not involved") as u32;
        let rows: Vec<[u32; 3]> = set
            .records()
            .iter()
            .map(|r| [local(r.pair_long), local(r.pair_a), local(r.pair_b)])
            .collect();
        let b = set.records().iter().map(|r| r.b_value).collect();
        let w = instance.weights_dense();
        let weights = vars.iter().map(|&g| w[g]).collect();

        let m = vars.len();
        let mut col_ptr = vec![0usize; m + 1];
        for row in &rows {
            for &j in row {
                col_ptr[j as usize + 1] += 1;
            }
        }
        for i in 0..m {
            col_ptr[i + 1] += col_ptr[i];
        }
        let mut fill = col_ptr.clone();
        let mut col_entries = vec![(0u32, 0.0); col_ptr[m]];
        for (r, row) in rows.iter().enumerate() {
            for (pos, &j) in row.iter().enumerate() {
                let sign = if pos == 0 { 1.0 } else { -1.0 };
                col_entries[fill[j as usize]] = (r as u32, sign);
                fill[j as usize] += 1;
            }
        }
        ReducedOperator { vars, rows, b, weights, col_ptr, col_entries }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rows(&self) -> &[[u32; 3]] {
        &self.rows
    }

    /// Number of rows touching each local variable.
    pub fn var_degree(&self, i: usize) -> usize {
        self.col_ptr[i + 1] - self.col_ptr[i]
    }

    /// `out = A y` over local variables.
    pub fn apply(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.num_vars());
        let f = |(o, r): (&mut f64, &[u32; 3])| {
            *o = y[r[0] as usize] - y[r[1] as usize] - y[r[2] as usize];
        };
        if self.rows.len() < PAR_MIN {
            out.iter_mut().zip(&self.rows).for_each(f);
        } else {
            out.par_iter_mut().zip(self.rows.par_iter()).for_each(f);
        }
    }

    /// `out = A^T u` over local variables.
    pub fn apply_t(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.num_rows());
        let f = |(i, o): (usize, &mut f64)| {
            let mut s = 0.0;
            for &(r, sign) in &self.col_entries[self.col_ptr[i]..self.col_ptr[i + 1]] {
                s += sign * u[r as usize];
            }
            *o = s;
        };
        if self.col_entries.len() < PAR_MIN {
            out.iter_mut().enumerate().for_each(f);
        } else {
            out.par_iter_mut().enumerate().for_each(f);
        }
    }

    /// For each local variable, `sum_r mask_r` over the rows touching it.
    pub fn masked_degree(&self, mask: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.col_entries[self.col_ptr[i]..self.col_ptr[i + 1]]
                .iter()
                .map(|&(r, _)| mask[r as usize])
                .sum();
        }
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.vars.iter().map(|&g| full[g]).collect()
    }

    /// Full-length vector with `local` placed on the involved slots and zeros elsewhere.
    pub fn scatter(&self, local: &[f64], n: usize) -> TriVec {
        let mut out = TriVec::zeros(n);
        for (&g, &v) in self.vars.iter().zip(local) {
            out[g] = v;
        }
        out
    }
}
