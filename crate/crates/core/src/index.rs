//! Index arithmetic between node pairs/triples and flat positions.
//!
//! Node labels are 1-based (`1..=n`). Pair indices and triple ranks are
//! 0-based positions: the pair `(i, j)` lives at slot
//! `(j-1)(j-2)/2 + i - 1` of a [`TriVec`](crate::TriVec), which is the
//! column-by-column order of the strict upper triangle. Triples are ranked
//! lexicographically in `(i, j, k)` and each triple owns three constraint
//! rows `3 * rank + variant`.

use crate::error::{Error, Result};

/// Number of pairs `n(n-1)/2`.
pub fn num_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Number of triples `C(n, 3)`.
pub fn num_triples(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// Number of triangle-inequality rows `3 C(n, 3)`.
pub fn num_rows(n: usize) -> usize {
    3 * num_triples(n)
}

/// Flat slot of the pair `(i, j)` with 1-based labels `i < j`.
pub fn pair_index(i: usize, j: usize, n: usize) -> Result<usize> {
    if i == 0 || i >= j || j > n {
        return Err(Error::arg(format!("pair ({i}, {j}) invalid for n = {n}")));
    }
    Ok(pair_slot(i - 1, j - 1))
}

/// Unchecked pair slot for 0-based nodes `a < b`.
#[inline]
pub(crate) fn pair_slot(a: usize, b: usize) -> usize {
    debug_assert!(a < b);
    b * (b - 1) / 2 + a
}

/// Inverse of [`pair_index`]: 1-based `(i, j)` for slot `k`.
pub fn pair_unrank(k: usize, n: usize) -> Result<(usize, usize)> {
    if k >= num_pairs(n) {
        return Err(Error::arg(format!("pair slot {k} out of range for n = {n}")));
    }
    // largest b with b(b-1)/2 <= k
    let mut b = (((8 * k + 1) as f64).sqrt() as usize + 1) / 2;
    while b * (b - 1) / 2 > k {
        b -= 1;
    }
    while (b + 1) * b / 2 <= k {
        b += 1;
    }
    let a = k - b * (b - 1) / 2;
    Ok((a + 1, b + 1))
}

/// Number of triples whose smallest node is strictly less than the 0-based node `a`.
#[inline]
pub(crate) fn triples_before_first(a: usize, n: usize) -> usize {
    // C(n,3) - C(n-a,3)
    num_triples(n) - num_triples(n - a)
}

/// Lexicographic rank of the triple `i < j < k` (1-based labels).
pub fn triple_rank(i: usize, j: usize, k: usize, n: usize) -> Result<usize> {
    if i == 0 || i >= j || j >= k || k > n {
        return Err(Error::arg(format!("triple ({i}, {j}, {k}) invalid for n = {n}")));
    }
    Ok(triple_rank0(i - 1, j - 1, k - 1, n))
}

#[inline]
pub(crate) fn triple_rank0(a: usize, b: usize, c: usize, n: usize) -> usize {
    // pairs (b', c') with a < b' < b, b' < c' < n, then c - b - 1
    let before_b = {
        let m = n - a - 1; // nodes after a
        let skipped = b - a - 1; // second nodes smaller than b
        // sum_{t=0}^{skipped-1} (m - 1 - t)
        skipped * (m - 1) - skipped * skipped.saturating_sub(1) / 2
    };
    triples_before_first(a, n) + before_b + (c - b - 1)
}

/// Inverse of [`triple_rank`], returning 1-based labels.
pub fn triple_unrank(t: usize, n: usize) -> Result<(usize, usize, usize)> {
    if t >= num_triples(n) {
        return Err(Error::arg(format!("triple rank {t} out of range for n = {n}")));
    }
    let (a, b, c) = triple_unrank0(t, n);
    Ok((a + 1, b + 1, c + 1))
}

pub(crate) fn triple_unrank0(t: usize, n: usize) -> (usize, usize, usize) {
    // first node: largest a with triples_before_first(a) <= t
    let (mut lo, mut hi) = (0usize, n - 2);
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if triples_before_first(mid, n) <= t {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let a = lo;
    let mut rest = t - triples_before_first(a, n);
    let mut b = a + 1;
    loop {
        let block = n - b - 1;
        if rest < block {
            return (a, b, b + 1 + rest);
        }
        rest -= block;
        b += 1;
    }
}

/// Which edge of the triple carries the `+1` coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `+1` on `(i, j)`.
    Ij = 0,
    /// `+1` on `(i, k)`.
    Ik = 1,
    /// `+1` on `(j, k)`.
    Jk = 2,
}

impl Variant {
    pub fn from_index(v: usize) -> Variant {
        match v {
            0 => Variant::Ij,
            1 => Variant::Ik,
            _ => Variant::Jk,
        }
    }
}

/// Pair slots `(long, a, b)` of a constraint row: the row reads
/// `y[long] - y[a] - y[b] <= b_r`.
pub fn row_pairs(row_id: usize, n: usize) -> Result<[usize; 3]> {
    if row_id >= num_rows(n) {
        return Err(Error::arg(format!("row {row_id} out of range for n = {n}")));
    }
    Ok(row_pairs0(row_id, n))
}

#[inline]
pub(crate) fn row_pairs0(row_id: usize, n: usize) -> [usize; 3] {
    let (a, b, c) = triple_unrank0(row_id / 3, n);
    triple_row_pairs(a, b, c, row_id % 3)
}

#[inline]
pub(crate) fn triple_row_pairs(a: usize, b: usize, c: usize, variant: usize) -> [usize; 3] {
    let ij = pair_slot(a, b);
    let ik = pair_slot(a, c);
    let jk = pair_slot(b, c);
    match variant {
        0 => [ij, ik, jk],
        1 => [ik, ij, jk],
        _ => [jk, ij, ik],
    }
}
