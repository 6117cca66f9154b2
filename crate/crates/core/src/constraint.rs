use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{num_rows, row_pairs0};
use crate::types::ProblemInstance;

/// One triangle-inequality row `y[long] - y[a] - y[b] <= b_value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub row_id: usize,
    pub pair_long: usize,
    pub pair_a: usize,
    pub pair_b: usize,
    pub b_value: f64,
}

impl ConstraintRecord {
    pub fn new(row_id: usize, instance: &ProblemInstance) -> Result<Self> {
        let n = instance.n();
        if row_id >= num_rows(n) {
            return Err(Error::arg(format!("row {row_id} out of range for n = {n}")));
        }
        Ok(Self::new_unchecked(row_id, instance))
    }

    pub(crate) fn new_unchecked(row_id: usize, instance: &ProblemInstance) -> Self {
        let [pair_long, pair_a, pair_b] = row_pairs0(row_id, instance.n());
        let x = instance.dissim_dense();
        ConstraintRecord { row_id, pair_long, pair_a, pair_b, b_value: x[pair_a] + x[pair_b] - x[pair_long] }
    }

    #[inline]
    pub fn pairs(&self) -> [usize; 3] {
        [self.pair_long, self.pair_a, self.pair_b]
    }

    /// `A_r y` for a full-length `y`.
    #[inline]
    pub fn apply(&self, y: &[f64]) -> f64 {
        y[self.pair_long] - y[self.pair_a] - y[self.pair_b]
    }
}

/// Working set of triangle rows, kept sorted by row id, with one
/// multiplier per row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    records: Vec<ConstraintRecord>,
    multipliers: Vec<f64>,
    involved: Vec<usize>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from row ids; duplicates are merged and multipliers start at zero.
    pub fn from_rows(instance: &ProblemInstance, rows: &[usize]) -> Result<Self> {
        let mut rows = rows.to_vec();
        rows.sort_unstable();
        rows.dedup();
        let records = rows
            .into_iter()
            .map(|r| ConstraintRecord::new(r, instance))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_sorted_records(records))
    }

    pub(crate) fn from_sorted_records(records: Vec<ConstraintRecord>) -> Self {
        debug_assert!(records.windows(2).all(|w| w[0].row_id < w[1].row_id));
        let multipliers = vec![0.0; records.len()];
        let mut set = ConstraintSet { records, multipliers, involved: Vec::new() };
        set.refresh_involved();
        set
    }

    fn refresh_involved(&mut self) {
        let mut inv: Vec<usize> = self.records.iter().flat_map(|r| r.pairs()).collect();
        inv.sort_unstable();
        inv.dedup();
        self.involved = inv;
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ConstraintRecord] {
        &self.records
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn set_multipliers(&mut self, u: Vec<f64>) -> Result<()> {
        if u.len() != self.records.len() {
            return Err(Error::DimensionMismatch { expected: self.records.len(), got: u.len() });
        }
        self.multipliers = u;
        Ok(())
    }

    /// Sorted pair slots touched by any row.
    pub fn involved(&self) -> &[usize] {
        &self.involved
    }

    pub fn row_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.iter().map(|r| r.row_id)
    }

    pub fn contains(&self, row_id: usize) -> bool {
        self.position(row_id).is_some()
    }

    pub fn position(&self, row_id: usize) -> Option<usize> {
        self.records.binary_search_by_key(&row_id, |r| r.row_id).ok()
    }

    /// Keeps the rows for which `keep(index)` is true, along with their multipliers.
    pub fn retain_indices(&mut self, mut keep: impl FnMut(usize) -> bool) {
        let mut idx = 0;
        let mut records = Vec::with_capacity(self.records.len());
        let mut multipliers = Vec::with_capacity(self.records.len());
        for (rec, u) in self.records.iter().zip(&self.multipliers) {
            if keep(idx) {
                records.push(*rec);
                multipliers.push(*u);
            }
            idx += 1;
        }
        self.records = records;
        self.multipliers = multipliers;
        self.refresh_involved();
    }

    /// Merges new rows (zero multipliers); rows already present are ignored.
    pub fn insert_records(&mut self, mut new: Vec<ConstraintRecord>) {
        new.sort_unstable_by_key(|r| r.row_id);
        new.dedup_by_key(|r| r.row_id);
        let mut records = Vec::with_capacity(self.records.len() + new.len());
        let mut multipliers = Vec::with_capacity(records.capacity());
        let (mut i, mut j) = (0, 0);
        while i < self.records.len() || j < new.len() {
            let take_old = match (self.records.get(i), new.get(j)) {
                (Some(a), Some(b)) if a.row_id == b.row_id => {
                    j += 1;
                    true
                }
                (Some(a), Some(b)) => a.row_id < b.row_id,
                (Some(_), None) => true,
                (None, _) => false,
            };
            if take_old {
                records.push(self.records[i]);
                multipliers.push(self.multipliers[i]);
                i += 1;
            } else {
                records.push(new[j]);
                multipliers.push(0.0);
                j += 1;
            }
        }
        self.records = records;
        self.multipliers = multipliers;
        self.refresh_involved();
    }
}
