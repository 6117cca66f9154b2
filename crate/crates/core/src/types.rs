use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::num_pairs;

/// Norm used to measure the weighted deviation from the input dissimilarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(Norm::L1),
            "l2" | "2" => Ok(Norm::L2),
            "linf" | "inf" | "l-inf" => Ok(Norm::Linf),
            other => Err(Error::arg(format!("unknown norm '{other}'"))),
        }
    }
}

/// Dense vector over the strict upper triangle, one entry per node pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TriVec(Vec<f64>);

impl TriVec {
    pub fn zeros(n: usize) -> Self {
        TriVec(vec![0.0; num_pairs(n)])
    }

    /// Wraps `values`, checking that the length matches `n` and entries are finite.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_pairs(n) {
            return Err(Error::DimensionMismatch { expected: num_pairs(n), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("entry {k} is not finite")));
        }
        Ok(TriVec(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for TriVec {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for TriVec {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Pair-indexed vector stored as a default value plus exceptions.
///
/// Graph instances have `O(n^2)` pairs but only `O(edges)` distinct values, so
/// the dissimilarities and weights are kept in this form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseTriVec {
    n: usize,
    default_value: f64,
    exceptions: BTreeMap<usize, f64>,
}

impl SparseTriVec {
    pub fn constant(n: usize, default_value: f64) -> Self {
        SparseTriVec { n, default_value, exceptions: BTreeMap::new() }
    }

    pub fn from_dense(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != num_pairs(n) {
            return Err(Error::DimensionMismatch { expected: num_pairs(n), got: values.len() });
        }
        Ok(SparseTriVec {
            n,
            default_value: 0.0,
            exceptions: values.iter().copied().enumerate().collect(),
        })
    }

    pub fn set(&mut self, slot: usize, value: f64) -> Result<()> {
        if slot >= num_pairs(self.n) {
            return Err(Error::arg(format!("pair slot {slot} out of range for n = {}", self.n)));
        }
        self.exceptions.insert(slot, value);
        Ok(())
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.exceptions.get(&slot).copied().unwrap_or(self.default_value)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn default_value(&self) -> f64 {
        self.default_value
    }

    pub fn exceptions(&self) -> &BTreeMap<usize, f64> {
        &self.exceptions
    }

    pub fn to_dense(&self) -> TriVec {
        let mut v = vec![self.default_value; num_pairs(self.n)];
        for (&k, &x) in &self.exceptions {
            v[k] = x;
        }
        TriVec(v)
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        let has_default = self.exceptions.len() < num_pairs(self.n);
        has_default.then_some(self.default_value).into_iter().chain(self.exceptions.values().copied())
    }
}

/// A metric nearness instance: dissimilarities, weights and the norm.
///
/// Dense copies of both vectors are cached; they have the same length as the
/// solution vector, so they add nothing asymptotically.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    n: usize,
    dissimilarity: SparseTriVec,
    weights: SparseTriVec,
    norm: Norm,
    dissim_dense: TriVec,
    weights_dense: TriVec,
}

impl ProblemInstance {
    pub fn new(dissimilarity: SparseTriVec, weights: SparseTriVec, norm: Norm) -> Result<Self> {
        let n = dissimilarity.n();
        if n < 3 {
            return Err(Error::arg(format!("need at least 3 nodes, got {n}")));
        }
        if weights.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: weights.n() });
        }
        if dissimilarity.values().any(|x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::arg("dissimilarities must be finite and nonnegative"));
        }
        if weights.values().any(|w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::arg("weights must be finite and strictly positive"));
        }
        let dissim_dense = dissimilarity.to_dense();
        let weights_dense = weights.to_dense();
        Ok(ProblemInstance { n, dissimilarity, weights, norm, dissim_dense, weights_dense })
    }

    /// Dense instance from pair-ordered values.
    pub fn from_dense(n: usize, dissimilarity: &[f64], weights: &[f64], norm: Norm) -> Result<Self> {
        Self::new(SparseTriVec::from_dense(n, dissimilarity)?, SparseTriVec::from_dense(n, weights)?, norm)
    }

    /// Unit-weight instance.
    pub fn unweighted(n: usize, dissimilarity: &[f64], norm: Norm) -> Result<Self> {
        Self::new(SparseTriVec::from_dense(n, dissimilarity)?, SparseTriVec::constant(n, 1.0), norm)
    }

    pub fn with_norm(&self, norm: Norm) -> Self {
        ProblemInstance { norm, ..self.clone() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_pairs(&self) -> usize {
        num_pairs(self.n)
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn dissimilarity(&self) -> &SparseTriVec {
        &self.dissimilarity
    }

    pub fn weights(&self) -> &SparseTriVec {
        &self.weights
    }

    pub fn dissim_dense(&self) -> &[f64] {
        &self.dissim_dense
    }

    pub fn weights_dense(&self) -> &[f64] {
        &self.weights_dense
    }
}
