//! Poolable per-cluster statistics and the log-likelihood cost function.
//!
//! A cluster is summarized by counts, per-attribute sums and sums of
//! squares, and per-level counts. Statistics pool by addition, so merging
//! two clusters never touches the raw rows. The tendency term `xi` is the
//! negative cost of describing a cluster: for each continuous attribute
//! `-N/2 * ln(global_variance + cluster_variance)`, for each categorical
//! attribute `-N * entropy`. Distances and the BIC both derive from `xi`.

use crate::data::CandidateRecord;
use crate::error::{Error, Result};

use super::encode::FeatureSpace;

/// Additive summary of one cluster under a [`FeatureSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterStats {
    pub n: usize,
    pub cont_sum: Vec<f64>,
    pub cont_sum_sq: Vec<f64>,
    /// `cat_counts[j][l]` counts level `l` of categorical feature `j`.
    pub cat_counts: Vec<Vec<u64>>,
}

impl ClusterStats {
    pub fn zero(space: &FeatureSpace) -> ClusterStats {
        ClusterStats {
            n: 0,
            cont_sum: vec![0.0; space.cont.len()],
            cont_sum_sq: vec![0.0; space.cont.len()],
            cat_counts: space.cat.iter().map(|c| vec![0; c.levels.len()]).collect(),
        }
    }

    /// Singleton statistics for one record.
    pub fn from_record(space: &FeatureSpace, rec: &CandidateRecord) -> Result<ClusterStats> {
        let mut stats = ClusterStats::zero(space);
        stats.push_record(space, rec)?;
        Ok(stats)
    }

    /// Adds one record. Unseen categorical levels are rejected: statistics
    /// must stay within the fitted space.
    pub fn push_record(&mut self, space: &FeatureSpace, rec: &CandidateRecord) -> Result<()> {
        for (j, f) in space.cont.iter().enumerate() {
            let v = rec.continuous(&f.name).ok_or_else(|| {
                Error::Cluster(format!("row {} is missing {}", rec.id, f.name))
            })?;
            self.cont_sum[j] += v;
            self.cont_sum_sq[j] += v * v;
        }
        for (j, f) in space.cat.iter().enumerate() {
            let v = rec.categorical(&f.name).ok_or_else(|| {
                Error::Cluster(format!("row {} is missing {}", rec.id, f.name))
            })?;
            let l = f.levels.iter().position(|x| x == v).ok_or_else(|| {
                Error::Cluster(format!(
                    "row {}: level {v:?} of {} is outside the fitted space",
                    rec.id, f.name
                ))
            })?;
            self.cat_counts[j][l] += 1;
        }
        self.n += 1;
        Ok(())
    }

    /// Pools `other` into `self` by plain addition.
    pub fn add(&mut self, other: &ClusterStats) {
        self.n += other.n;
        for (a, b) in self.cont_sum.iter_mut().zip(&other.cont_sum) {
            *a += b;
        }
        for (a, b) in self.cont_sum_sq.iter_mut().zip(&other.cont_sum_sq) {
            *a += b;
        }
        for (a, b) in self.cat_counts.iter_mut().zip(&other.cat_counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn merged(&self, other: &ClusterStats) -> ClusterStats {
        let mut out = self.clone();
        out.add(other);
        out
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.cont_sum[j] / self.n as f64
    }

    /// Maximum-likelihood variance of continuous feature `j`, clamped at
    /// zero against rounding.
    pub fn variance(&self, j: usize) -> f64 {
        let n = self.n as f64;
        let mean = self.cont_sum[j] / n;
        (self.cont_sum_sq[j] / n - mean * mean).max(0.0)
    }

    /// Natural-log entropy of categorical feature `j`.
    pub fn entropy(&self, j: usize) -> f64 {
        let n = self.n as f64;
        let mut h = 0.0;
        for &count in &self.cat_counts[j] {
            if count > 0 {
                let p = count as f64 / n;
                h -= p * p.ln();
            }
        }
        h
    }

    /// The tendency term. Zero for an empty cluster.
    pub fn xi(&self, space: &FeatureSpace) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let mut cost = 0.0;
        for (j, f) in space.cont.iter().enumerate() {
            cost += 0.5 * (f.variance + self.variance(j)).ln();
        }
        for j in 0..space.cat.len() {
            cost += self.entropy(j);
        }
        -(self.n as f64) * cost
    }
}

/// `xi` of the pooled cluster, computed without materializing it; the hot
/// path of hierarchical merging.
pub(crate) fn merged_xi(a: &ClusterStats, b: &ClusterStats, space: &FeatureSpace) -> f64 {
    let n = (a.n + b.n) as f64;
    let mut cost = 0.0;
    for (j, f) in space.cont.iter().enumerate() {
        let sum = a.cont_sum[j] + b.cont_sum[j];
        let sum_sq = a.cont_sum_sq[j] + b.cont_sum_sq[j];
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        cost += 0.5 * (f.variance + var).ln();
    }
    for j in 0..space.cat.len() {
        for (&ca, &cb) in a.cat_counts[j].iter().zip(&b.cat_counts[j]) {
            let count = ca + cb;
            if count > 0 {
                let p = count as f64 / n;
                cost -= p * p.ln();
            }
        }
    }
    -n * cost
}

/// `xi(a) + xi(b) - xi(a merged with b)`: the merge cost.
pub(crate) fn merge_cost(a: &ClusterStats, b: &ClusterStats, space: &FeatureSpace) -> f64 {
    a.xi(space) + b.xi(space) - merged_xi(a, b, space)
}
