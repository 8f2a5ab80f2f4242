//! Clustering of mixed continuous/categorical records.
//!
//! Two algorithms over one shared feature description: a two-phase
//! hierarchical procedure with automatic cluster-count selection
//! ([`twostep`]), and standard K-means ([`kmeans`]) used both for
//! cross-checking and for pre-grouping large inputs. A [`Clustering`] keeps
//! the assignment together with per-cluster statistics that are always
//! recomputable from the rows.

use std::io::{Read, Write};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub mod agglomerate;
pub mod autok;
pub mod encode;
pub mod kmeans;
pub mod loglik;
pub mod stats;
pub mod twostep;

pub use agglomerate::{agglomerate, agglomerate_stats, MergeStep, MergeTrace};
pub use autok::{auto_k, AutoKParams};
pub use encode::{CatFeature, ContFeature, FeatureSpace};
pub use kmeans::{farthest_first_init, kmeans, lloyd, KMeansOutcome, KMeansParams, LloydOutcome};
pub use loglik::loglik_distance;
pub use stats::ClusterStats;
pub use twostep::{twostep, TwoStepOutcome, TwoStepParams};

/// A partition of a dataset's rows.
#[derive(Clone, Debug)]
pub struct Clustering {
    pub ids: Vec<String>,
    /// `assignment[i]` is the cluster of row `i`, in `0..k`.
    pub assignment: Vec<usize>,
    pub k: usize,
    /// Feature names the clustering was requested over.
    pub features: Vec<String>,
    pub space: FeatureSpace,
    /// Per-cluster statistics, pooled in row order.
    pub stats: Vec<ClusterStats>,
}

impl Clustering {
    /// Packages an assignment: fits the feature space and pools per-cluster
    /// statistics. Labels must lie in `0..k`.
    pub fn from_assignment(
        ds: &Dataset,
        features: &[String],
        k: usize,
        assignment: Vec<usize>,
    ) -> Result<Clustering> {
        if k < 1 {
            return Err(Error::Cluster("k must be at least 1".into()));
        }
        if assignment.len() != ds.len() {
            return Err(Error::Cluster(format!(
                "assignment covers {} rows, dataset has {}",
                assignment.len(),
                ds.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a >= k) {
            return Err(Error::Cluster(format!("cluster label {bad} out of 0..{k}")));
        }
        let space = FeatureSpace::build(ds, features)?;
        let mut stats = vec![ClusterStats::zero(&space); k];
        for (rec, &a) in ds.rows.iter().zip(&assignment) {
            stats[a].push_record(&space, rec)?;
        }
        Ok(Clustering {
            ids: ds.ids(),
            assignment,
            k,
            features: features.to_vec(),
            space,
            stats,
        })
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    /// Verifies that the stored statistics match a from-scratch recompute on
    /// the dataset. Guards against drift when statistics are pooled
    /// incrementally.
    pub fn recheck(&self, ds: &Dataset) -> Result<()> {
        if ds.ids() != self.ids {
            return Err(Error::Mismatch("dataset rows differ from the clustering's".into()));
        }
        let fresh = Clustering::from_assignment(ds, &self.features, self.k, self.assignment.clone())?;
        for (c, (a, b)) in self.stats.iter().zip(&fresh.stats).enumerate() {
            let close = a.n == b.n
                && a.cat_counts == b.cat_counts
                && a.cont_sum
                    .iter()
                    .zip(&b.cont_sum)
                    .all(|(x, y)| (x - y).abs() < 1e-9)
                && a.cont_sum_sq
                    .iter()
                    .zip(&b.cont_sum_sq)
                    .all(|(x, y)| (x - y).abs() < 1e-6);
            if !close {
                return Err(Error::Cluster(format!(
                    "stored statistics for cluster {c} do not match the rows"
                )));
            }
        }
        Ok(())
    }

    /// Writes `id,cluster` rows.
    pub fn write_assignments<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["id", "cluster"])?;
        for (id, a) in self.ids.iter().zip(&self.assignment) {
            csv.write_record([id.as_str(), &a.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Reads an `id,cluster` file back: ids in file order, labels, and k
/// (the highest label plus one).
pub fn read_assignments<R: Read>(reader: R) -> Result<(Vec<String>, Vec<usize>, usize)> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers()?.clone();
    let id_col = headers.iter().position(|h| h == "id");
    let cluster_col = headers.iter().position(|h| h == "cluster");
    let (Some(id_col), Some(cluster_col)) = (id_col, cluster_col) else {
        return Err(Error::InvalidInput("assignment file needs id and cluster columns".into()));
    };
    let mut ids = Vec::new();
    let mut assignment = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "missing id".into(),
            });
        }
        let label: usize = record
            .get(cluster_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Parse {
                line,
                msg: format!("bad cluster label {:?}", record.get(cluster_col).unwrap_or("")),
            })?;
        ids.push(id);
        assignment.push(label);
    }
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    Ok((ids, assignment, k))
}

/// Writes a merge trace as `k,merge_distance,bic` rows, one per level the
/// trace visited, highest k first.
pub fn write_merge_trace<W: Write>(trace: &MergeTrace, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["k", "merge_distance", "bic"])?;
    csv.write_record([
        trace.start_k.to_string(),
        String::new(),
        trace.bic_start.to_string(),
    ])?;
    for step in &trace.steps {
        csv.write_record([
            step.k_after.to_string(),
            step.distance.to_string(),
            step.bic_after.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
