//! Feature space shared by the clustering algorithms.
//!
//! A [`FeatureSpace`] fixes, for a chosen feature subset of a dataset: the
//! continuous attributes with their global mean/variance (maximum-likelihood,
//! N divisor), and the categorical attributes with their sorted level lists.
//! Distances and statistics all refer to this one description, so clusters
//! built by different algorithms over the same dataset are comparable.

use crate::data::{AttrKind, CandidateRecord, Dataset};
use crate::error::{Error, Result};

/// A continuous feature with its global moments.
#[derive(Clone, Debug, PartialEq)]
pub struct ContFeature {
    pub name: String,
    pub mean: f64,
    /// Maximum-likelihood variance (sum of squared deviations over N).
    pub variance: f64,
}

/// A categorical feature with its observed levels, sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct CatFeature {
    pub name: String,
    pub levels: Vec<String>,
}

/// Feature description for one dataset and feature subset.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSpace {
    pub cont: Vec<ContFeature>,
    pub cat: Vec<CatFeature>,
    /// Constant continuous attributes that were requested but dropped.
    pub dropped: Vec<String>,
    /// Rows the space was fitted on.
    pub n: usize,
}

impl FeatureSpace {
    /// Fits a space on `ds` for the requested features, dropping constant
    /// continuous attributes (they carry no distance information and break
    /// both standardization and the log-likelihood distance).
    pub fn build(ds: &Dataset, features: &[String]) -> Result<FeatureSpace> {
        FeatureSpace::build_inner(ds, features, true)
    }

    /// Like [`FeatureSpace::build`] but errors on a constant continuous
    /// attribute instead of dropping it.
    pub fn build_strict(ds: &Dataset, features: &[String]) -> Result<FeatureSpace> {
        FeatureSpace::build_inner(ds, features, false)
    }

    fn build_inner(ds: &Dataset, features: &[String], drop_constant: bool) -> Result<FeatureSpace> {
        if ds.is_empty() {
            return Err(Error::Cluster("cannot fit a feature space on an empty dataset".into()));
        }
        if features.is_empty() {
            return Err(Error::Cluster("no clustering features requested".into()));
        }
        let mut cont = Vec::new();
        let mut cat = Vec::new();
        let mut dropped = Vec::new();
        for name in features {
            match ds.schema.kind_of(name) {
                Some(AttrKind::Continuous) => {
                    let mut values = Vec::with_capacity(ds.len());
                    for rec in &ds.rows {
                        let v = rec.continuous(name).ok_or_else(|| {
                            Error::Cluster(format!(
                                "row {} is missing {name}; repair missing values first",
                                rec.id
                            ))
                        })?;
                        values.push(v);
                    }
                    let n = values.len() as f64;
                    let mean = values.iter().sum::<f64>() / n;
                    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    if variance <= 0.0 {
                        if drop_constant {
                            dropped.push(name.clone());
                            continue;
                        }
                        return Err(Error::ZeroVariance(name.clone()));
                    }
                    cont.push(ContFeature {
                        name: name.clone(),
                        mean,
                        variance,
                    });
                }
                Some(AttrKind::Categorical) => {
                    for rec in &ds.rows {
                        if rec.categorical(name).is_none() {
                            return Err(Error::Cluster(format!(
                                "row {} is missing {name}; repair missing values first",
                                rec.id
                            )));
                        }
                    }
                    cat.push(CatFeature {
                        name: name.clone(),
                        levels: ds.levels(name),
                    });
                }
                None => {
                    return Err(Error::Cluster(format!("unknown clustering feature {name:?}")));
                }
            }
        }
        if cont.is_empty() && cat.is_empty() {
            return Err(Error::Cluster(
                "every requested clustering feature is constant; nothing to cluster on".into(),
            ));
        }
        Ok(FeatureSpace {
            cont,
            cat,
            dropped,
            n: ds.len(),
        })
    }

    /// Dimension of the standardized one-hot embedding.
    pub fn dim(&self) -> usize {
        self.cont.len() + self.cat.iter().map(|c| c.levels.len()).sum::<usize>()
    }

    /// Embeds one record: continuous values standardized to zero mean and
    /// unit variance, categorical values one-hot encoded. A level unseen at
    /// fit time encodes as an all-zero block.
    pub fn encode(&self, rec: &CandidateRecord) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim());
        for f in &self.cont {
            let v = rec.continuous(&f.name).ok_or_else(|| {
                Error::Cluster(format!("row {} is missing {}", rec.id, f.name))
            })?;
            out.push((v - f.mean) / f.variance.sqrt());
        }
        for f in &self.cat {
            let v = rec.categorical(&f.name).ok_or_else(|| {
                Error::Cluster(format!("row {} is missing {}", rec.id, f.name))
            })?;
            let hit = f.levels.iter().position(|l| l == v);
            for idx in 0..f.levels.len() {
                out.push(if hit == Some(idx) { 1.0 } else { 0.0 });
            }
        }
        Ok(out)
    }

    pub fn encode_dataset(&self, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
        ds.rows.iter().map(|r| self.encode(r)).collect()
    }

    /// Names of the features the space actually uses, in fit order.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.cont.iter().map(|f| f.name.clone()).collect();
        names.extend(self.cat.iter().map(|f| f.name.clone()));
        names
    }
}
