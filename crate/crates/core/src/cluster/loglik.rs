//! Log-likelihood merge distance between clusters.

use crate::error::{Error, Result};

use super::encode::FeatureSpace;
use super::stats::{merge_cost, ClusterStats};

/// Distance between two clusters: the drop in total tendency caused by
/// merging them, `xi(a) + xi(b) - xi(a+b)`.
///
/// Nonnegative for any pair (merging never pays), zero exactly when the
/// clusters are indistinguishable, and defined only for nonempty clusters
/// over features with positive global variance. Works for mixed continuous
/// and categorical features without any per-attribute weighting.
pub fn loglik_distance(a: &ClusterStats, b: &ClusterStats, space: &FeatureSpace) -> Result<f64> {
    if a.n == 0 || b.n == 0 {
        return Err(Error::Cluster(
            "log-likelihood distance is undefined for an empty cluster".into(),
        ));
    }
    for f in &space.cont {
        if f.variance <= 0.0 {
            return Err(Error::ZeroVariance(f.name.clone()));
        }
    }
    // mathematically >= 0; clamp rounding dust
    Ok(merge_cost(a, b, space).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CandidateRecord, Dataset, Provenance, GENDER, GRADE};

    fn record(id: &str, gender: &str, grade: f64) -> CandidateRecord {
        let mut rec = CandidateRecord::new(id, 2004);
        rec.gender = Some(gender.into());
        rec.grade = Some(grade);
        rec
    }

    fn fixture() -> (Dataset, FeatureSpace) {
        let ds = Dataset::new(
            vec![
                record("a", "Female", 10.0),
                record("b", "Female", 10.0),
                record("c", "Male", 18.0),
                record("d", "Male", 17.0),
            ],
            Provenance::new("test"),
        );
        let space = FeatureSpace::build(&ds, &[GRADE.to_string(), GENDER.to_string()]).unwrap();
        (ds, space)
    }

    #[test]
    fn identical_singletons_are_at_distance_zero() {
        let (ds, space) = fixture();
        let a = ClusterStats::from_record(&space, &ds.rows[0]).unwrap();
        let b = ClusterStats::from_record(&space, &ds.rows[1]).unwrap();
        assert_eq!(loglik_distance(&a, &b, &space).unwrap(), 0.0);
    }

    #[test]
    fn distance_is_symmetric_and_nonnegative() {
        let (ds, space) = fixture();
        let a = ClusterStats::from_record(&space, &ds.rows[0]).unwrap();
        let b = ClusterStats::from_record(&space, &ds.rows[2]).unwrap();
        let ab = loglik_distance(&a, &b, &space).unwrap();
        let ba = loglik_distance(&b, &a, &space).unwrap();
        assert_eq!(ab, ba);
        assert!(ab > 0.0);
    }

    #[test]
    fn closer_pairs_have_smaller_distance() {
        let (ds, space) = fixture();
        let c = ClusterStats::from_record(&space, &ds.rows[2]).unwrap();
        let d = ClusterStats::from_record(&space, &ds.rows[3]).unwrap();
        let a = ClusterStats::from_record(&space, &ds.rows[0]).unwrap();
        let near = loglik_distance(&c, &d, &space).unwrap();
        let far = loglik_distance(&a, &c, &space).unwrap();
        assert!(near < far, "{near} vs {far}");
    }

    #[test]
    fn empty_cluster_is_rejected() {
        let (ds, space) = fixture();
        let a = ClusterStats::from_record(&space, &ds.rows[0]).unwrap();
        let empty = ClusterStats::zero(&space);
        assert!(loglik_distance(&a, &empty, &space).is_err());
    }

    #[test]
    fn zero_global_variance_is_rejected() {
        let (ds, space) = fixture();
        let mut bad = space.clone();
        bad.cont[0].variance = 0.0;
        let a = ClusterStats::from_record(&space, &ds.rows[0]).unwrap();
        let b = ClusterStats::from_record(&space, &ds.rows[2]).unwrap();
        let err = loglik_distance(&a, &b, &bad).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(_)), "{err}");
    }
}
