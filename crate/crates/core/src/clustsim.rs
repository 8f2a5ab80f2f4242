//! Similarity between two clusterings of the same rows.
//!
//! Three measures: the Rand and Jaccard indices, which score agreement over
//! row pairs, and ADCO, which scores overlap of per-cluster attribute
//! density profiles. Pair counting runs on the k1 x k2 contingency table in
//! integer arithmetic, so the indices are exact. ADCO discretizes each
//! continuous attribute into equal-width bins over its observed range, uses
//! one bin per level for categorical attributes, counts cluster-by-bin
//! densities, and takes the best cluster alignment: exhaustive over
//! permutations up to k = 8, optimal assignment (Kuhn-Munkres) above that.
//! Both searches maximize the same integer objective, so the split is
//! invisible to callers.
//!
//! All three functions require the two clusterings to carry identical row
//! ids in identical order; anything else is an error, not a silent join.

use crate::cluster::Clustering;
use crate::data::{AttrKind, Dataset};
use crate::error::{Error, Result};
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use std::collections::BTreeMap;

/// Default ADCO bin count for continuous attributes.
pub const ADCO_BINS: usize = 10;

/// Row-pair agreement counts between two clusterings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairCounts {
    /// Pairs placed in one cluster by both clusterings.
    pub a: u64,
    /// Pairs together in the first clustering only.
    pub b: u64,
    /// Pairs together in the second clustering only.
    pub c: u64,
    /// Pairs separated by both clusterings.
    pub d: u64,
}

impl PairCounts {
    /// Total number of row pairs, n(n-1)/2.
    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

fn choose2(n: u64) -> u64 {
    n * (n.saturating_sub(1)) / 2
}

fn check_same_rows(c1: &Clustering, c2: &Clustering) -> Result<()> {
    if c1.ids != c2.ids {
        return Err(Error::Mismatch(
            "the two clusterings cover different rows (or a different row order)".into(),
        ));
    }
    Ok(())
}

/// Counts pair agreement via the contingency table, exactly.
pub fn pair_counts(c1: &Clustering, c2: &Clustering) -> Result<PairCounts> {
    check_same_rows(c1, c2)?;
    let n = c1.ids.len() as u64;
    if n < 2 {
        return Err(Error::Mismatch("pair counting needs at least 2 rows".into()));
    }
    let mut contingency = vec![0u64; c1.k * c2.k];
    for (&x, &y) in c1.assignment.iter().zip(&c2.assignment) {
        contingency[x * c2.k + y] += 1;
    }
    let a: u64 = contingency.iter().map(|&m| choose2(m)).sum();
    let s1: u64 = c1.sizes().iter().map(|&m| choose2(m as u64)).sum();
    let s2: u64 = c2.sizes().iter().map(|&m| choose2(m as u64)).sum();
    let total = choose2(n);
    let b = s1 - a;
    let c = s2 - a;
    let d = total - a - b - c;
    Ok(PairCounts { a, b, c, d })
}

/// Fraction of row pairs the two clusterings agree on: (a+d)/total.
pub fn rand_index(c1: &Clustering, c2: &Clustering) -> Result<f64> {
    let p = pair_counts(c1, c2)?;
    Ok((p.a + p.d) as f64 / p.total() as f64)
}

/// Agreement over pairs together in at least one clustering: a/(a+b+c).
/// When both clusterings are all singletons that ratio is 0/0; the
/// clusterings are then identical, so the index is defined as 1.
pub fn jaccard_index(c1: &Clustering, c2: &Clustering) -> Result<f64> {
    let p = pair_counts(c1, c2)?;
    let denom = p.a + p.b + p.c;
    if denom == 0 {
        return Ok(1.0);
    }
    Ok(p.a as f64 / denom as f64)
}

/// Bin layout for one attribute of the density profile.
enum BinLayout {
    Cont { lo: f64, width: f64, bins: usize },
    Cat { index: BTreeMap<String, usize> },
}

impl BinLayout {
    fn len(&self) -> usize {
        match self {
            BinLayout::Cont { bins, .. } => *bins,
            BinLayout::Cat { index } => index.len(),
        }
    }
}

/// Best alignment score between two density profiles: exhaustive for small
/// k, optimal assignment above. `w[i][m]` is the dot product of cluster i of
/// the first profile with cluster m of the second.
fn best_alignment_sum(w: &[Vec<u64>]) -> u64 {
    if w.len() <= 8 {
        exhaustive_alignment(w)
    } else {
        hungarian_alignment(w)
    }
}

fn exhaustive_alignment(w: &[Vec<u64>]) -> u64 {
    fn rec(w: &[Vec<u64>], row: usize, used: u32, acc: u64, best: &mut u64) {
        if row == w.len() {
            *best = (*best).max(acc);
            return;
        }
        for col in 0..w.len() {
            if used & (1 << col) == 0 {
                rec(w, row + 1, used | (1 << col), acc + w[row][col], best);
            }
        }
    }
    let mut best = 0;
    rec(w, 0, 0, 0, &mut best);
    best
}

fn hungarian_alignment(w: &[Vec<u64>]) -> u64 {
    // dot products of count vectors stay far below i64::MAX at any
    // realistic row count, so the cast is safe
    let rows = w
        .iter()
        .map(|row| row.iter().map(|&v| v as i64).collect::<Vec<i64>>());
    let matrix = Matrix::from_rows(rows).expect("square weight matrix");
    let (total, _) = kuhn_munkres(&matrix);
    total as u64
}

/// Attribute-distribution overlap between two clusterings of `ds`.
///
/// Every attribute contributes a histogram per cluster: `bins_per_attr`
/// equal-width bins over the observed range for continuous attributes, one
/// bin per observed level for categorical ones. The score is the best
/// cross-profile alignment over cluster permutations, normalized by the
/// larger identity-permutation self-alignment, which bounds it to (0, 1]
/// by Cauchy-Schwarz. A cluster-count mismatch is padded with empty
/// clusters; rows must be complete (repair missing values first).
pub fn adco(c1: &Clustering, c2: &Clustering, ds: &Dataset, bins_per_attr: usize) -> Result<f64> {
    check_same_rows(c1, c2)?;
    if bins_per_attr == 0 {
        return Err(Error::Config("adco needs at least one bin per attribute".into()));
    }
    if ds.rows.is_empty() {
        return Err(Error::InvalidInput("adco on an empty dataset".into()));
    }
    let ids: Vec<&str> = ds.rows.iter().map(|r| r.id.as_str()).collect();
    if ids.len() != c1.ids.len() || !ids.iter().zip(&c1.ids).all(|(a, b)| *a == b.as_str()) {
        return Err(Error::Mismatch("clusterings do not cover the dataset's rows".into()));
    }

    let mut layouts = Vec::new();
    let mut offsets = Vec::new();
    let mut total_bins = 0usize;
    for attr in &ds.schema.attrs {
        let layout = match attr.kind {
            AttrKind::Continuous => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for row in &ds.rows {
                    let v = row.continuous(&attr.name).ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "row {} is missing {}; repair missing values before adco",
                            row.id, attr.name
                        ))
                    })?;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                BinLayout::Cont {
                    lo,
                    width: (hi - lo) / bins_per_attr as f64,
                    bins: bins_per_attr,
                }
            }
            AttrKind::Categorical => {
                for row in &ds.rows {
                    if row.categorical(&attr.name).is_none() {
                        return Err(Error::InvalidInput(format!(
                            "row {} is missing {}; repair missing values before adco",
                            row.id, attr.name
                        )));
                    }
                }
                let index = ds
                    .levels(&attr.name)
                    .into_iter()
                    .enumerate()
                    .map(|(i, l)| (l, i))
                    .collect();
                BinLayout::Cat { index }
            }
        };
        offsets.push(total_bins);
        total_bins += layout.len();
        layouts.push(layout);
    }

    let k = c1.k.max(c2.k);
    let densities = |clustering: &Clustering| -> Vec<Vec<u64>> {
        let mut d = vec![vec![0u64; total_bins]; k];
        for (row, &cluster) in ds.rows.iter().zip(&clustering.assignment) {
            for ((attr, layout), &offset) in ds.schema.attrs.iter().zip(&layouts).zip(&offsets) {
                let bin = match layout {
                    BinLayout::Cont { lo, width, bins } => {
                        let v = row.continuous(&attr.name).expect("checked above");
                        if *width == 0.0 {
                            0
                        } else {
                            (((v - lo) / width) as usize).min(bins - 1)
                        }
                    }
                    BinLayout::Cat { index } => {
                        index[row.categorical(&attr.name).expect("checked above")]
                    }
                };
                d[cluster][offset + bin] += 1;
            }
        }
        d
    };
    let d1 = densities(c1);
    let d2 = densities(c2);

    let dot = |x: &[u64], y: &[u64]| -> u64 { x.iter().zip(y).map(|(&a, &b)| a * b).sum() };
    let w: Vec<Vec<u64>> = d1
        .iter()
        .map(|row1| d2.iter().map(|row2| dot(row1, row2)).collect())
        .collect();
    let cross = best_alignment_sum(&w);
    let self1: u64 = d1.iter().map(|row| dot(row, row)).sum();
    let self2: u64 = d2.iter().map(|row| dot(row, row)).sum();
    Ok(cross as f64 / self1.max(self2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CandidateRecord, Provenance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn record(id: &str, grade: f64, age: u32, gender: &str) -> CandidateRecord {
        let mut r = CandidateRecord::new(id, 2004);
        r.grade = Some(grade);
        r.age = Some(age);
        r.gender = Some(gender.to_string());
        r.diploma = Some("Mathematics".into());
        r.employment = Some("unemployed".into());
        r.job_relevancy = Some("0".into());
        r.field_group = Some("Computer".into());
        r.field = Some("Software".into());
        r
    }

    fn toy_dataset(n: usize) -> Dataset {
        let rows = (0..n)
            .map(|i| {
                record(
                    &format!("r{i}"),
                    10.0 + i as f64,
                    20 + i as u32,
                    if i % 2 == 0 { "female" } else { "male" },
                )
            })
            .collect();
        Dataset::new(rows, Provenance::new("clustsim tests"))
    }

    fn clustering_of(ds: &Dataset, k: usize, assignment: Vec<usize>) -> Clustering {
        Clustering::from_assignment(ds, &["gender".to_string()], k, assignment).unwrap()
    }

    #[test]
    fn rand_and_jaccard_match_the_three_row_example() {
        let ds = toy_dataset(3);
        let c1 = clustering_of(&ds, 2, vec![0, 0, 1]);
        let c2 = clustering_of(&ds, 2, vec![0, 1, 1]);
        let p = pair_counts(&c1, &c2).unwrap();
        assert_eq!(p, PairCounts { a: 0, b: 1, c: 1, d: 1 });
        assert_eq!(rand_index(&c1, &c2).unwrap(), 1.0 / 3.0);
        assert_eq!(jaccard_index(&c1, &c2).unwrap(), 0.0);
    }

    #[test]
    fn identical_clusterings_score_one() {
        let ds = toy_dataset(6);
        let c1 = clustering_of(&ds, 3, vec![0, 0, 1, 1, 2, 2]);
        let c2 = clustering_of(&ds, 3, vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(rand_index(&c1, &c2).unwrap(), 1.0);
        assert_eq!(jaccard_index(&c1, &c2).unwrap(), 1.0);
        assert_eq!(adco(&c1, &c2, &ds, ADCO_BINS).unwrap(), 1.0);
    }

    #[test]
    fn all_singletons_hit_the_jaccard_convention() {
        let ds = toy_dataset(4);
        let c1 = clustering_of(&ds, 4, vec![0, 1, 2, 3]);
        let c2 = clustering_of(&ds, 4, vec![3, 2, 1, 0]);
        assert_eq!(jaccard_index(&c1, &c2).unwrap(), 1.0);
        assert_eq!(rand_index(&c1, &c2).unwrap(), 1.0);
    }

    #[test]
    fn relabeling_changes_nothing() {
        let ds = toy_dataset(8);
        let assignment = vec![0, 1, 2, 0, 1, 2, 0, 1];
        let relabeled: Vec<usize> = assignment.iter().map(|&c| [2, 0, 1][c]).collect();
        let c1 = clustering_of(&ds, 3, assignment);
        let c2 = clustering_of(&ds, 3, vec![0, 0, 1, 1, 2, 2, 0, 1]);
        let c1r = clustering_of(&ds, 3, relabeled);
        assert_eq!(rand_index(&c1, &c2).unwrap(), rand_index(&c1r, &c2).unwrap());
        assert_eq!(
            jaccard_index(&c1, &c2).unwrap(),
            jaccard_index(&c1r, &c2).unwrap()
        );
        assert_eq!(
            adco(&c1, &c2, &ds, 4).unwrap(),
            adco(&c1r, &c2, &ds, 4).unwrap()
        );
    }

    #[test]
    fn mismatched_rows_are_rejected() {
        let ds1 = toy_dataset(4);
        let ds2 = toy_dataset(5);
        let c1 = clustering_of(&ds1, 2, vec![0, 0, 1, 1]);
        let c2 = clustering_of(&ds2, 2, vec![0, 0, 1, 1, 1]);
        assert!(matches!(rand_index(&c1, &c2), Err(Error::Mismatch(_))));
        assert!(matches!(adco(&c1, &c2, &ds1, 4), Err(Error::Mismatch(_))));
    }

    #[test]
    fn single_row_pairs_are_an_error() {
        let ds = toy_dataset(1);
        let c1 = clustering_of(&ds, 1, vec![0]);
        let c2 = clustering_of(&ds, 1, vec![0]);
        assert!(matches!(pair_counts(&c1, &c2), Err(Error::Mismatch(_))));
    }

    // O(n^2) oracle: count the four pair classes by walking every row pair.
    fn oracle_counts(a1: &[usize], a2: &[usize]) -> PairCounts {
        let mut p = PairCounts { a: 0, b: 0, c: 0, d: 0 };
        for i in 0..a1.len() {
            for j in i + 1..a1.len() {
                match (a1[i] == a1[j], a2[i] == a2[j]) {
                    (true, true) => p.a += 1,
                    (true, false) => p.b += 1,
                    (false, true) => p.c += 1,
                    (false, false) => p.d += 1,
                }
            }
        }
        p
    }

    #[test]
    fn pair_counts_match_the_quadratic_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..60 {
            let n = rng.random_range(2..=60);
            let k1 = rng.random_range(1..=5);
            let k2 = rng.random_range(1..=5);
            let ds = toy_dataset(n);
            let a1: Vec<usize> = (0..n).map(|_| rng.random_range(0..k1)).collect();
            let a2: Vec<usize> = (0..n).map(|_| rng.random_range(0..k2)).collect();
            let c1 = clustering_of(&ds, k1, a1.clone());
            let c2 = clustering_of(&ds, k2, a2.clone());
            let fast = pair_counts(&c1, &c2).unwrap();
            let slow = oracle_counts(&a1, &a2);
            assert_eq!(fast, slow, "case {case}");
            assert_eq!(fast.total(), (n as u64) * (n as u64 - 1) / 2);
        }
    }

    #[test]
    fn indices_are_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        for _ in 0..30 {
            let n = rng.random_range(2..=40);
            let k1 = rng.random_range(1..=4);
            let k2 = rng.random_range(1..=4);
            let ds = toy_dataset(n);
            let c1 = clustering_of(&ds, k1, (0..n).map(|_| rng.random_range(0..k1)).collect());
            let c2 = clustering_of(&ds, k2, (0..n).map(|_| rng.random_range(0..k2)).collect());
            let r = rand_index(&c1, &c2).unwrap();
            let j = jaccard_index(&c1, &c2).unwrap();
            let a = adco(&c1, &c2, &ds, 5).unwrap();
            assert_eq!(r, rand_index(&c2, &c1).unwrap());
            assert_eq!(j, jaccard_index(&c2, &c1).unwrap());
            assert_eq!(a, adco(&c2, &c1, &ds, 5).unwrap());
            assert!((0.0..=1.0).contains(&r));
            assert!((0.0..=1.0).contains(&j));
            assert!(a > 0.0 && a <= 1.0, "adco {a} out of (0, 1]");
        }
    }

    #[test]
    fn whole_dataset_single_cluster_adco_is_one() {
        let ds = toy_dataset(5);
        let c1 = clustering_of(&ds, 1, vec![0; 5]);
        let c2 = clustering_of(&ds, 1, vec![0; 5]);
        assert_eq!(adco(&c1, &c2, &ds, 3).unwrap(), 1.0);
    }

    #[test]
    fn adco_matches_a_hand_checked_two_cluster_case() {
        // four rows, two 2-cluster clusterings differing on row 3's side
        let ds = toy_dataset(4);
        let c1 = clustering_of(&ds, 2, vec![0, 0, 1, 1]);
        let c2 = clustering_of(&ds, 2, vec![0, 0, 0, 1]);
        let got = adco(&c1, &c2, &ds, 2).unwrap();
        // brute force from scratch: per-attribute histograms per cluster
        let hist = |members: &[usize]| -> Vec<u64> {
            // bins: grade {10..11.5, ..13}, age {20..21.5, ..23}, gender {f,m},
            // plus one single-level bin per constant categorical attribute
            let mut h = vec![0u64; 2 + 2 + 2 + 5];
            for &i in members {
                let grade = 10.0 + i as f64;
                let age = 20.0 + i as f64;
                h[if grade < 11.5 { 0 } else { 1 }] += 1;
                h[2 + if age < 21.5 { 0 } else { 1 }] += 1;
                h[4 + i % 2] += 1;
                for attr in 0..5 {
                    h[6 + attr] += 1;
                }
            }
            h
        };
        let p1 = [hist(&[0, 1]), hist(&[2, 3])];
        let p2 = [hist(&[0, 1, 2]), hist(&[3])];
        let dot = |x: &[u64], y: &[u64]| x.iter().zip(y).map(|(&a, &b)| a * b).sum::<u64>();
        let cross_identity = dot(&p1[0], &p2[0]) + dot(&p1[1], &p2[1]);
        let cross_swapped = dot(&p1[0], &p2[1]) + dot(&p1[1], &p2[0]);
        let cross = cross_identity.max(cross_swapped);
        let self1 = dot(&p1[0], &p1[0]) + dot(&p1[1], &p1[1]);
        let self2 = dot(&p2[0], &p2[0]) + dot(&p2[1], &p2[1]);
        let expected = cross as f64 / self1.max(self2) as f64;
        assert_eq!(got, expected);
        assert!(got < 1.0);
    }

    #[test]
    fn cluster_count_mismatch_pads_with_empty_clusters() {
        let ds = toy_dataset(6);
        let c1 = clustering_of(&ds, 3, vec![0, 0, 1, 1, 2, 2]);
        let c2 = clustering_of(&ds, 2, vec![0, 0, 1, 1, 1, 1]);
        let a = adco(&c1, &c2, &ds, 4).unwrap();
        assert!(a > 0.0 && a < 1.0);
        assert_eq!(a, adco(&c2, &c1, &ds, 4).unwrap());
    }

    #[test]
    fn hungarian_agrees_with_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        for _ in 0..40 {
            let k = rng.random_range(2..=7);
            let w: Vec<Vec<u64>> = (0..k)
                .map(|_| (0..k).map(|_| rng.random_range(0..1000)).collect())
                .collect();
            assert_eq!(exhaustive_alignment(&w), hungarian_alignment(&w));
        }
    }

    #[test]
    fn large_k_takes_the_assignment_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        let n = 80;
        let k = 9;
        let ds = toy_dataset(n);
        let c1 = clustering_of(&ds, k, (0..n).map(|_| rng.random_range(0..k)).collect());
        let c2 = clustering_of(&ds, k, (0..n).map(|_| rng.random_range(0..k)).collect());
        let a = adco(&c1, &c2, &ds, 4).unwrap();
        assert!(a > 0.0 && a <= 1.0);
        assert_eq!(adco(&c1, &c1, &ds, 4).unwrap(), 1.0);
    }

    #[test]
    fn zero_bins_is_a_config_error() {
        let ds = toy_dataset(4);
        let c = clustering_of(&ds, 2, vec![0, 0, 1, 1]);
        assert!(matches!(adco(&c, &c, &ds, 0), Err(Error::Config(_))));
    }
}
