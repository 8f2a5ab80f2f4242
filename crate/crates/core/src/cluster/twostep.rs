//! Two-phase clustering: hierarchical merging plus automatic k selection.
//!
//! Phase one reduces the data to a merge trace (from singletons, or from
//! seeded micro-clusters once the row count passes a threshold, which keeps
//! the quadratic merge affordable). Phase two picks k from the trace, cuts
//! the tree there, freezes the cut's cluster statistics, and assigns every
//! row to its closest cluster under the log-likelihood distance.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::Result;

use super::agglomerate::{agglomerate_stats, MergeTrace};
use super::autok::{auto_k, AutoKParams};
use super::encode::FeatureSpace;
use super::kmeans::{farthest_first_init, lloyd};
use super::stats::{merged_xi, ClusterStats};
use super::Clustering;

/// Parameters for [`twostep`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoStepParams {
    /// Upper bound on the selected k.
    pub max_k: usize,
    pub autok: AutoKParams,
    /// Row count above which merging starts from micro-clusters.
    pub micro_threshold: usize,
    /// Number of micro-clusters to pre-group into.
    pub micro_k: usize,
    /// Seed for the micro-cluster pre-grouping.
    pub seed: u64,
}

impl Default for TwoStepParams {
    fn default() -> TwoStepParams {
        TwoStepParams {
            max_k: 15,
            autok: AutoKParams::default(),
            micro_threshold: 5000,
            micro_k: 200,
            seed: 0,
        }
    }
}

/// Result of [`twostep`].
#[derive(Clone, Debug)]
pub struct TwoStepOutcome {
    pub clustering: Clustering,
    pub trace: MergeTrace,
    pub k: usize,
    /// Micro-cluster count when pre-grouping kicked in.
    pub micro: Option<usize>,
}

/// Runs the full two-phase procedure and returns the clustering with its
/// merge trace. Deterministic for fixed inputs and parameters.
pub fn twostep(ds: &Dataset, features: &[String], params: &TwoStepParams) -> Result<TwoStepOutcome> {
    let space = FeatureSpace::build(ds, features)?;
    let n = ds.len();

    // phase one input: singletons, or micro-clusters for large n
    let (start_stats, micro) = if n > params.micro_threshold {
        let k = params.micro_k.min(n).max(1);
        let points = space.encode_dataset(ds)?;
        let init: Vec<Vec<f64>> = farthest_first_init(&points, k, params.seed)
            .into_iter()
            .map(|i| points[i].clone())
            .collect();
        let grouping = lloyd(&points, init, 50, 1e-6);
        let mut stats = vec![ClusterStats::zero(&space); k];
        for (rec, &c) in ds.rows.iter().zip(&grouping.assignment) {
            stats[c].push_record(&space, rec)?;
        }
        (stats, Some(k))
    } else {
        let stats = ds
            .rows
            .iter()
            .map(|r| ClusterStats::from_record(&space, r))
            .collect::<Result<Vec<_>>>()?;
        (stats, None)
    };

    let trace = agglomerate_stats(&space, start_stats.clone())?;
    let k = auto_k(&trace, params.max_k, &params.autok);

    // cut the tree and freeze the cut's statistics
    let slot_labels = trace.partition_at(k)?;
    let mut cut_stats = vec![ClusterStats::zero(&space); k];
    for (slot, &label) in slot_labels.iter().enumerate() {
        cut_stats[label].add(&start_stats[slot]);
    }
    let cut_xi: Vec<f64> = cut_stats.iter().map(|s| s.xi(&space)).collect();

    // final pass: closest frozen cluster per row, ties to the lowest label
    let assign_row = |rec: &crate::data::CandidateRecord| -> Result<usize> {
        let row = ClusterStats::from_record(&space, rec)?;
        let row_xi = row.xi(&space);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, stats) in cut_stats.iter().enumerate() {
            let d = (row_xi + cut_xi[c] - merged_xi(&row, stats, &space)).max(0.0);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        Ok(best)
    };
    #[cfg(feature = "parallel")]
    let assignment: Vec<usize> = ds.rows.par_iter().map(assign_row).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let assignment: Vec<usize> = ds.rows.iter().map(assign_row).collect::<Result<_>>()?;

    // reassignment can drain a cut cluster dry; renumber densely if so
    let mut seen = vec![false; k];
    for &a in &assignment {
        seen[a] = true;
    }
    let (k_final, assignment) = if seen.iter().all(|&s| s) {
        (k, assignment)
    } else {
        let mut remap = vec![usize::MAX; k];
        let mut next = 0;
        for (c, &s) in seen.iter().enumerate() {
            if s {
                remap[c] = next;
                next += 1;
            }
        }
        (next, assignment.into_iter().map(|a| remap[a]).collect())
    };

    let clustering = Clustering::from_assignment(ds, features, k_final, assignment)?;
    Ok(TwoStepOutcome {
        clustering,
        trace,
        k: k_final,
        micro,
    })
}


#[cfg(test)]
mod probe {
    use super::*;
    use crate::synth::{default_mixture, generate_cohort, BandProb, ComponentSpec, MixtureSpec};

    fn trace_for(spec: &MixtureSpec, n: usize, seed: u64) -> MergeTrace {
        let feats: Vec<String> = ["age", "gender", "grade", "employment", "job_relevancy"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (ds, _) = generate_cohort(spec, n, seed, 2004).unwrap();
        let space = FeatureSpace::build(&ds, &feats).unwrap();
        let stats: Vec<_> = ds
            .rows
            .iter()
            .map(|r| ClusterStats::from_record(&space, r).unwrap())
            .collect();
        agglomerate_stats(&space, stats).unwrap()
    }

    fn diag(trace: &MergeTrace, tag: &str) {
        let b1 = trace.bic(1).unwrap();
        let b2 = trace.bic(2).unwrap();
        let denom = b1 - b2;
        print!("{tag}: denom={denom:.0} R1=[");
        for k in 1..8.min(trace.start_k) {
            let r1 = (trace.bic(k).unwrap() - trace.bic(k + 1).unwrap()) / denom;
            print!("{r1:.3} ");
        }
        print!("] R2=[");
        let mut best = (0usize, 0.0f64);
        for k in 2..=8.min(trace.start_k) {
            let num = trace.merge_distance_into(k - 1);
            let den = trace.merge_distance_into(k);
            if let (Some(nu), Some(de)) = (num, den) {
                let r = nu / de;
                if r > best.1 {
                    best = (k, r);
                }
                print!("k{k}:{r:.2} ");
            }
        }
        println!("] winner k={} r={:.2}", best.0, best.1);
    }

    fn uniform_blob() -> MixtureSpec {
        MixtureSpec {
            rng: "chacha8".into(),
            components: vec![ComponentSpec {
                weight: 1.0,
                age: vec![BandProb { lo: 17.0, hi: 59.0, p: 1.0 }],
                grade: vec![BandProb { lo: 0.0, hi: 20.0, p: 1.0 }],
                ..default_mixture().components[0].clone()
            }],
        }
    }

    fn gaussian_blob() -> MixtureSpec {
        // bell-shaped piecewise bands around age 30 (sd ~5) and grade 13 (sd ~2),
        // categoricals moderately mixed like a survey population
        let age = vec![
            BandProb { lo: 17.0, hi: 23.0, p: 0.07 },
            BandProb { lo: 23.0, hi: 28.0, p: 0.24 },
            BandProb { lo: 28.0, hi: 33.0, p: 0.38 },
            BandProb { lo: 33.0, hi: 38.0, p: 0.24 },
            BandProb { lo: 38.0, hi: 44.0, p: 0.07 },
        ];
        let grade = vec![
            BandProb { lo: 9.0, hi: 11.0, p: 0.07 },
            BandProb { lo: 11.0, hi: 12.5, p: 0.24 },
            BandProb { lo: 12.5, hi: 14.0, p: 0.38 },
            BandProb { lo: 14.0, hi: 15.5, p: 0.24 },
            BandProb { lo: 15.5, hi: 17.5, p: 0.07 },
        ];
        MixtureSpec {
            rng: "chacha8".into(),
            components: vec![ComponentSpec {
                weight: 1.0,
                p_female: 0.4,
                p_employed: 0.3,
                relevancy: [0.7, 0.2, 0.1],
                age,
                grade,
                ..default_mixture().components[0].clone()
            }],
        }
    }

    #[test]
    #[ignore]
    fn probe_structure_ratios() {
        for seed in 1u64..=10 {
            diag(&trace_for(&default_mixture(), 900, seed), &format!("mix      n900  s{seed:02}"));
        }
        for seed in 1u64..=10 {
            diag(&trace_for(&uniform_blob(), 900, seed), &format!("uni-blob n900  s{seed:02}"));
        }
        for seed in 1u64..=10 {
            diag(&trace_for(&gaussian_blob(), 900, seed), &format!("gau-blob n900  s{seed:02}"));
        }
        for seed in 1u64..=3 {
            diag(&trace_for(&default_mixture(), 3000, seed), &format!("mix      n3000 s{seed:02}"));
        }
        for seed in 1u64..=3 {
            diag(&trace_for(&gaussian_blob(), 3000, seed), &format!("gau-blob n3000 s{seed:02}"));
        }
    }
}
