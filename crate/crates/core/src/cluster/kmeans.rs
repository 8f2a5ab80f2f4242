//! K-means over the standardized one-hot embedding.
//!
//! Lloyd iteration with seeded farthest-first initialization. Everything is
//! deterministic: ties in assignment break to the lowest center index, ties
//! in initialization to the lowest row index, and center sums accumulate in
//! row order, so results are bit-identical run to run (and, under the
//! `parallel` feature, for any worker count).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};

use super::encode::FeatureSpace;
use super::Clustering;

/// Parameters for [`kmeans`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on squared center movement.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> KMeansParams {
        KMeansParams {
            k: 3,
            seed: 0,
            max_iter: 100,
            tol: 1e-9,
        }
    }
}

/// Result of the numeric Lloyd iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct LloydOutcome {
    pub assignment: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances at convergence.
    pub objective: f64,
    /// Objective after each iteration; never increases.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Empty-cluster repairs performed (each reseeds one center on the
    /// farthest point).
    pub repairs: usize,
}

/// K-means outcome at the dataset level.
#[derive(Clone, Debug)]
pub struct KMeansOutcome {
    pub clustering: Clustering,
    pub lloyd: LloydOutcome,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest-center index per point, ties to the lowest index.
#[doc(hidden)]
pub fn assign_seq(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centers).0).collect()
}

/// Parallel lane of [`assign_seq`]; same output for any worker count.
#[cfg(feature = "parallel")]
#[doc(hidden)]
pub fn assign_par(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    points.par_iter().map(|p| nearest(p, centers).0).collect()
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    #[cfg(feature = "parallel")]
    {
        assign_par(points, centers)
    }
    #[cfg(not(feature = "parallel"))]
    {
        assign_seq(points, centers)
    }
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    (best, best_d)
}

/// Farthest-first initialization: a seeded random first row, then k-1 rows
/// each maximizing the distance to the nearest already chosen row. Returns
/// distinct row indices; ties break to the lowest index.
pub fn farthest_first_init(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    assert!(k >= 1 && k <= points.len(), "k out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..points.len());
    let mut chosen = vec![first];
    let mut taken = vec![false; points.len()];
    taken[first] = true;
    let mut min_dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while chosen.len() < k {
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in min_dist.iter().enumerate() {
            if !taken[i] && d > best_d {
                best = i;
                best_d = d;
            }
        }
        taken[best] = true;
        chosen.push(best);
        for (i, d) in min_dist.iter_mut().enumerate() {
            let nd = sq_dist(&points[i], &points[best]);
            if nd < *d {
                *d = nd;
            }
        }
    }
    chosen
}

/// Lloyd iteration from explicit initial centers.
///
/// Repairs empty clusters by reseeding them on the point farthest from its
/// assigned center (skipping singleton donors), which keeps every cluster
/// nonempty and the objective non-increasing.
pub fn lloyd(
    points: &[Vec<f64>],
    init_centers: Vec<Vec<f64>>,
    max_iter: usize,
    tol: f64,
) -> LloydOutcome {
    let n = points.len();
    let k = init_centers.len();
    assert!(k >= 1 && k <= n, "k out of range");
    let dim = init_centers[0].len();

    let mut centers = init_centers;
    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut repairs = 0;
    let mut iterations = 0;

    for iter in 1..=max_iter {
        iterations = iter;
        let new_assignment = assign(points, &centers);
        let mut changed = new_assignment != assignment;
        assignment = new_assignment;

        // Reseed empty clusters on the globally farthest point.
        let mut sizes = vec![0usize; k];
        for &a in &assignment {
            sizes[a] += 1;
        }
        for c in 0..k {
            while sizes[c] == 0 {
                let mut far = usize::MAX;
                let mut far_d = f64::NEG_INFINITY;
                for (i, &a) in assignment.iter().enumerate() {
                    if sizes[a] > 1 {
                        let d = sq_dist(&points[i], &centers[a]);
                        if d > far_d {
                            far = i;
                            far_d = d;
                        }
                    }
                }
                let donor = assignment[far];
                sizes[donor] -= 1;
                assignment[far] = c;
                sizes[c] += 1;
                repairs += 1;
                changed = true;
            }
        }

        // New centers: means accumulated in row order.
        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &a) in points.iter().zip(&assignment) {
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            for s in sums[c].iter_mut() {
                *s /= sizes[c] as f64;
            }
            shift = shift.max(sq_dist(&sums[c], &centers[c]));
            centers[c] = std::mem::take(&mut sums[c]);
        }

        let objective: f64 = points
            .iter()
            .zip(&assignment)
            .map(|(p, &a)| sq_dist(p, &centers[a]))
            .sum();
        trace.push(objective);

        if !changed || shift <= tol {
            break;
        }
    }

    LloydOutcome {
        objective: *trace.last().expect("at least one iteration"),
        assignment,
        centers,
        objective_trace: trace,
        iterations,
        repairs,
    }
}

/// K-means on a dataset: fit the feature space, embed, initialize
/// farthest-first from the seed, iterate, and package the result as a
/// [`Clustering`].
pub fn kmeans(ds: &Dataset, features: &[String], params: KMeansParams) -> Result<KMeansOutcome> {
    if params.k < 1 {
        return Err(Error::Cluster("k must be at least 1".into()));
    }
    if params.k > ds.len() {
        return Err(Error::Cluster(format!(
            "k = {} exceeds the {} rows available",
            params.k,
            ds.len()
        )));
    }
    let space = FeatureSpace::build(ds, features)?;
    let points = space.encode_dataset(ds)?;
    let init: Vec<Vec<f64>> = farthest_first_init(&points, params.k, params.seed)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    let lloyd = lloyd(&points, init, params.max_iter, params.tol);
    let clustering = Clustering::from_assignment(ds, features, params.k, lloyd.assignment.clone())?;
    Ok(KMeansOutcome { clustering, lloyd })
}
