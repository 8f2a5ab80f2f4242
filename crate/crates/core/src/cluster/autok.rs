//! Automatic cluster-count selection from a merge trace.
//!
//! Two-stage rule over the recorded BIC and merge distances, plus two
//! guards. Stage one walks BIC improvement ratios
//! `R1(k) = (BIC(k) - BIC(k+1)) / (BIC(1) - BIC(2))` and takes the smallest
//! k where R1 drops below `bic_ratio` as a coarse ceiling. Stage two scores
//! every candidate `k` at or below the ceiling by the merge-distance jump
//! `R2(k) = d(k -> k-1) / d(k+1 -> k)`; the top candidate wins outright when
//! it beats the runner-up by more than `dist_ratio`, otherwise the larger of
//! the two k values is taken. The guards handle the no-structure case, which
//! the ratio stages cannot see: if one cluster already has the best BIC, or
//! no candidate shows a distance jump of at least `min_structure`, the
//! answer is 1. Homogeneous data produces only mild jumps, under 3 in
//! calibration sweeps over uniform and bell-shaped cohorts, because every
//! split of a blob looks like every other; well separated cohorts produce
//! winning jumps of 6 and up. The default threshold sits between the bands.

use super::agglomerate::MergeTrace;

/// Thresholds for [`auto_k`]. The defaults are the calibrated operating
/// point; they are exposed for sensitivity runs, not tuning per dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutoKParams {
    /// Stage-one cutoff on the BIC improvement ratio.
    pub bic_ratio: f64,
    /// Stage-two dominance factor over the runner-up.
    pub dist_ratio: f64,
    /// Minimum winning distance jump for any structure at all.
    pub min_structure: f64,
}

impl Default for AutoKParams {
    fn default() -> AutoKParams {
        AutoKParams {
            bic_ratio: 0.04,
            dist_ratio: 1.15,
            min_structure: 4.0,
        }
    }
}

/// Picks the cluster count for a merge trace, capped at `max_k`.
pub fn auto_k(trace: &MergeTrace, max_k: usize, params: &AutoKParams) -> usize {
    let cap = max_k.min(trace.start_k);
    if cap <= 1 {
        return 1;
    }
    let bic = |k: usize| trace.bic(k).expect("trace covers 1..=start_k");

    let denom = bic(1) - bic(2);
    if denom <= 0.0 {
        // one cluster is already the best description
        return 1;
    }

    // stage one: coarse ceiling where BIC improvement fades
    let mut ceiling = cap;
    for k in 1..cap {
        let r1 = (bic(k) - bic(k + 1)) / denom;
        if r1 < params.bic_ratio {
            ceiling = k;
            break;
        }
    }
    if ceiling <= 1 {
        return 1;
    }

    // stage two: merge-distance jumps over candidates 2..=ceiling
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for k in 2..=ceiling {
        let Some(num) = trace.merge_distance_into(k - 1) else { continue };
        let Some(den) = trace.merge_distance_into(k) else { continue };
        let r2 = if num <= 0.0 {
            0.0
        } else if den <= 0.0 {
            f64::INFINITY
        } else {
            num / den
        };
        candidates.push((k, r2));
    }
    if candidates.is_empty() {
        return ceiling;
    }
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("no NaN ratios"));
    let (win_k, win_r2) = candidates[0];
    if win_r2 < params.min_structure {
        // no pronounced jump anywhere: treat as homogeneous
        return 1;
    }
    match candidates.get(1) {
        None => win_k,
        Some(&(run_k, run_r2)) => {
            let dominates = if win_r2.is_infinite() && run_r2.is_infinite() {
                false
            } else if run_r2 <= 0.0 {
                true
            } else {
                win_r2 / run_r2 > params.dist_ratio
            };
            if dominates {
                win_k
            } else {
                win_k.max(run_k)
            }
        }
    }
}
