//! Levelwise mining of class association rules.
//!
//! Items are (attribute, value) pairs of the categorical table, excluding
//! the target column. The search grows left-hand sides one item per level,
//! keeping a condition set only while at least one target value co-occurs
//! often enough; the downward-closure prune discards any candidate with an
//! infrequent subset before counting. Counting is exact integer work, so
//! support and confidence are plain quotients of row counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use std::collections::HashSet;

use crate::data::CatTable;
use crate::error::{Error, Result};

use super::rule::{MineParams, Pred, Rule, RuleOrigin, RuleSet};

/// One mineable item: a value of a non-target attribute. Item ids are dense
/// and ordered by (attribute index, value), so sorted id lists line up with
/// the lexicographic order the join step relies on.
struct ItemSpace {
    /// `(attr index in the table, value)` per item id.
    items: Vec<(usize, String)>,
    /// Sorted item ids per row.
    rows: Vec<Vec<u32>>,
    /// Target level index per row.
    row_target: Vec<u32>,
    /// Distinct target values, sorted.
    target_levels: Vec<String>,
}

impl ItemSpace {
    fn build(table: &CatTable, target_idx: usize) -> ItemSpace {
        let mut items = Vec::new();
        let mut row_of_attr: Vec<Vec<u32>> = vec![Vec::new(); table.len()];
        for (j, _) in table.attrs.iter().enumerate() {
            if j == target_idx {
                continue;
            }
            let levels = table.levels(j);
            let base = items.len();
            for (r, row) in table.rows.iter().enumerate() {
                let pos = levels
                    .binary_search_by(|l| l.as_str().cmp(row[j].as_str()))
                    .expect("level list covers every row value");
                row_of_attr[r].push((base + pos) as u32);
            }
            items.extend(levels.into_iter().map(|v| (j, v)));
        }
        let target_levels = table.levels(target_idx);
        let row_target = table
            .rows
            .iter()
            .map(|row| {
                target_levels
                    .binary_search_by(|l| l.as_str().cmp(row[target_idx].as_str()))
                    .expect("level list covers every row value") as u32
            })
            .collect();
        // per-attribute blocks are appended in attribute order and each block
        // is sorted, so every row's item list is already sorted
        ItemSpace {
            items,
            rows: row_of_attr,
            row_target,
            target_levels,
        }
    }

    fn attr_of(&self, item: u32) -> usize {
        self.items[item as usize].0
    }
}

/// Joint counts of one candidate condition set.
struct CandCounts {
    /// Rows matching the whole lhs.
    lhs: u64,
    /// Rows matching lhs with each target level.
    joint: Vec<u64>,
}

fn is_subset(candidate: &[u32], row: &[u32]) -> bool {
    let mut it = row.iter();
    'outer: for want in candidate {
        for have in it.by_ref() {
            if have == want {
                continue 'outer;
            }
            if have > want {
                return false;
            }
        }
        return false;
    }
    true
}

fn count_one(space: &ItemSpace, candidate: &[u32]) -> CandCounts {
    let mut lhs = 0u64;
    let mut joint = vec![0u64; space.target_levels.len()];
    for (row, &t) in space.rows.iter().zip(&space.row_target) {
        if is_subset(candidate, row) {
            lhs += 1;
            joint[t as usize] += 1;
        }
    }
    CandCounts { lhs, joint }
}

/// Counts every candidate of one level. The parallel lane maps candidates
/// independently and collects in order, so both lanes produce identical
/// output.
fn count_level(space: &ItemSpace, candidates: &[Vec<u32>]) -> Vec<CandCounts> {
    #[cfg(feature = "parallel")]
    {
        candidates.par_iter().map(|c| count_one(space, c)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        candidates.iter().map(|c| count_one(space, c)).collect()
    }
}

/// Candidates one item longer, from sorted frequent sets of the last level.
/// Two sets sharing all but their largest item join; the result survives
/// only if its items span distinct attributes and every one-shorter subset
/// is frequent.
fn grow_candidates(
    space: &ItemSpace,
    frequent: &[Vec<u32>],
    frequent_lookup: &HashSet<Vec<u32>>,
) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for i in 0..frequent.len() {
        for j in (i + 1)..frequent.len() {
            let (a, b) = (&frequent[i], &frequent[j]);
            let len = a.len();
            if a[..len - 1] != b[..len - 1] {
                // frequent sets are sorted lexicographically, so no later b
                // shares this prefix either
                break;
            }
            debug_assert!(a[len - 1] < b[len - 1]);
            if space.attr_of(a[len - 1]) == space.attr_of(b[len - 1]) {
                continue;
            }
            let mut candidate = a.clone();
            candidate.push(b[len - 1]);
            let all_subsets_frequent = (0..candidate.len()).all(|drop| {
                let mut subset = candidate.clone();
                subset.remove(drop);
                frequent_lookup.contains(&subset)
            });
            if all_subsets_frequent {
                out.push(candidate);
            }
        }
    }
    out
}

/// Mines every rule `lhs -> target=value` meeting both thresholds, with the
/// lhs capped at `max_lhs_len` items.
///
/// Support is `count(lhs and rhs) / N`, confidence is
/// `count(lhs and rhs) / count(lhs)`; a rule needs a nonzero joint count
/// even under zero thresholds. The returned set carries the majority target
/// value as its default class.
pub fn mine_rules(table: &CatTable, target: &str, params: &MineParams) -> Result<RuleSet> {
    params.validate()?;
    if table.is_empty() {
        return Err(Error::Model("cannot mine an empty dataset".into()));
    }
    let target_idx = table
        .attr_index(target)
        .ok_or_else(|| Error::Model(format!("target attribute {target} not in the table")))?;

    let space = ItemSpace::build(table, target_idx);
    let n = table.len() as u64;
    let meets_support = |joint: u64| joint >= 1 && joint as f64 / n as f64 >= params.min_support;

    let mut rules = Vec::new();
    let mut candidates: Vec<Vec<u32>> = (0..space.items.len() as u32).map(|i| vec![i]).collect();
    for _level in 1..=params.max_lhs_len {
        if candidates.is_empty() {
            break;
        }
        let counts = count_level(&space, &candidates);
        let mut frequent = Vec::new();
        for (candidate, count) in candidates.iter().zip(&counts) {
            if !count.joint.iter().any(|&j| meets_support(j)) {
                continue;
            }
            debug_assert!(count.joint.iter().sum::<u64>() == count.lhs);
            for (t, &joint) in count.joint.iter().enumerate() {
                if !meets_support(joint) {
                    continue;
                }
                let confidence = joint as f64 / count.lhs as f64;
                if confidence < params.min_confidence {
                    continue;
                }
                let lhs = candidate
                    .iter()
                    .map(|&item| {
                        let (attr, value) = &space.items[item as usize];
                        Pred::eq(table.attrs[*attr].clone(), value.clone())
                    })
                    .collect::<Result<Vec<_>>>()?;
                rules.push(Rule::new(
                    lhs,
                    target,
                    space.target_levels[t].clone(),
                    joint as f64 / n as f64,
                    confidence,
                    RuleOrigin::Mined,
                )?);
            }
            frequent.push(candidate.clone());
        }
        let lookup: HashSet<Vec<u32>> = frequent.iter().cloned().collect();
        candidates = grow_candidates(&space, &frequent, &lookup);
    }

    let (default_class, majority) = majority_target(&space, n);
    RuleSet::new(rules, default_class, majority as f64 / n as f64, Some(*params))
}

/// Most frequent target value; ties go to the lexically smallest level.
fn majority_target(space: &ItemSpace, n: u64) -> (String, u64) {
    let mut counts = vec![0u64; space.target_levels.len()];
    for &t in &space.row_target {
        counts[t as usize] += 1;
    }
    let best = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("nonempty table has target levels");
    debug_assert!(counts.iter().sum::<u64>() == n);
    (space.target_levels[best.0].clone(), *best.1)
}
