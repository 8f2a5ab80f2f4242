//! Information-gain decision tree over the categorical table.
//!
//! Splits are multiway: one child per observed value of the chosen
//! attribute, so an attribute can appear at most once on any root-to-leaf
//! path. Gain is entropy reduction in natural log units. Every stopping
//! rule and tie-break is deterministic, and each leaf doubles as a rule:
//! path conditions imply the leaf majority class.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::CatTable;
use crate::error::{Error, Result};

use super::rule::{Pred, Rule, RuleOrigin, RuleSet};

/// Stopping parameters for [`train_tree`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum split depth; 0 forces a single leaf.
    pub max_depth: usize,
    /// Minimum rows in every child a split creates.
    pub min_leaf: usize,
    /// Minimum information gain for a split to happen.
    pub min_gain: f64,
}

impl Default for TreeParams {
    fn default() -> TreeParams {
        TreeParams {
            max_depth: 8,
            min_leaf: 1,
            min_gain: 1e-6,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf < 1 {
            return Err(Error::Config("min_leaf must be at least 1".into()));
        }
        if !self.min_gain.is_finite() || self.min_gain < 0.0 {
            return Err(Error::Config(format!(
                "min_gain {} must be finite and nonnegative",
                self.min_gain
            )));
        }
        Ok(())
    }
}

/// One tree node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Class counts of the training rows that reached this leaf, sorted
        /// by class value; they sum to `n`.
        counts: Vec<(String, u64)>,
        /// Most frequent class, ties to the smallest value.
        majority: String,
        n: u64,
    },
    Split {
        attr: String,
        /// One child per observed value, sorted by value.
        children: Vec<(String, Node)>,
        /// Child index holding the most training rows; unseen values at
        /// prediction time route here.
        fallback: usize,
    },
}

impl Node {
    fn n(&self) -> u64 {
        match self {
            Node::Leaf { n, .. } => *n,
            Node::Split { children, .. } => children.iter().map(|(_, c)| c.n()).sum(),
        }
    }

    fn add_class_counts(&self, into: &mut BTreeMap<String, u64>) {
        match self {
            Node::Leaf { counts, .. } => {
                for (class, count) in counts {
                    *into.entry(class.clone()).or_insert(0) += count;
                }
            }
            Node::Split { children, .. } => {
                for (_, child) in children {
                    child.add_class_counts(into);
                }
            }
        }
    }
}

/// A trained tree and what it was trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub target: String,
    pub root: Node,
    pub n_train: u64,
    pub params: TreeParams,
}

/// One routed prediction. `unseen` lists `attribute=value` pairs that had no
/// child and fell back to the largest one, so callers can report them.
#[derive(Clone, Debug, PartialEq)]
pub struct TreePrediction {
    pub class: String,
    pub probability: f64,
    pub unseen: Vec<String>,
}

fn entropy(counts: &BTreeMap<&str, u64>, total: u64) -> f64 {
    let total = total as f64;
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

fn class_counts<'t>(table: &'t CatTable, target_idx: usize, rows: &[usize]) -> BTreeMap<&'t str, u64> {
    let mut counts = BTreeMap::new();
    for &r in rows {
        *counts.entry(table.value(r, target_idx)).or_insert(0) += 1;
    }
    counts
}

fn leaf_of(counts: &BTreeMap<&str, u64>, n: u64) -> Node {
    let majority = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(class, _)| class.to_string())
        .expect("leaf over at least one row");
    Node::Leaf {
        counts: counts.iter().map(|(c, n)| (c.to_string(), *n)).collect(),
        majority,
        n,
    }
}

fn build(table: &CatTable, target_idx: usize, rows: &[usize], depth: usize, params: &TreeParams) -> Node {
    let counts = class_counts(table, target_idx, rows);
    let n = rows.len() as u64;
    if counts.len() == 1 || depth >= params.max_depth {
        return leaf_of(&counts, n);
    }
    let node_entropy = entropy(&counts, n);

    // best admissible split; strict improvement keeps the earliest attribute
    // on gain ties
    let mut best: Option<(f64, usize, BTreeMap<&str, Vec<usize>>)> = None;
    for j in 0..table.attrs.len() {
        if j == target_idx {
            continue;
        }
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for &r in rows {
            groups.entry(table.value(r, j)).or_default().push(r);
        }
        if groups.len() < 2 || groups.values().any(|g| g.len() < params.min_leaf) {
            continue;
        }
        let children_entropy: f64 = groups
            .values()
            .map(|g| {
                let child_counts = class_counts(table, target_idx, g);
                g.len() as f64 / n as f64 * entropy(&child_counts, g.len() as u64)
            })
            .sum();
        let gain = node_entropy - children_entropy;
        if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
            best = Some((gain, j, groups));
        }
    }

    match best {
        Some((gain, j, groups)) if gain >= params.min_gain => {
            let children: Vec<(String, Node)> = groups
                .into_iter()
                .map(|(value, group)| {
                    (value.to_string(), build(table, target_idx, &group, depth + 1, params))
                })
                .collect();
            let fallback = children
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.n().cmp(&b.1 .1.n()).then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .expect("split has children");
            Node::Split {
                attr: table.attrs[j].clone(),
                children,
                fallback,
            }
        }
        _ => leaf_of(&counts, n),
    }
}

/// Trains a tree by recursive top-down induction maximizing information
/// gain. Deterministic: gain ties keep the earlier attribute in table
/// order, and children are ordered by value.
pub fn train_tree(table: &CatTable, target: &str, params: &TreeParams) -> Result<DecisionTree> {
    params.validate()?;
    if table.is_empty() {
        return Err(Error::Model("cannot train a tree on an empty dataset".into()));
    }
    let target_idx = table
        .attr_index(target)
        .ok_or_else(|| Error::Model(format!("target attribute {target} not in the table")))?;
    let rows: Vec<usize> = (0..table.len()).collect();
    let root = build(table, target_idx, &rows, 0, params);
    Ok(DecisionTree {
        target: target.to_string(),
        root,
        n_train: table.len() as u64,
        params: *params,
    })
}

/// Routes a record to its leaf and returns the leaf majority with its
/// fraction, noting any unseen values that took the fallback edge.
pub fn predict_trace(tree: &DecisionTree, record: &[(&str, &str)]) -> Result<TreePrediction> {
    let mut node = &tree.root;
    let mut unseen = Vec::new();
    loop {
        match node {
            Node::Leaf { counts, majority, n } => {
                let majority_count = counts
                    .iter()
                    .find(|(c, _)| c == majority)
                    .map(|(_, k)| *k)
                    .expect("majority is counted");
                return Ok(TreePrediction {
                    class: majority.clone(),
                    probability: majority_count as f64 / *n as f64,
                    unseen,
                });
            }
            Node::Split {
                attr,
                children,
                fallback,
            } => {
                let value = record
                    .iter()
                    .find(|(a, _)| a == attr)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| Error::Model(format!("record lacks attribute {attr}")))?;
                node = match children.binary_search_by(|(v, _)| v.as_str().cmp(value)) {
                    Ok(i) => &children[i].1,
                    Err(_) => {
                        unseen.push(format!("{attr}={value}"));
                        &children[*fallback].1
                    }
                };
            }
        }
    }
}

/// Leaf majority class and fraction for a record.
pub fn predict_tree(tree: &DecisionTree, record: &[(&str, &str)]) -> Result<(String, f64)> {
    let p = predict_trace(tree, record)?;
    Ok((p.class, p.probability))
}

/// One rule per leaf: the path conditions imply the leaf majority, with
/// confidence the majority fraction inside the leaf and support the majority
/// count over all training rows. The set's default class is the overall
/// training majority.
pub fn extract_tree_rules(tree: &DecisionTree) -> Result<RuleSet> {
    fn walk(
        node: &Node,
        path: &mut Vec<Pred>,
        target: &str,
        n_train: u64,
        out: &mut Vec<Rule>,
    ) -> Result<()> {
        match node {
            Node::Leaf { counts, majority, n } => {
                let majority_count = counts
                    .iter()
                    .find(|(c, _)| c == majority)
                    .map(|(_, k)| *k)
                    .expect("majority is counted");
                out.push(Rule::new(
                    path.clone(),
                    target,
                    majority.clone(),
                    majority_count as f64 / n_train as f64,
                    majority_count as f64 / *n as f64,
                    RuleOrigin::Tree,
                )?);
            }
            Node::Split { attr, children, .. } => {
                for (value, child) in children {
                    path.push(Pred::eq(attr.clone(), value.clone())?);
                    walk(child, path, target, n_train, out)?;
                    path.pop();
                }
            }
        }
        Ok(())
    }

    let mut rules = Vec::new();
    let mut path = Vec::new();
    walk(&tree.root, &mut path, &tree.target, tree.n_train, &mut rules)?;

    let mut totals = BTreeMap::new();
    tree.root.add_class_counts(&mut totals);
    let (default_class, majority) = totals
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(c, n)| (c.clone(), *n))
        .expect("trained tree has rows");
    RuleSet::new(rules, default_class, majority as f64 / tree.n_train as f64, None)
}

impl DecisionTree {
    /// Structured serialization.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<DecisionTree> {
        serde_json::from_str(text).map_err(|e| Error::Model(format!("bad tree file: {e}")))
    }

    /// Checks the structural invariants against the training table: every
    /// row routes to exactly one leaf and per-leaf distributions sum to the
    /// leaf count.
    pub fn check(&self, table: &CatTable) -> Result<()> {
        fn check_node(node: &Node) -> Result<()> {
            match node {
                Node::Leaf { counts, majority, n } => {
                    let sum: u64 = counts.iter().map(|(_, c)| *c).sum();
                    if sum != *n {
                        return Err(Error::Model(format!(
                            "leaf distribution sums to {sum}, leaf holds {n}"
                        )));
                    }
                    if !counts.iter().any(|(c, _)| c == majority) {
                        return Err(Error::Model(format!("majority {majority} not in counts")));
                    }
                    Ok(())
                }
                Node::Split { children, fallback, .. } => {
                    if *fallback >= children.len() {
                        return Err(Error::Model("fallback child out of range".into()));
                    }
                    children.iter().try_for_each(|(_, c)| check_node(c))
                }
            }
        }
        check_node(&self.root)?;
        if self.root.n() != self.n_train {
            return Err(Error::Model(format!(
                "leaves hold {} rows, training had {}",
                self.root.n(),
                self.n_train
            )));
        }
        // routing the training rows must fill the leaves exactly; count rows
        // per leaf signature (the path is unique per leaf)
        let mut routed = 0u64;
        for i in 0..table.len() {
            let pairs: Vec<(&str, &str)> = table.row_pairs(i).collect();
            let p = predict_trace(self, &pairs)?;
            if !p.unseen.is_empty() {
                return Err(Error::Model(format!(
                    "training row {i} took a fallback edge: {}",
                    p.unseen.join(", ")
                )));
            }
            routed += 1;
        }
        if routed != self.n_train {
            return Err(Error::Model("training rows do not route cleanly".into()));
        }
        Ok(())
    }
}

fn render(node: &Node, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match node {
        Node::Leaf { counts, majority, n } => {
            let dist: Vec<String> = counts.iter().map(|(c, k)| format!("{c}:{k}")).collect();
            out.push_str(&format!("{pad}leaf {majority} ({n} rows; {})\n", dist.join(" ")));
        }
        Node::Split { attr, children, fallback } => {
            out.push_str(&format!("{pad}split on {attr}\n"));
            for (i, (value, child)) in children.iter().enumerate() {
                let mark = if i == *fallback { " *" } else { "" };
                out.push_str(&format!("{pad}  = {value}{mark}\n"));
                render(child, indent + 2, out);
            }
        }
    }
}

impl fmt::Display for DecisionTree {
    /// Indented text form; `*` marks the fallback child of each split.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        out.push_str(&format!(
            "target {} ({} rows, max_depth {}, min_leaf {}, min_gain {})\n",
            self.target, self.n_train, self.params.max_depth, self.params.min_leaf, self.params.min_gain
        ));
        render(&self.root, 0, &mut out);
        f.write_str(&out)
    }
}
