//! The two predictive models over the labeled categorical table.
//!
//! Both models speak the same rule language ([`Rule`], [`RuleSet`]) and
//! differ only in how rules come to be: [`mine_rules`] searches association
//! rules levelwise under support and confidence thresholds, while
//! [`train_tree`] grows an information-gain decision tree whose leaves
//! [`extract_tree_rules`] turns into rules. Either target attribute (the
//! requested field, or the cluster-derived class) works unchanged.

pub mod mine;
pub mod rule;
pub mod tree;

pub use mine::mine_rules;
pub use rule::{
    canonical_cmp, predict_rules, read_rules_csv, write_rules_csv, MineParams, Pred, Rule,
    RuleOrigin, RuleSet,
};
pub use tree::{
    extract_tree_rules, predict_trace, predict_tree, train_tree, DecisionTree, Node, TreeParams,
    TreePrediction,
};
