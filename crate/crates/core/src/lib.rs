//! Tabular mining toolkit for admission-cohort analysis.
//!
//! The library covers the full path from raw candidate records to a chosen
//! predictive model:
//!
//! * [`ingest`] parses and validates candidate CSV files, repairs missing
//!   values, and discretizes continuous attributes into labeled bands.
//! * [`synth`] draws seeded synthetic cohorts from a mixture specification so
//!   every downstream stage can be exercised reproducibly.
//! * [`cluster`] segments mixed continuous/categorical records: a two-phase
//!   hierarchical procedure with automatic cluster-count selection, plus
//!   standard K-means for cross-checking.
//! * [`clustsim`] scores agreement between two clusterings (Rand, Jaccard,
//!   attribute-distribution similarity).
//! * [`profile`] summarizes clusters per attribute and assigns stable class
//!   labels used as a prediction target.
//! * [`models`] trains the two predictive models: class association rules
//!   mined levelwise, and an information-gain decision tree whose leaves are
//!   exported as rules.
//! * [`eval`] builds lift curves and the correct-share x mean-probability
//!   score used to pick between models.
//! * [`pipeline`] wires the stages into one config-driven run with
//!   deterministic artifacts.
//!
//! Everything downstream of a seed is deterministic: reruns with the same
//! inputs, config, and seed produce byte-identical artifacts. The `parallel`
//! feature (on by default) enables rayon data parallelism in the hot loops;
//! results are bit-identical with any worker count because reductions happen
//! in fixed order.

pub mod cluster;
pub mod clustsim;
pub mod data;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod models;
pub mod pipeline;
pub mod profile;
pub mod synth;

pub use error::{Error, Result};
