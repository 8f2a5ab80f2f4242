//! End-to-end orchestration of the admissions-mining flow.
//!
//! One config drives the whole run: ingest and repair both cohorts, fit
//! bands and clusters on the training cohort, derive class labels from the
//! cluster profiles, train the two rule models per target, evaluate on the
//! held-out cohort, and write every artifact plus a single summary report.
//! Identical config and inputs produce byte-identical outputs.
//!
//! Train/test hygiene is enforced by construction and recorded in a
//! provenance log: before evaluation the test cohort is touched only to
//! load it and to stamp class ground truth (nearest train K-means center),
//! never to fit anything.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::kmeans::assign_seq;
use crate::cluster::{
    kmeans, twostep, write_merge_trace, KMeansOutcome, KMeansParams, TwoStepParams,
};
use crate::data::{CatTable, Dataset, Schema, AGE, CLASS, GRADE};
use crate::error::{Error, Result};
use crate::eval::{
    compare_models, lift_curve, mining_legend, render_legend_table, MiningLegend, Selection,
};
use crate::ingest::{
    discretize, parse_file, preprocess, write_dataset_file, AttrBands, BandSpec, RepairPolicy,
};
use crate::models::{
    extract_tree_rules, mine_rules, predict_rules, predict_trace, train_tree, write_rules_csv,
    DecisionTree, MineParams, Node, RuleSet, TreeParams,
};
use crate::profile::{
    assign_labels_by, profile_clusters, render_profiles, row_classes, write_profiles_csv,
    ClassLabel,
};
use crate::synth::{default_mixture, generate_cohort, MixtureSpec};

/// Marker file present in the output directory while a run is underway or
/// after it failed; absent after a clean finish.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// Stage order; provenance entries and stage-tagged errors use these names.
const STAGES: [&str; 9] = [
    "config",
    "ingest",
    "discretize",
    "cluster",
    "profile",
    "transfer",
    "train",
    "evaluate",
    "report",
];

fn stage_index(name: &str) -> usize {
    STAGES
        .iter()
        .position(|s| *s == name)
        .expect("stage names are fixed")
}

/// Which cohort a stage touched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CohortRole {
    Train,
    Test,
}

impl std::fmt::Display for CohortRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CohortRole::Train => write!(f, "train"),
            CohortRole::Test => write!(f, "test"),
        }
    }
}

/// One provenance entry: a stage touched a cohort for a purpose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Access {
    pub stage: &'static str,
    pub cohort: CohortRole,
    pub purpose: &'static str,
}

/// Rejects any test-cohort access before evaluation other than the initial
/// load and the class ground-truth stamp.
pub fn check_hygiene(accesses: &[Access]) -> Result<()> {
    let eval_at = stage_index("evaluate");
    for a in accesses {
        if a.cohort != CohortRole::Test || stage_index(a.stage) >= eval_at {
            continue;
        }
        let allowed = matches!(
            (a.stage, a.purpose),
            ("ingest", "load") | ("transfer", "ground-truth transfer")
        );
        if !allowed {
            return Err(Error::InvalidInput(format!(
                "train/test hygiene violated: stage {} read the test cohort for {}",
                a.stage, a.purpose
            )));
        }
    }
    Ok(())
}

/// Where the cohorts come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    /// Seeded cohorts drawn from a mixture specification.
    Synthetic,
    /// One CSV holding both cohorts, split by cohort year.
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub kind: InputKind,
    /// CSV input file; required for `kind = "csv"`.
    pub path: Option<PathBuf>,
    /// Mixture spec file for synthetic input; the built-in mixture if unset.
    pub mixture: Option<PathBuf>,
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for InputConfig {
    fn default() -> InputConfig {
        InputConfig {
            kind: InputKind::Synthetic,
            path: None,
            mixture: None,
            n_train: 900,
            n_test: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub features: Vec<String>,
    pub max_k: usize,
}

impl Default for ClusteringConfig {
    fn default() -> ClusteringConfig {
        ClusteringConfig {
            features: ["age", "gender", "grade", "employment", "job_relevancy"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            max_k: 15,
        }
    }
}

/// Optional cut overrides; anything unset falls back to bands fitted on the
/// training cohort (grade quartiles, fixed age cuts).
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    pub grade_cuts: Option<Vec<f64>>,
    pub age_cuts: Option<Vec<f64>>,
}

impl BinningConfig {
    /// Bands for the run: defaults fitted on `train`, then overrides.
    pub fn build(&self, train: &Dataset) -> Result<BandSpec> {
        let mut spec = BandSpec::default_for(train)?;
        for (attr, cuts) in [(GRADE, &self.grade_cuts), (AGE, &self.age_cuts)] {
            if let Some(cuts) = cuts {
                let base = spec.get(attr).expect("defaults cover both attributes");
                spec.insert(AttrBands::new(attr, base.lo, base.hi, cuts.clone())?);
            }
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelingConfig {
    /// Continuous attribute whose ascending cluster mean orders the class
    /// names.
    pub key: String,
}

impl Default for LabelingConfig {
    fn default() -> LabelingConfig {
        LabelingConfig { key: AGE.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    /// Prediction targets; each gets a mined-rule model and a tree.
    pub targets: Vec<String>,
    /// Input attributes for both models; all non-target columns if unset.
    pub inputs: Option<Vec<String>>,
    pub min_support: f64,
    pub min_confidence: f64,
    pub max_lhs_len: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub min_gain: f64,
}

impl Default for ModelsConfig {
    fn default() -> ModelsConfig {
        let mine = MineParams::default();
        let tree = TreeParams::default();
        ModelsConfig {
            targets: vec!["field".to_string(), CLASS.to_string()],
            inputs: None,
            min_support: mine.min_support,
            min_confidence: mine.min_confidence,
            max_lhs_len: mine.max_lhs_len,
            max_depth: tree.max_depth,
            min_leaf: tree.min_leaf,
            min_gain: tree.min_gain,
        }
    }
}

impl ModelsConfig {
    pub fn mine_params(&self) -> MineParams {
        MineParams {
            min_support: self.min_support,
            min_confidence: self.min_confidence,
            max_lhs_len: self.max_lhs_len,
        }
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            min_gain: self.min_gain,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Lift-curve target value per target attribute; the training-cohort
    /// majority value if unset.
    pub lift_values: BTreeMap<String, String>,
}

/// Everything a run needs, loadable from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub train_year: i32,
    pub test_year: i32,
    pub out_dir: PathBuf,
    pub input: InputConfig,
    pub clustering: ClusteringConfig,
    pub binning: BinningConfig,
    pub labeling: LabelingConfig,
    pub models: ModelsConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            seed: 7,
            train_year: 2008,
            test_year: 2009,
            out_dir: PathBuf::from("out"),
            input: InputConfig::default(),
            clustering: ClusteringConfig::default(),
            binning: BinningConfig::default(),
            labeling: LabelingConfig::default(),
            models: ModelsConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<PipelineConfig> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad pipeline config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        PipelineConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.train_year == self.test_year {
            return bad(format!(
                "train and test cohorts share year {}",
                self.train_year
            ));
        }
        match self.input.kind {
            InputKind::Csv if self.input.path.is_none() => {
                return bad("csv input needs a path".into());
            }
            InputKind::Synthetic if self.input.n_train == 0 => {
                return bad("synthetic input needs n_train >= 1".into());
            }
            _ => {}
        }
        let schema = Schema::candidate();
        let known = |attr: &str| attr == CLASS || schema.kind_of(attr).is_some();
        if self.clustering.features.is_empty() {
            return bad("no clustering features".into());
        }
        for f in &self.clustering.features {
            if schema.kind_of(f).is_none() {
                return bad(format!("unknown clustering feature {f}"));
            }
        }
        if self.clustering.max_k == 0 {
            return bad("max_k must be at least 1".into());
        }
        if !schema.continuous().any(|a| a == self.labeling.key) {
            return bad(format!(
                "labeling key {} is not a continuous attribute",
                self.labeling.key
            ));
        }
        if self.models.targets.is_empty() {
            return bad("no model targets".into());
        }
        for t in &self.models.targets {
            if !known(t) {
                return bad(format!("unknown model target {t}"));
            }
        }
        if let Some(inputs) = &self.models.inputs {
            if inputs.is_empty() {
                return bad("model input list is empty".into());
            }
            for a in inputs {
                if !known(a) {
                    return bad(format!("unknown model input {a}"));
                }
            }
        }
        self.models.mine_params().validate()?;
        self.models.tree_params().validate()?;
        Ok(())
    }
}

/// Per-target evaluation outcome.
#[derive(Clone, Debug)]
pub struct TargetOutcome {
    pub target: String,
    /// Value the lift curves rank for.
    pub lift_value: String,
    pub mined_rules: usize,
    pub tree_leaves: usize,
    /// Attribute values at prediction time that no tree branch knew.
    pub unseen_routes: usize,
    pub mined: MiningLegend,
    pub tree: MiningLegend,
    pub selection: Selection,
}

/// What a finished run reports back.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub n_train: usize,
    pub n_test: usize,
    pub k: usize,
    pub sizes: Vec<usize>,
    /// Class name per cluster, sorted by class name.
    pub labels: Vec<(String, usize)>,
    pub targets: Vec<TargetOutcome>,
    pub accesses: Vec<Access>,
    /// Exact content of summary.txt.
    pub summary: String,
}

fn stage<T>(name: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| e.in_stage(name))
}

fn create(dir: &Path, name: &str) -> Result<File> {
    Ok(File::create(dir.join(name))?)
}

/// Runs the whole flow. On failure the output directory keeps an
/// [`INCOMPLETE_MARKER`] file naming the failed stage; on success the
/// marker is removed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    stage("config", cfg.validate())?;
    stage("config", fs::create_dir_all(&cfg.out_dir).map_err(Error::from))?;
    let marker = cfg.out_dir.join(INCOMPLETE_MARKER);
    stage(
        "config",
        fs::write(&marker, "run in progress; artifacts may be partial\n").map_err(Error::from),
    )?;
    match run_stages(cfg) {
        Ok(report) => {
            stage("report", fs::remove_file(&marker).map_err(Error::from))?;
            Ok(report)
        }
        Err(e) => {
            let _ = fs::write(&marker, format!("incomplete: {e}\n"));
            Err(e)
        }
    }
}

struct FittedTarget {
    target: String,
    table: CatTable,
    mined: RuleSet,
    tree: DecisionTree,
}

fn run_stages(cfg: &PipelineConfig) -> Result<RunReport> {
    let out = &cfg.out_dir;
    let mut log: Vec<Access> = Vec::new();

    // ingest: load, split, and repair both cohorts
    let (train, test, input_note) = stage("ingest", ingest_cohorts(cfg, &mut log))?;

    // discretize: bands fitted on the training cohort only
    log.push(Access {
        stage: "discretize",
        cohort: CohortRole::Train,
        purpose: "band fitting",
    });
    let bands = stage("discretize", cfg.binning.build(&train))?;
    let mut train_table = stage("discretize", discretize(&train, &bands))?;

    // cluster: twostep picks k, k-means refines at that k
    log.push(Access {
        stage: "cluster",
        cohort: CohortRole::Train,
        purpose: "cluster fitting",
    });
    let ts = stage(
        "cluster",
        twostep(
            &train,
            &cfg.clustering.features,
            &TwoStepParams {
                max_k: cfg.clustering.max_k,
                seed: cfg.seed,
                ..TwoStepParams::default()
            },
        ),
    )?;
    let km = stage(
        "cluster",
        kmeans(
            &train,
            &cfg.clustering.features,
            KMeansParams {
                k: ts.k,
                seed: cfg.seed,
                ..KMeansParams::default()
            },
        ),
    )?;
    stage("cluster", km.clustering.recheck(&train))?;
    stage(
        "cluster",
        create(out, "merge_trace.csv").and_then(|f| write_merge_trace(&ts.trace, f)),
    )?;
    stage(
        "cluster",
        create(out, "assignments.csv").and_then(|f| km.clustering.write_assignments(f)),
    )?;

    // profile: summarize clusters, name the classes, stamp the train rows
    log.push(Access {
        stage: "profile",
        cohort: CohortRole::Train,
        purpose: "profiling",
    });
    let profiles = stage("profile", profile_clusters(&train, &km.clustering, &bands))?;
    let labels = stage("profile", assign_labels_by(&profiles, &cfg.labeling.key))?;
    let train_classes = stage("profile", row_classes(&km.clustering, &labels))?;
    stage(
        "profile",
        fs::write(
            out.join("profiles.txt"),
            render_profiles(&profiles, Some(&labels)),
        )
        .map_err(Error::from),
    )?;
    stage(
        "profile",
        create(out, "profiles.csv").and_then(|f| write_profiles_csv(&profiles, f)),
    )?;
    stage(
        "profile",
        write_dataset_file(
            &train,
            &out.join("train_labeled.csv"),
            Some((CLASS, &train_classes)),
        ),
    )?;
    train_table.push_column(CLASS, train_classes);

    // transfer: class ground truth for test rows from the nearest train
    // k-means center (the evaluation cohort has no observed class)
    log.push(Access {
        stage: "transfer",
        cohort: CohortRole::Test,
        purpose: "ground-truth transfer",
    });
    let test_classes = stage("transfer", transfer_classes(&km, &labels, &test))?;
    if !test.is_empty() {
        stage(
            "transfer",
            write_dataset_file(
                &test,
                &out.join("test_labeled.csv"),
                Some((CLASS, &test_classes)),
            ),
        )?;
    }

    // train: both model families per target, then recount everything
    log.push(Access {
        stage: "train",
        cohort: CohortRole::Train,
        purpose: "model fitting",
    });
    let mine_params = cfg.models.mine_params();
    let tree_params = cfg.models.tree_params();
    let mut fitted = Vec::new();
    for target in &cfg.models.targets {
        let table = stage(
            "train",
            model_table(&train_table, target, cfg.models.inputs.as_deref()),
        )?;
        let mined = stage("train", mine_rules(&table, target, &mine_params))?;
        let tree = stage("train", train_tree(&table, target, &tree_params))?;
        stage("train", tree.check(&table))?;
        let tree_rules = stage("train", extract_tree_rules(&tree))?;
        stage("train", recheck_rules(&table, &mined))?;
        stage("train", recheck_rules(&table, &tree_rules))?;
        stage(
            "train",
            create(out, &format!("rules_{target}_mined.csv"))
                .and_then(|f| write_rules_csv(&mined.rules, f)),
        )?;
        stage(
            "train",
            create(out, &format!("rules_{target}_tree.csv"))
                .and_then(|f| write_rules_csv(&tree_rules.rules, f)),
        )?;
        stage(
            "train",
            fs::write(out.join(format!("tree_{target}.json")), tree.to_json()).map_err(Error::from),
        )?;
        stage(
            "train",
            fs::write(out.join(format!("tree_{target}.txt")), tree.to_string())
                .map_err(Error::from),
        )?;
        fitted.push(FittedTarget {
            target: target.clone(),
            table,
            mined,
            tree,
        });
    }

    // evaluate: all model x target combinations on the held-out cohort
    if test.is_empty() {
        return Err(
            Error::Eval("test cohort is empty; nothing to evaluate".into()).in_stage("evaluate"),
        );
    }
    log.push(Access {
        stage: "evaluate",
        cohort: CohortRole::Test,
        purpose: "evaluation",
    });
    let mut test_table = stage("evaluate", discretize(&test, &bands))?;
    test_table.push_column(CLASS, test_classes);
    let mut outcomes = Vec::new();
    for fit in &fitted {
        outcomes.push(stage("evaluate", evaluate_target(cfg, out, fit, &test_table))?);
    }

    // report: hygiene recheck, then the single deterministic summary
    stage("report", check_hygiene(&log))?;
    let labels_by_name: Vec<(String, usize)> = {
        let mut v: Vec<_> = labels
            .values()
            .map(|l: &ClassLabel| (l.name.clone(), l.cluster))
            .collect();
        v.sort();
        v
    };
    let report = RunReport {
        out_dir: out.clone(),
        n_train: train.len(),
        n_test: test.len(),
        k: ts.k,
        sizes: km.clustering.sizes(),
        labels: labels_by_name,
        targets: outcomes,
        accesses: log,
        summary: String::new(),
    };
    let summary = render_summary(cfg, &input_note, &report);
    stage(
        "report",
        fs::write(out.join("summary.txt"), &summary).map_err(Error::from),
    )?;
    stage(
        "report",
        fs::write(out.join("access_log.txt"), render_accesses(&report.accesses))
            .map_err(Error::from),
    )?;
    stage(
        "report",
        fs::write(out.join("config.toml"), cfg.to_toml_string()).map_err(Error::from),
    )?;
    Ok(RunReport { summary, ..report })
}

fn ingest_cohorts(
    cfg: &PipelineConfig,
    log: &mut Vec<Access>,
) -> Result<(Dataset, Dataset, String)> {
    let (raw_train, raw_test, note) = match cfg.input.kind {
        InputKind::Synthetic => {
            let spec = match &cfg.input.mixture {
                Some(path) => MixtureSpec::from_file(path)?,
                None => default_mixture(),
            };
            // the test cohort draws from the same mixture on its own stream
            let (train, _) = generate_cohort(&spec, cfg.input.n_train, cfg.seed, cfg.train_year)?;
            let (test, _) = generate_cohort(
                &spec,
                cfg.input.n_test,
                cfg.seed.wrapping_add(1),
                cfg.test_year,
            )?;
            let which = if cfg.input.mixture.is_some() {
                "configured mixture"
            } else {
                "built-in mixture"
            };
            (train, test, format!("synthetic ({which})"))
        }
        InputKind::Csv => {
            let path = cfg.input.path.as_ref().expect("validated");
            let parsed = parse_file(path, None)?;
            let train = parsed.dataset.filter_cohort(cfg.train_year);
            let test = parsed.dataset.filter_cohort(cfg.test_year);
            let note = format!("csv ({} rows rejected at parse)", parsed.rejections.len());
            (train, test, note)
        }
    };
    log.push(Access {
        stage: "ingest",
        cohort: CohortRole::Train,
        purpose: "load",
    });
    log.push(Access {
        stage: "ingest",
        cohort: CohortRole::Test,
        purpose: "load",
    });
    if raw_train.is_empty() {
        return Err(Error::InvalidInput(format!(
            "train cohort {} has no rows",
            cfg.train_year
        )));
    }
    let train = preprocess(&raw_train, RepairPolicy::default())?;
    let test = if raw_test.is_empty() {
        raw_test
    } else {
        preprocess(&raw_test, RepairPolicy::default())?
    };
    Ok((train, test, note))
}

fn transfer_classes(
    km: &KMeansOutcome,
    labels: &BTreeMap<usize, ClassLabel>,
    test: &Dataset,
) -> Result<Vec<String>> {
    if test.is_empty() {
        return Ok(Vec::new());
    }
    let points = km.clustering.space.encode_dataset(test)?;
    assign_seq(&points, &km.lloyd.centers)
        .into_iter()
        .map(|c| {
            labels
                .get(&c)
                .map(|l| l.name.clone())
                .ok_or_else(|| Error::Cluster(format!("test row lands in unlabeled cluster {c}")))
        })
        .collect()
}

/// The training view one target's models see: every column, or the
/// configured inputs plus the target.
fn model_table(table: &CatTable, target: &str, inputs: Option<&[String]>) -> Result<CatTable> {
    if table.attr_index(target).is_none() {
        return Err(Error::Model(format!("target {target} is not a column")));
    }
    let Some(inputs) = inputs else {
        return Ok(table.clone());
    };
    let mut keep: Vec<String> = inputs.to_vec();
    keep.retain(|a| a != target);
    keep.push(target.to_string());
    let idx: Vec<usize> = keep
        .iter()
        .map(|a| {
            table
                .attr_index(a)
                .ok_or_else(|| Error::Model(format!("model input {a} is not a column")))
        })
        .collect::<Result<_>>()?;
    Ok(CatTable {
        attrs: keep,
        ids: table.ids.clone(),
        rows: table
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
            .collect(),
    })
}

/// Recounts every rule's support and confidence against the table it was
/// trained on; any drift is a bug, so equality is exact.
fn recheck_rules(table: &CatTable, rs: &RuleSet) -> Result<()> {
    let n = table.len() as f64;
    let rows: Vec<Vec<(&str, &str)>> = (0..table.len())
        .map(|i| table.row_pairs(i).collect())
        .collect();
    for rule in &rs.rules {
        let mut lhs_n = 0u64;
        let mut joint = 0u64;
        for pairs in &rows {
            if rule.matches(pairs)? {
                lhs_n += 1;
                if pairs
                    .iter()
                    .any(|(a, v)| *a == rule.rhs_attr && *v == rule.rhs_value)
                {
                    joint += 1;
                }
            }
        }
        let recount = format!("{} -> {}", rule.lhs_text(), rule.rhs_text());
        if joint == 0 {
            return Err(Error::Model(format!("rule {recount} matches no rows")));
        }
        if rule.support != joint as f64 / n || rule.confidence != joint as f64 / lhs_n as f64 {
            return Err(Error::Model(format!("rule {recount} recount disagrees")));
        }
    }
    Ok(())
}

fn recheck_legend(l: &MiningLegend) -> Result<()> {
    let in_unit = |v: f64| (0.0..=1.0).contains(&v);
    if !in_unit(l.population_correct)
        || !in_unit(l.mean_predict_probability)
        || l.score != l.population_correct * l.mean_predict_probability
    {
        return Err(Error::Eval("legend out of bounds".into()));
    }
    Ok(())
}

fn majority_value(table: &CatTable, target: &str) -> String {
    let idx = table.attr_index(target).expect("target column exists");
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for row in &table.rows {
        *counts.entry(row[idx].as_str()).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(v, _)| v.to_string())
        .expect("table is non-empty")
}

fn evaluate_target(
    cfg: &PipelineConfig,
    out: &Path,
    fit: &FittedTarget,
    test_table: &CatTable,
) -> Result<TargetOutcome> {
    let target_idx = test_table
        .attr_index(&fit.target)
        .ok_or_else(|| Error::Eval(format!("target {} missing from test table", fit.target)))?;
    let truths: Vec<String> = test_table.rows.iter().map(|r| r[target_idx].clone()).collect();
    let pairs: Vec<Vec<(&str, &str)>> = (0..test_table.len())
        .map(|i| test_table.row_pairs(i).collect())
        .collect();

    let mined_preds: Vec<(String, f64)> = pairs
        .iter()
        .map(|p| predict_rules(&fit.mined, p))
        .collect::<Result<_>>()?;
    let mut unseen_routes = 0usize;
    let mut tree_preds = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let tp = predict_trace(&fit.tree, p)?;
        unseen_routes += tp.unseen.len();
        tree_preds.push((tp.class, tp.probability));
    }

    let mined_legend = mining_legend(&mined_preds, &truths)?;
    let tree_legend = mining_legend(&tree_preds, &truths)?;
    recheck_legend(&mined_legend)?;
    recheck_legend(&tree_legend)?;

    // curves rank for the configured value, or the train-cohort majority
    let lift_value = cfg
        .evaluation
        .lift_values
        .get(&fit.target)
        .cloned()
        .unwrap_or_else(|| majority_value(&fit.table, &fit.target));
    for (name, preds) in [("mined", &mined_preds), ("tree", &tree_preds)] {
        let curve = lift_curve(preds, &truths, &lift_value)?;
        let base = format!("lift_{}_{name}", fit.target);
        create(out, &format!("{base}.csv")).and_then(|f| curve.write_csv(f))?;
        fs::write(
            out.join(format!("{base}.svg")),
            curve.to_svg(&format!("{} lift, {name} model", fit.target)),
        )?;
    }

    Ok(TargetOutcome {
        target: fit.target.clone(),
        lift_value,
        mined_rules: fit.mined.rules.len(),
        tree_leaves: count_leaves(&fit.tree.root),
        unseen_routes,
        mined: mined_legend,
        tree: tree_legend,
        selection: compare_models(&mined_legend, &tree_legend),
    })
}

fn count_leaves(node: &Node) -> usize {
    match node {
        Node::Leaf { .. } => 1,
        Node::Split { children, .. } => children.iter().map(|(_, c)| count_leaves(c)).sum(),
    }
}

fn render_accesses(accesses: &[Access]) -> String {
    let mut out = String::new();
    for a in accesses {
        let _ = writeln!(out, "{}\t{}\t{}", a.stage, a.cohort, a.purpose);
    }
    out
}

/// The summary is free of timestamps and absolute paths so reruns with the
/// same config and inputs are byte-identical.
fn render_summary(cfg: &PipelineConfig, input_note: &str, report: &RunReport) -> String {
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "admissions mining run");
    let _ = writeln!(w, "seed {}", cfg.seed);
    let _ = writeln!(w, "input: {input_note}");
    let _ = writeln!(w, "train cohort {}: {} rows", cfg.train_year, report.n_train);
    let _ = writeln!(w, "test cohort {}: {} rows", cfg.test_year, report.n_test);
    let _ = writeln!(w);
    let _ = writeln!(w, "clustering on {}", cfg.clustering.features.join(", "));
    let _ = writeln!(w, "  selected k = {} (merge_trace.csv)", report.k);
    let sizes: Vec<String> = report.sizes.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(w, "  k-means sizes: {}", sizes.join(", "));
    let _ = writeln!(w, "  classes by ascending mean {}:", cfg.labeling.key);
    for (name, cluster) in &report.labels {
        let _ = writeln!(
            w,
            "    {name} = cluster {cluster} ({} rows)",
            report.sizes[*cluster]
        );
    }
    let _ = writeln!(
        w,
        "  test class ground truth: nearest train k-means center"
    );
    for t in &report.targets {
        let _ = writeln!(w);
        let _ = writeln!(w, "target {}", t.target);
        let _ = writeln!(w, "  mined rules: {} (rules_{}_mined.csv)", t.mined_rules, t.target);
        let _ = writeln!(
            w,
            "  tree leaves: {} (tree_{}.txt, rules_{}_tree.csv)",
            t.tree_leaves, t.target, t.target
        );
        let _ = writeln!(
            w,
            "  lift value: {} (lift_{}_mined.csv, lift_{}_tree.csv)",
            t.lift_value, t.target, t.target
        );
        if t.unseen_routes > 0 {
            let _ = writeln!(
                w,
                "  unseen attribute values routed to fallback branches: {}",
                t.unseen_routes
            );
        }
        for line in render_legend_table(&[("mined rules", &t.mined), ("decision tree", &t.tree)])
            .lines()
        {
            let _ = writeln!(w, "  {line}");
        }
        let winner = if t.selection.selects_first {
            "mined rules"
        } else {
            "decision tree"
        };
        if t.selection.tie {
            let _ = writeln!(w, "  selected: {winner} (exact tie, first kept)");
        } else {
            let _ = writeln!(w, "  selected: {winner} (margin {:.4})", t.selection.margin);
        }
    }
    s
}
