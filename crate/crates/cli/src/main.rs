//! Command line front end for the cohort mining library.
//!
//! Subcommands mirror the pipeline stages so each step can run standalone
//! on CSV artifacts, and `run` executes the whole flow from one config
//! file. Every command exits 0 on success and nonzero with a stage-tagged
//! message on stderr otherwise.

use std::collections::BTreeMap;
use std::fs;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use candmine_core::cluster::{
    kmeans, read_assignments, twostep, write_merge_trace, Clustering, KMeansParams, TwoStepParams,
};
use candmine_core::clustsim::{adco, jaccard_index, rand_index, ADCO_BINS};
use candmine_core::data::{CatTable, Dataset, CLASS};
use candmine_core::eval::{compare_models, lift_curve, mining_legend, MiningLegend};
use candmine_core::ingest::{
    discretize, parse_file, preprocess, write_dataset_file, BandSpec, RepairPolicy,
};
use candmine_core::models::{
    extract_tree_rules, mine_rules, predict_trace, read_rules_csv, train_tree, write_rules_csv,
    DecisionTree, MineParams, RuleSet, TreeParams,
};
use candmine_core::pipeline::{run_pipeline, PipelineConfig};
use candmine_core::profile::{
    assign_labels_by, profile_clusters, render_profiles, row_classes, write_profiles_csv,
};
use candmine_core::synth::{default_mixture, generate_cohort, MixtureSpec};

const DEFAULT_FEATURES: &str = "age,gender,grade,employment,job_relevancy";

#[derive(Parser)]
#[command(name = "candmine", version, about = "Cluster and mine candidate cohorts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a candidate CSV, repair missing values, write canonical CSV
    Ingest(IngestArgs),
    /// Generate a seeded synthetic cohort with a ground-truth sidecar
    Synth(SynthArgs),
    /// Cluster a cohort (twostep picks k; k-means needs --k)
    Cluster(ClusterArgs),
    /// Compare two saved clusterings: rand, jaccard, distribution overlap
    CompareClusterings(CompareArgs),
    /// Profile clusters and name ordered classes from an assignment file
    Label(LabelArgs),
    /// Train rule and tree models for one target
    Train(TrainArgs),
    /// Evaluate saved models on a labeled cohort; lift curves and legends
    Evaluate(EvaluateArgs),
    /// Predict per row with a saved model
    Predict(PredictArgs),
    /// Execute the full pipeline from a config file
    Run(RunArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Candidate CSV to validate
    #[arg(long)]
    input: PathBuf,
    /// Canonical CSV destination
    #[arg(long)]
    out: PathBuf,
    /// Reference year when the file carries birth_year instead of age
    #[arg(long)]
    reference_year: Option<i32>,
    /// Skip median/mode repair and keep rows exactly as parsed
    #[arg(long)]
    no_repair: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Rows to generate
    #[arg(long, default_value_t = 900)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cohort year stamped on every row
    #[arg(long, default_value_t = 2008)]
    year: i32,
    /// Mixture spec TOML; the built-in mixture if omitted
    #[arg(long)]
    mixture: Option<PathBuf>,
    /// Cohort CSV destination; the component sidecar lands next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Twostep,
    Kmeans,
}

#[derive(Args)]
struct ClusterArgs {
    /// Canonical cohort CSV
    #[arg(long)]
    input: PathBuf,
    /// Clustering features, comma separated
    #[arg(long, value_delimiter = ',', default_value = DEFAULT_FEATURES)]
    features: Vec<String>,
    #[arg(long, value_enum, default_value_t = Algo::Twostep)]
    algo: Algo,
    /// Cluster count; required for k-means, ignored by twostep
    #[arg(long)]
    k: Option<usize>,
    /// Upper bound for the automatic cluster count
    #[arg(long, default_value_t = 15)]
    max_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for assignments.csv (and merge_trace.csv)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Canonical cohort CSV both assignment files cover
    #[arg(long)]
    input: PathBuf,
    /// First assignment CSV (id,cluster)
    #[arg(long)]
    a: PathBuf,
    /// Second assignment CSV (id,cluster)
    #[arg(long)]
    b: PathBuf,
    /// Features backing the per-cluster statistics
    #[arg(long, value_delimiter = ',', default_value = DEFAULT_FEATURES)]
    features: Vec<String>,
    /// Bins per attribute for the distribution-overlap index
    #[arg(long, default_value_t = ADCO_BINS)]
    bins: usize,
    /// Write the result row here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LabelArgs {
    /// Canonical cohort CSV
    #[arg(long)]
    input: PathBuf,
    /// Assignment CSV (id,cluster) covering the same rows
    #[arg(long)]
    assignments: PathBuf,
    /// Continuous attribute whose ascending cluster mean orders the classes
    #[arg(long, default_value = "age")]
    key: String,
    #[arg(long, value_delimiter = ',', default_value = DEFAULT_FEATURES)]
    features: Vec<String>,
    /// Output directory for profiles and the labeled cohort
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Mined,
    Tree,
    Both,
}

#[derive(Args)]
struct TrainArgs {
    /// Canonical cohort CSV; a class column is honored as an attribute
    #[arg(long)]
    input: PathBuf,
    /// Target attribute the models predict
    #[arg(long)]
    target: String,
    #[arg(long, value_enum, default_value_t = ModelKind::Both)]
    model: ModelKind,
    #[arg(long, default_value_t = MineParams::default().min_support)]
    min_support: f64,
    #[arg(long, default_value_t = MineParams::default().min_confidence)]
    min_confidence: f64,
    #[arg(long, default_value_t = MineParams::default().max_lhs_len)]
    max_lhs_len: usize,
    #[arg(long, default_value_t = TreeParams::default().max_depth)]
    max_depth: usize,
    #[arg(long, default_value_t = TreeParams::default().min_leaf)]
    min_leaf: usize,
    #[arg(long, default_value_t = TreeParams::default().min_gain)]
    min_gain: f64,
    /// Output directory for rule CSVs and the tree
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Labeled cohort CSV holding the true target values
    #[arg(long)]
    input: PathBuf,
    /// Target attribute the models predict
    #[arg(long)]
    target: String,
    /// Mined-rule CSV to evaluate
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Tree JSON to evaluate
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Fallback class when no rule fires
    #[arg(long)]
    default_class: Option<String>,
    /// Probability reported with the fallback class
    #[arg(long, requires = "default_class", default_value_t = 0.5)]
    default_prior: f64,
    /// Value the lift curve ranks for; majority of the true values if unset
    #[arg(long)]
    lift_value: Option<String>,
    /// Output directory for lift CSV/SVG and the selection
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Canonical cohort CSV to predict over
    #[arg(long)]
    input: PathBuf,
    /// Mined-rule CSV model
    #[arg(long, conflicts_with = "tree")]
    rules: Option<PathBuf>,
    /// Tree JSON model
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Fallback class when no rule fires
    #[arg(long)]
    default_class: Option<String>,
    /// Probability reported with the fallback class
    #[arg(long, requires = "default_class", default_value_t = 0.5)]
    default_prior: f64,
    /// Prediction CSV destination (id,predicted,probability)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline config TOML; built-in defaults if omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tag = match &cli.cmd {
        Cmd::Ingest(_) => "ingest",
        Cmd::Synth(_) => "synth",
        Cmd::Cluster(_) => "cluster",
        Cmd::CompareClusterings(_) => "compare-clusterings",
        Cmd::Label(_) => "label",
        Cmd::Train(_) => "train",
        Cmd::Evaluate(_) => "evaluate",
        Cmd::Predict(_) => "predict",
        Cmd::Run(_) => "run",
    };
    let result = match cli.cmd {
        Cmd::Ingest(a) => cmd_ingest(a),
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Cluster(a) => cmd_cluster(a),
        Cmd::CompareClusterings(a) => cmd_compare(a),
        Cmd::Label(a) => cmd_label(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Evaluate(a) => cmd_evaluate(a),
        Cmd::Predict(a) => cmd_predict(a),
        Cmd::Run(a) => cmd_run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{tag} failed: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Parses and repairs a cohort file, reporting rejected rows on stderr.
/// The default repair policy fills rather than drops, so extra columns
/// stay aligned with the rows.
fn load_dataset(path: &Path) -> Result<(Dataset, BTreeMap<String, Vec<String>>)> {
    let parsed = parse_file(path, None).with_context(|| format!("reading {}", path.display()))?;
    report_rejections(&parsed.rejections);
    if parsed.dataset.is_empty() {
        bail!("{} has no valid rows", path.display());
    }
    let ds = preprocess(&parsed.dataset, RepairPolicy::default())?;
    Ok((ds, parsed.extras))
}

fn report_rejections(rejections: &[candmine_core::ingest::Rejection]) {
    for r in rejections.iter().take(5) {
        eprintln!("rejected line {}: {}", r.line, r.reason);
    }
    if rejections.len() > 5 {
        eprintln!("... and {} more rejected rows", rejections.len() - 5);
    }
}

/// Discretized table plus any class column the file carried.
fn load_table(path: &Path) -> Result<(Dataset, CatTable)> {
    let (ds, extras) = load_dataset(path)?;
    let bands = BandSpec::default_for(&ds)?;
    let mut table = discretize(&ds, &bands)?;
    if let Some(classes) = extras.get(CLASS) {
        table.push_column(CLASS, classes.clone());
    }
    Ok((ds, table))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let parsed = parse_file(&a.input, a.reference_year)
        .with_context(|| format!("reading {}", a.input.display()))?;
    report_rejections(&parsed.rejections);
    if parsed.dataset.is_empty() {
        bail!("{} has no valid rows", a.input.display());
    }
    let ds = if a.no_repair {
        parsed.dataset
    } else {
        preprocess(&parsed.dataset, RepairPolicy::default())?
    };
    let class = parsed.extras.get(CLASS).map(|c| (CLASS, c.as_slice()));
    write_dataset_file(&ds, &a.out, class)?;
    println!(
        "ingested {} rows ({} rejected) -> {}",
        ds.len(),
        parsed.rejections.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let spec = match &a.mixture {
        Some(path) => MixtureSpec::from_file(path)?,
        None => default_mixture(),
    };
    let (ds, components) = generate_cohort(&spec, a.n, a.seed, a.year)?;
    write_dataset_file(&ds, &a.out, None)?;

    let stem = a
        .out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cohort".to_string());
    let truth_path = a.out.with_file_name(format!("{stem}_truth.csv"));
    let mut w = csv::Writer::from_writer(File::create(&truth_path)?);
    w.write_record(["id", "component"])?;
    for (rec, comp) in ds.rows.iter().zip(&components) {
        w.write_record([rec.id.as_str(), &comp.to_string()])?;
    }
    w.flush()?;
    println!(
        "wrote {} rows to {} (ground truth: {})",
        ds.len(),
        a.out.display(),
        truth_path.display()
    );
    Ok(())
}

fn cmd_cluster(a: ClusterArgs) -> Result<()> {
    let (ds, _) = load_dataset(&a.input)?;
    ensure_dir(&a.out)?;
    match a.algo {
        Algo::Twostep => {
            let out = twostep(
                &ds,
                &a.features,
                &TwoStepParams {
                    max_k: a.max_k,
                    seed: a.seed,
                    ..TwoStepParams::default()
                },
            )?;
            out.clustering
                .write_assignments(File::create(a.out.join("assignments.csv"))?)?;
            write_merge_trace(&out.trace, File::create(a.out.join("merge_trace.csv"))?)?;
            let sizes: Vec<String> = out.clustering.sizes().iter().map(|n| n.to_string()).collect();
            println!(
                "twostep: k={} over {} rows; sizes {}",
                out.k,
                ds.len(),
                sizes.join(", ")
            );
        }
        Algo::Kmeans => {
            let Some(k) = a.k else {
                bail!("k-means needs --k");
            };
            let out = kmeans(
                &ds,
                &a.features,
                KMeansParams {
                    k,
                    seed: a.seed,
                    ..KMeansParams::default()
                },
            )?;
            out.clustering
                .write_assignments(File::create(a.out.join("assignments.csv"))?)?;
            let sizes: Vec<String> = out.clustering.sizes().iter().map(|n| n.to_string()).collect();
            println!(
                "k-means: k={k} over {} rows in {} iterations, objective {:.6}; sizes {}",
                ds.len(),
                out.lloyd.iterations,
                out.lloyd.objective,
                sizes.join(", ")
            );
        }
    }
    Ok(())
}

fn read_clustering(ds: &Dataset, features: &[String], path: &Path) -> Result<Clustering> {
    let (ids, assignment, k) = read_assignments(File::open(path)?)
        .with_context(|| format!("reading {}", path.display()))?;
    if ids != ds.ids() {
        bail!(
            "{} does not cover the dataset's rows in order",
            path.display()
        );
    }
    Ok(Clustering::from_assignment(ds, features, k, assignment)?)
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let (ds, _) = load_dataset(&a.input)?;
    let ca = read_clustering(&ds, &a.features, &a.a)?;
    let cb = read_clustering(&ds, &a.features, &a.b)?;
    let rand = rand_index(&ca, &cb)?;
    let jaccard = jaccard_index(&ca, &cb)?;
    let overlap = adco(&ca, &cb, &ds, a.bins)?;
    let row = format!("rand,jaccard,adco\n{rand},{jaccard},{overlap}\n");
    match &a.out {
        Some(path) => fs::write(path, row)?,
        None => print!("{row}"),
    }
    Ok(())
}

fn cmd_label(a: LabelArgs) -> Result<()> {
    let (ds, _) = load_dataset(&a.input)?;
    let c = read_clustering(&ds, &a.features, &a.assignments)?;
    let bands = BandSpec::default_for(&ds)?;
    let profiles = profile_clusters(&ds, &c, &bands)?;
    let labels = assign_labels_by(&profiles, &a.key)?;
    let classes = row_classes(&c, &labels)?;

    ensure_dir(&a.out)?;
    fs::write(
        a.out.join("profiles.txt"),
        render_profiles(&profiles, Some(&labels)),
    )?;
    write_profiles_csv(&profiles, File::create(a.out.join("profiles.csv"))?)?;
    write_dataset_file(&ds, &a.out.join("labeled.csv"), Some((CLASS, &classes)))?;
    let sizes = c.sizes();
    let mut named: Vec<_> = labels.values().collect();
    named.sort_by(|x, y| x.name.cmp(&y.name));
    for l in named {
        println!("{} = cluster {} ({} rows)", l.name, l.cluster, sizes[l.cluster]);
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let (_, table) = load_table(&a.input)?;
    if table.attr_index(&a.target).is_none() {
        bail!(
            "target {} is not a column of {} (label the cohort first?)",
            a.target,
            a.input.display()
        );
    }
    ensure_dir(&a.out)?;
    if a.model != ModelKind::Tree {
        let params = MineParams {
            min_support: a.min_support,
            min_confidence: a.min_confidence,
            max_lhs_len: a.max_lhs_len,
        };
        let rs = mine_rules(&table, &a.target, &params)?;
        write_rules_csv(&rs.rules, File::create(a.out.join("rules_mined.csv"))?)?;
        println!(
            "mined {} rules (default {} at prior {:.4}) -> rules_mined.csv",
            rs.rules.len(),
            rs.default_class,
            rs.default_prior
        );
    }
    if a.model != ModelKind::Mined {
        let params = TreeParams {
            max_depth: a.max_depth,
            min_leaf: a.min_leaf,
            min_gain: a.min_gain,
        };
        let tree = train_tree(&table, &a.target, &params)?;
        tree.check(&table)?;
        let rules = extract_tree_rules(&tree)?;
        fs::write(a.out.join("tree.json"), tree.to_json())?;
        fs::write(a.out.join("tree.txt"), tree.to_string())?;
        write_rules_csv(&rules.rules, File::create(a.out.join("rules_tree.csv"))?)?;
        println!(
            "tree with {} leaf rules -> tree.json, tree.txt, rules_tree.csv",
            rules.rules.len()
        );
    }
    Ok(())
}

/// A rule model for prediction: strict sets reject unmatched rows instead
/// of falling back to a default class.
struct RuleModel {
    set: RuleSet,
    strict: bool,
}

impl RuleModel {
    fn load(path: &Path, default_class: Option<&str>, default_prior: f64) -> Result<RuleModel> {
        let rules = read_rules_csv(File::open(path)?)
            .with_context(|| format!("reading {}", path.display()))?;
        if rules.is_empty() {
            bail!("{} holds no rules", path.display());
        }
        let (class, prior, strict) = match default_class {
            Some(c) => (c.to_string(), default_prior, false),
            None => ("unmatched".to_string(), 0.0, true),
        };
        Ok(RuleModel {
            set: RuleSet::new(rules, class, prior, None)?,
            strict,
        })
    }

    fn predict(&self, id: &str, record: &[(&str, &str)]) -> Result<(String, f64)> {
        match self.set.first_match(record)? {
            Some(rule) => Ok((rule.rhs_value.clone(), rule.confidence)),
            None if self.strict => bail!(
                "no rule fires for row {id}; pass --default-class to set a fallback"
            ),
            None => Ok((self.set.default_class.clone(), self.set.default_prior)),
        }
    }
}

fn table_pairs(table: &CatTable) -> Vec<Vec<(&str, &str)>> {
    (0..table.len()).map(|i| table.row_pairs(i).collect()).collect()
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    if a.rules.is_none() && a.tree.is_none() {
        bail!("nothing to evaluate; pass --rules and/or --tree");
    }
    let (_, table) = load_table(&a.input)?;
    let Some(target_idx) = table.attr_index(&a.target) else {
        bail!("target {} is not a column of {}", a.target, a.input.display());
    };
    let truths: Vec<String> = table.rows.iter().map(|r| r[target_idx].clone()).collect();
    let pairs = table_pairs(&table);
    ensure_dir(&a.out)?;

    let lift_value = a.lift_value.clone().unwrap_or_else(|| {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for t in &truths {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        counts
            .into_iter()
            .max_by(|x, y| x.1.cmp(&y.1).then(y.0.cmp(x.0)))
            .map(|(v, _)| v.to_string())
            .expect("truths are non-empty")
    });

    let mut legends: Vec<(&str, MiningLegend)> = Vec::new();
    if let Some(path) = &a.rules {
        let model = RuleModel::load(path, a.default_class.as_deref(), a.default_prior)?;
        let preds: Vec<(String, f64)> = table
            .ids
            .iter()
            .zip(&pairs)
            .map(|(id, p)| model.predict(id, p))
            .collect::<Result<_>>()?;
        legends.push(("mined rules", write_model_eval(&a.out, "mined", &preds, &truths, &lift_value)?));
    }
    if let Some(path) = &a.tree {
        let tree = DecisionTree::from_json(&fs::read_to_string(path)?)?;
        let preds: Vec<(String, f64)> = pairs
            .iter()
            .map(|p| predict_trace(&tree, p).map(|t| (t.class, t.probability)))
            .collect::<candmine_core::Result<_>>()?;
        legends.push(("decision tree", write_model_eval(&a.out, "tree", &preds, &truths, &lift_value)?));
    }

    for (name, legend) in &legends {
        println!(
            "{name}: correct {:.4}, mean prob {:.4}, score {:.4}",
            legend.population_correct, legend.mean_predict_probability, legend.score
        );
    }
    if let [(na, la), (nb, lb)] = legends.as_slice() {
        let text = compare_models(la, lb).render(na, nb);
        fs::write(a.out.join("selection.txt"), &text)?;
        print!("{text}");
    }
    Ok(())
}

fn write_model_eval(
    out: &Path,
    name: &str,
    preds: &[(String, f64)],
    truths: &[String],
    lift_value: &str,
) -> Result<MiningLegend> {
    let curve = lift_curve(preds, truths, lift_value)?;
    curve.write_csv(File::create(out.join(format!("lift_{name}.csv")))?)?;
    fs::write(
        out.join(format!("lift_{name}.svg")),
        curve.to_svg(&format!("lift, {name} model")),
    )?;
    Ok(mining_legend(preds, truths)?)
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let (_, table) = load_table(&a.input)?;
    let pairs = table_pairs(&table);
    let preds: Vec<(String, f64)> = match (&a.rules, &a.tree) {
        (Some(path), None) => {
            let model = RuleModel::load(path, a.default_class.as_deref(), a.default_prior)?;
            table
                .ids
                .iter()
                .zip(&pairs)
                .map(|(id, p)| model.predict(id, p))
                .collect::<Result<_>>()?
        }
        (None, Some(path)) => {
            let tree = DecisionTree::from_json(&fs::read_to_string(path)?)?;
            pairs
                .iter()
                .map(|p| predict_trace(&tree, p).map(|t| (t.class, t.probability)))
                .collect::<candmine_core::Result<_>>()?
        }
        _ => bail!("pass exactly one of --rules or --tree"),
    };
    let mut w = csv::Writer::from_writer(File::create(&a.out)?);
    w.write_record(["id", "predicted", "probability"])?;
    for (id, (class, p)) in table.ids.iter().zip(&preds) {
        w.write_record([id.as_str(), class.as_str(), &p.to_string()])?;
    }
    w.flush()?;
    println!("wrote {} predictions -> {}", preds.len(), a.out.display());
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(out) = a.out {
        cfg.out_dir = out;
    }
    let report = run_pipeline(&cfg)?;
    print!("{}", report.summary);
    println!("artifacts in {}", report.out_dir.display());
    Ok(())
}
