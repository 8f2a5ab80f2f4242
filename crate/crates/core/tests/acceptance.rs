//! Acceptance gate: one test per shipping criterion, each printing a
//! `[PASS]`/`[FAIL]` line. Oracles are independent reimplementations kept
//! deliberately dumber than the library code they check: flat enumeration
//! instead of levelwise pruning, O(n^2) pair loops instead of contingency
//! tables, exhaustive labelings instead of Lloyd iteration.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::time::{Duration, Instant};

use candmine_core::cluster::{
    farthest_first_init, kmeans, lloyd, twostep, Clustering, KMeansParams, TwoStepParams,
};
use candmine_core::clustsim::{adco, jaccard_index, rand_index, ADCO_BINS};
use candmine_core::data::{
    AttrKind, CatTable, Dataset, DIPLOMA, FEMALE, FIELD, GENDER, GRADE, JOB_RELEVANCY, MALE,
};
use candmine_core::eval::{compare_models, lift_curve, MiningLegend};
use candmine_core::ingest::AttrBands;
use candmine_core::models::{
    canonical_cmp, mine_rules, predict_rules, MineParams, Pred, Rule, RuleOrigin, RuleSet,
};
use candmine_core::pipeline::{run_pipeline, PipelineConfig};
use candmine_core::synth::{default_mixture, generate_cohort};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Runs one criterion body and prints its verdict line. The panic is
/// re-raised so `cargo test` still counts the failure.
fn criterion(name: &str, body: impl FnOnce() + UnwindSafe) {
    match catch_unwind(body) {
        Ok(()) => println!("[PASS] {name}"),
        Err(cause) => {
            println!("[FAIL] {name}");
            resume_unwind(cause);
        }
    }
}

// ---------------------------------------------------------------------------
// 1. Rule mining against a flat enumerator.

/// Random categorical table: `n_inputs` input columns plus a target column
/// `t`, two or three levels each.
fn random_table(rng: &mut ChaCha8Rng, n_rows: usize, n_inputs: usize) -> CatTable {
    let mut attrs: Vec<String> = (0..n_inputs).map(|i| format!("a{i}")).collect();
    attrs.push("t".into());
    let levels: Vec<usize> = (0..attrs.len()).map(|_| rng.random_range(2..=3)).collect();
    let rows = (0..n_rows)
        .map(|_| {
            levels
                .iter()
                .map(|&l| format!("v{}", rng.random_range(0..l)))
                .collect()
        })
        .collect();
    CatTable {
        attrs,
        ids: (0..n_rows).map(|i| format!("r{i}")).collect(),
        rows,
    }
}

/// Every (column subset, value combination, target level) triple, counted by
/// scanning the whole table, thresholded with the same f64 comparisons the
/// miner uses so supports and confidences agree bit for bit.
fn enumerate_rules(table: &CatTable, target: &str, params: &MineParams) -> Vec<Rule> {
    let t_idx = table.attr_index(target).unwrap();
    let n = table.len() as u64;
    let input_cols: Vec<usize> = (0..table.attrs.len()).filter(|&i| i != t_idx).collect();
    let t_levels = table.levels(t_idx);
    let mut out = Vec::new();

    for mask in 1u32..(1u32 << input_cols.len()) {
        let cols: Vec<usize> = input_cols
            .iter()
            .enumerate()
            .filter(|&(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, &c)| c)
            .collect();
        if cols.len() > params.max_lhs_len {
            continue;
        }
        let level_sets: Vec<Vec<String>> = cols.iter().map(|&c| table.levels(c)).collect();
        let mut pick = vec![0usize; cols.len()];
        'combos: loop {
            let matches_lhs = |row: &[String]| {
                cols.iter()
                    .enumerate()
                    .all(|(j, &c)| row[c] == level_sets[j][pick[j]])
            };
            let lhs_n = table.rows.iter().filter(|r| matches_lhs(r)).count() as u64;
            for t_val in &t_levels {
                let joint = table
                    .rows
                    .iter()
                    .filter(|r| matches_lhs(r) && r[t_idx] == *t_val)
                    .count() as u64;
                if !(joint >= 1 && joint as f64 / n as f64 >= params.min_support) {
                    continue;
                }
                let confidence = joint as f64 / lhs_n as f64;
                if confidence < params.min_confidence {
                    continue;
                }
                let lhs: Vec<Pred> = cols
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| {
                        Pred::eq(table.attrs[c].clone(), level_sets[j][pick[j]].clone()).unwrap()
                    })
                    .collect();
                out.push(
                    Rule::new(
                        lhs,
                        target,
                        t_val.clone(),
                        joint as f64 / n as f64,
                        confidence,
                        RuleOrigin::Mined,
                    )
                    .unwrap(),
                );
            }
            let mut digit = 0;
            loop {
                if digit == pick.len() {
                    break 'combos;
                }
                pick[digit] += 1;
                if pick[digit] < level_sets[digit].len() {
                    break;
                }
                pick[digit] = 0;
                digit += 1;
            }
        }
    }
    out.sort_by(canonical_cmp);
    out
}

fn count_majority(table: &CatTable, target: &str) -> (String, f64) {
    let t_idx = table.attr_index(target).unwrap();
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for row in &table.rows {
        *counts.entry(row[t_idx].as_str()).or_insert(0) += 1;
    }
    let mut best: (&str, u64) = ("", 0);
    for (value, &c) in &counts {
        if c > best.1 {
            best = (value, c);
        }
    }
    (best.0.to_string(), best.1 as f64 / table.len() as f64)
}

#[test]
fn mined_rules_match_exhaustive_enumeration() {
    criterion("mined rules match an exhaustive enumerator", || {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(901);
        let supports = [0.0, 0.05, 0.15, 0.25];
        let confidences = [0.0, 0.3, 0.5, 0.8];
        for case in 0..60 {
            let n_rows = rng.random_range(3..=12);
            let n_inputs = rng.random_range(1..=3);
            let table = random_table(&mut rng, n_rows, n_inputs);
            let params = MineParams {
                min_support: supports[rng.random_range(0..supports.len())],
                min_confidence: confidences[rng.random_range(0..confidences.len())],
                max_lhs_len: rng.random_range(1..=3),
            };
            let rs = mine_rules(&table, "t", &params).unwrap();
            let want = enumerate_rules(&table, "t", &params);
            assert_eq!(rs.rules, want, "rule list diverges on case {case}");
            let (default_class, prior) = count_majority(&table, "t");
            assert_eq!(rs.default_class, default_class, "default class, case {case}");
            assert_eq!(rs.default_prior, prior, "default prior, case {case}");
        }
        assert!(
            started.elapsed() < Duration::from_secs(10),
            "batch took {:?}",
            started.elapsed()
        );
    });
}

// ---------------------------------------------------------------------------
// 2. Pair-counting indexes against the O(n^2) definition.

/// Random assignment into k non-empty clusters.
fn random_assignment(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut a: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.random_range(0..k) })
        .collect();
    a.shuffle(rng);
    a
}

fn pair_loop(a1: &[usize], a2: &[usize]) -> (f64, f64) {
    let n = a1.len();
    let (mut both, mut first_only, mut second_only, mut neither) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            match (a1[i] == a1[j], a2[i] == a2[j]) {
                (true, true) => both += 1,
                (true, false) => first_only += 1,
                (false, true) => second_only += 1,
                (false, false) => neither += 1,
            }
        }
    }
    let rand = (both + neither) as f64 / (both + first_only + second_only + neither) as f64;
    let denom = both + first_only + second_only;
    // two all-singleton partitions agree perfectly
    let jaccard = if denom == 0 { 1.0 } else { both as f64 / denom as f64 };
    (rand, jaccard)
}

#[test]
fn pair_indexes_match_quadratic_counting() {
    criterion("rand and jaccard match O(n^2) pair counting", || {
        let mut rng = ChaCha8Rng::seed_from_u64(902);
        let features = vec![GENDER.to_string()];
        for case in 0..60 {
            let n = rng.random_range(2..=200);
            let (ds, _) = generate_cohort(&default_mixture(), n, 7000 + case, 2004).unwrap();
            let k1 = rng.random_range(1..=6).min(n);
            let k2 = rng.random_range(1..=6).min(n);
            let a1 = random_assignment(&mut rng, n, k1);
            let a2 = random_assignment(&mut rng, n, k2);
            let c1 = Clustering::from_assignment(&ds, &features, k1, a1.clone()).unwrap();
            let c2 = Clustering::from_assignment(&ds, &features, k2, a2.clone()).unwrap();
            let (rand_want, jaccard_want) = pair_loop(&a1, &a2);
            let rand_got = rand_index(&c1, &c2).unwrap();
            let jaccard_got = jaccard_index(&c1, &c2).unwrap();
            assert!(
                (rand_got - rand_want).abs() <= 1e-12,
                "rand {rand_got} vs {rand_want} on case {case}"
            );
            assert!(
                (jaccard_got - jaccard_want).abs() <= 1e-12,
                "jaccard {jaccard_got} vs {jaccard_want} on case {case}"
            );
        }
    });
}

// ---------------------------------------------------------------------------
// 3. Attribute-distribution overlap against a permutation brute force.

fn for_each_permutation(k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(current: &mut Vec<usize>, used: &mut [bool], k: usize, f: &mut impl FnMut(&[usize])) {
        if current.len() == k {
            f(current);
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                current.push(i);
                rec(current, used, k, f);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(&mut Vec::new(), &mut vec![false; k], k, f);
}

/// Same histogram arithmetic as the library, maximized over all cluster
/// permutations instead of an assignment solver. Integer throughout, so
/// agreement is exact.
fn adco_brute_force(
    ds: &Dataset,
    a1: &[usize],
    k1: usize,
    a2: &[usize],
    k2: usize,
    bins_per_attr: usize,
) -> f64 {
    enum Layout {
        Cont { lo: f64, width: f64, bins: usize },
        Cat(Vec<String>),
    }
    let layouts: Vec<Layout> = ds
        .schema
        .attrs
        .iter()
        .map(|attr| match attr.kind {
            AttrKind::Continuous => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for row in &ds.rows {
                    let v = row.continuous(&attr.name).unwrap();
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                Layout::Cont {
                    lo,
                    width: (hi - lo) / bins_per_attr as f64,
                    bins: bins_per_attr,
                }
            }
            AttrKind::Categorical => Layout::Cat(ds.levels(&attr.name)),
        })
        .collect();
    let total_bins: usize = layouts
        .iter()
        .map(|l| match l {
            Layout::Cont { bins, .. } => *bins,
            Layout::Cat(levels) => levels.len(),
        })
        .sum();

    let k = k1.max(k2);
    let histogram = |assignment: &[usize]| -> Vec<Vec<u64>> {
        let mut d = vec![vec![0u64; total_bins]; k];
        for (row, &cluster) in ds.rows.iter().zip(assignment) {
            let mut offset = 0;
            for (attr, layout) in ds.schema.attrs.iter().zip(&layouts) {
                let (bin, width) = match layout {
                    Layout::Cont { lo, width, bins } => {
                        let v = row.continuous(&attr.name).unwrap();
                        let b = if *width == 0.0 {
                            0
                        } else {
                            (((v - lo) / width) as usize).min(bins - 1)
                        };
                        (b, *bins)
                    }
                    Layout::Cat(levels) => {
                        let v = row.categorical(&attr.name).unwrap();
                        (levels.iter().position(|l| l == v).unwrap(), levels.len())
                    }
                };
                d[cluster][offset + bin] += 1;
                offset += width;
            }
        }
        d
    };
    let d1 = histogram(a1);
    let d2 = histogram(a2);
    let dot = |x: &[u64], y: &[u64]| -> u64 { x.iter().zip(y).map(|(&a, &b)| a * b).sum() };
    let mut cross = 0u64;
    for_each_permutation(k, &mut |p| {
        let s: u64 = (0..k).map(|i| dot(&d1[i], &d2[p[i]])).sum();
        cross = cross.max(s);
    });
    let self1: u64 = d1.iter().map(|row| dot(row, row)).sum();
    let self2: u64 = d2.iter().map(|row| dot(row, row)).sum();
    cross as f64 / self1.max(self2) as f64
}

#[test]
fn adco_axioms_and_brute_force_agreement() {
    criterion(
        "adco: identity 1.0, symmetry, relabeling invariance, brute force",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(903);
            let features = vec![GENDER.to_string()];
            for case in 0..50 {
                let n = rng.random_range(15..=60);
                let (ds, _) = generate_cohort(&default_mixture(), n, 7100 + case, 2004).unwrap();
                let k1 = rng.random_range(1..=4);
                let k2 = rng.random_range(1..=4);
                let bins = rng.random_range(3..=12);
                let a1 = random_assignment(&mut rng, n, k1);
                let a2 = random_assignment(&mut rng, n, k2);
                let c1 = Clustering::from_assignment(&ds, &features, k1, a1.clone()).unwrap();
                let c2 = Clustering::from_assignment(&ds, &features, k2, a2.clone()).unwrap();

                let got = adco(&c1, &c2, &ds, bins).unwrap();
                let want = adco_brute_force(&ds, &a1, k1, &a2, k2, bins);
                assert_eq!(got, want, "brute force disagrees on case {case}");

                assert_eq!(adco(&c1, &c1, &ds, bins).unwrap(), 1.0, "identity, case {case}");
                assert_eq!(
                    got,
                    adco(&c2, &c1, &ds, bins).unwrap(),
                    "symmetry, case {case}"
                );

                let mut relabel: Vec<usize> = (0..k2).collect();
                relabel.shuffle(&mut rng);
                let permuted: Vec<usize> = a2.iter().map(|&c| relabel[c]).collect();
                let c2p = Clustering::from_assignment(&ds, &features, k2, permuted).unwrap();
                assert_eq!(
                    got,
                    adco(&c1, &c2p, &ds, bins).unwrap(),
                    "relabeling, case {case}"
                );
            }
            // the documented default bin count stays wired to the public API
            let (ds, _) = generate_cohort(&default_mixture(), 30, 7777, 2004).unwrap();
            let a = random_assignment(&mut rng, 30, 3);
            let c = Clustering::from_assignment(&ds, &features, 3, a).unwrap();
            assert_eq!(adco(&c, &c, &ds, ADCO_BINS).unwrap(), 1.0);
        },
    );
}

// ---------------------------------------------------------------------------
// 4. K-means: monotone objective, optimal on small 1-D instances.

/// Minimum SSE over every labeling of `vals` into at most k groups.
fn exhaustive_optimum(vals: &[f64], k: usize) -> f64 {
    let n = vals.len();
    let mut best = f64::INFINITY;
    for code in 0..k.pow(n as u32) {
        let mut rest = code;
        let mut label = [0usize; 8];
        let mut sum = [0.0f64; 3];
        let mut count = [0usize; 3];
        for i in 0..n {
            label[i] = rest % k;
            rest /= k;
            sum[label[i]] += vals[i];
            count[label[i]] += 1;
        }
        let mut sse = 0.0;
        for i in 0..n {
            let mean = sum[label[i]] / count[label[i]] as f64;
            sse += (vals[i] - mean) * (vals[i] - mean);
        }
        best = best.min(sse);
    }
    best
}

#[test]
fn kmeans_monotone_and_optimal_on_small_lines() {
    criterion(
        "k-means: objective never increases, small 1-D instances reach the optimum",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(904);

            // every iteration of full runs over mixed cohort features
            let features: Vec<String> = ["age", "gender", "grade", "employment", "job_relevancy"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            for case in 0..12 {
                let n = rng.random_range(40..=160);
                let (ds, _) = generate_cohort(&default_mixture(), n, 7200 + case, 2004).unwrap();
                let k = rng.random_range(1..=6);
                let out = kmeans(
                    &ds,
                    &features,
                    KMeansParams {
                        k,
                        seed: case,
                        ..KMeansParams::default()
                    },
                )
                .unwrap();
                for w in out.lloyd.objective_trace.windows(2) {
                    assert!(w[1] <= w[0], "objective rose {} -> {} on case {case}", w[0], w[1]);
                }
            }

            // exhaustive comparison on 1-D instances
            let mut hits = 0;
            for case in 0..100 {
                let n = rng.random_range(2..=8);
                let k = rng.random_range(1..=3.min(n));
                let vals: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 20.0).collect();
                let optimum = exhaustive_optimum(&vals, k);
                let slack = 1e-9 * optimum.max(1.0);
                let points: Vec<Vec<f64>> = vals.iter().map(|&v| vec![v]).collect();
                let mut best_run = f64::INFINITY;
                for seed in 0..5 {
                    let init = farthest_first_init(&points, k, seed);
                    let centers: Vec<Vec<f64>> = init.iter().map(|&i| points[i].clone()).collect();
                    let out = lloyd(&points, centers, 100, 1e-12);
                    for w in out.objective_trace.windows(2) {
                        assert!(w[1] <= w[0], "objective rose on case {case}");
                    }
                    assert!(
                        out.objective >= optimum - slack,
                        "converged below the optimum on case {case}: {} vs {optimum}",
                        out.objective
                    );
                    best_run = best_run.min(out.objective);
                }
                if best_run <= optimum + slack {
                    hits += 1;
                }
            }
            assert!(hits >= 90, "best-of-5 reached the optimum in only {hits}/100");
        },
    );
}

// ---------------------------------------------------------------------------
// 5. Automatic cluster count on the generator's planted structure.

/// Rand index between two labelings via the contingency table.
fn rand_from_labels(a: &[usize], b: &[usize]) -> f64 {
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut m = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        m[x][y] += 1;
    }
    let choose2 = |x: u64| x * x.saturating_sub(1) / 2;
    let n = a.len() as u64;
    let sum_cells: u64 = m.iter().flatten().map(|&v| choose2(v)).sum();
    let sum_rows: u64 = m.iter().map(|row| choose2(row.iter().sum())).sum();
    let sum_cols: u64 = (0..kb)
        .map(|j| choose2(m.iter().map(|row| row[j]).sum()))
        .sum();
    let total = choose2(n);
    (total - sum_rows - sum_cols + 2 * sum_cells) as f64 / total as f64
}

#[test]
fn auto_k_recovers_planted_components() {
    criterion(
        "auto-k picks 3 on the default mixture and k-means tracks the truth",
        || {
            let started = Instant::now();
            let features: Vec<String> = ["age", "gender", "grade", "employment", "job_relevancy"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let mut recovered = 0;
            for seed in 1..=20 {
                let (ds, truth) = generate_cohort(&default_mixture(), 3000, seed, 2004).unwrap();
                let ts = twostep(&ds, &features, &TwoStepParams::default()).unwrap();
                let km = kmeans(
                    &ds,
                    &features,
                    KMeansParams {
                        k: 3,
                        seed,
                        ..KMeansParams::default()
                    },
                )
                .unwrap();
                let rand = rand_from_labels(&km.clustering.assignment, &truth);
                if ts.k == 3 && rand >= 0.85 {
                    recovered += 1;
                }
            }
            assert!(recovered >= 18, "recovered the mixture in only {recovered}/20 seeds");
            assert!(
                started.elapsed() < Duration::from_secs(60),
                "batch took {:?}",
                started.elapsed()
            );
        },
    );
}

// ---------------------------------------------------------------------------
// 6. Legend fixtures and model selection.

#[test]
fn legend_fixtures_pick_the_rule_model() {
    criterion("legend fixtures score correctly and pick the rule model", || {
        let mined = MiningLegend::from_rates(0.75, 0.70).unwrap();
        assert!((mined.score - 0.525).abs() <= 1e-9, "score {}", mined.score);
        let tree = MiningLegend::from_rates(0.77, 0.47).unwrap();
        assert!((tree.score - 0.3619).abs() <= 1e-9, "score {}", tree.score);
        let selection = compare_models(&mined, &tree);
        assert!(selection.selects_first, "rule model must win");
        assert!(!selection.tie);
        assert!((selection.margin - (0.525 - 0.3619)).abs() <= 1e-9);
    });
}

// ---------------------------------------------------------------------------
// 7. Six-rule replay over banded grades.

#[test]
fn six_rule_replay_fires_in_canonical_order() {
    criterion("six-rule replay fires in canonical order", || {
        let bands = AttrBands::new(GRADE, 0.0, 20.0, vec![12.7, 14.8, 16.3]).unwrap();
        let band = |v: f64| bands.label_of(v).unwrap().to_string();
        assert_eq!(band(15.0), "14.8-16.3");
        let above_127: Vec<String> = vec![band(13.0), band(15.0), band(17.0)];

        let eq = |attr: &str, value: &str| Pred::eq(attr, value).unwrap();
        let rule = |lhs: Vec<Pred>, field: &str| {
            Rule::new(lhs, FIELD, field, 0.2, 0.9, RuleOrigin::Mined).unwrap()
        };
        let rules = vec![
            rule(
                vec![
                    eq(GENDER, FEMALE),
                    eq(GRADE, &band(15.0)),
                    eq(DIPLOMA, "Math-Physics"),
                    eq(JOB_RELEVANCY, "0"),
                ],
                "Software",
            ),
            rule(
                vec![
                    eq(GENDER, MALE),
                    Pred::one_of(GRADE, above_127.clone()).unwrap(),
                    eq(DIPLOMA, "Job and Knowledge"),
                    eq(JOB_RELEVANCY, "2"),
                ],
                "Car Quality Control & Machine Tools",
            ),
            rule(
                vec![
                    eq(GENDER, MALE),
                    eq(GRADE, &band(5.0)),
                    eq(DIPLOMA, "Technical & Professional"),
                    eq(JOB_RELEVANCY, "1"),
                ],
                "Financial Services in Trade Units",
            ),
            rule(
                vec![
                    eq(GENDER, FEMALE),
                    eq(GRADE, &band(15.0)),
                    eq(DIPLOMA, "Art"),
                    eq(JOB_RELEVANCY, "0"),
                ],
                "Graphic",
            ),
            rule(
                vec![
                    eq(GENDER, MALE),
                    eq(GRADE, &band(5.0)),
                    eq(DIPLOMA, "Human Sciences"),
                    eq(JOB_RELEVANCY, "0"),
                ],
                "Accounting- Industrial",
            ),
            rule(
                vec![
                    eq(GENDER, MALE),
                    eq(DIPLOMA, "Job and Knowledge"),
                    eq(JOB_RELEVANCY, "2"),
                ],
                "Software",
            ),
        ];
        let rs = RuleSet::new(rules, "Software", 0.5, None).unwrap();

        // a female Math-Physics graduate at grade 15 lands on the first rule
        let grade_15 = band(15.0);
        let record = [
            (GENDER, FEMALE),
            (GRADE, grade_15.as_str()),
            (DIPLOMA, "Math-Physics"),
            (JOB_RELEVANCY, "0"),
        ];
        assert_eq!(
            predict_rules(&rs, &record).unwrap(),
            ("Software".to_string(), 0.9)
        );
        let fired = rs.first_match(&record).unwrap().unwrap();
        assert!(fired.lhs.iter().any(|p| p.attr() == DIPLOMA && p.matches("Math-Physics")));

        // a male Job and Knowledge graduate at grade 16 matches both the
        // grade-banded rule and the grade-free rule; the shorter lhs wins
        // because confidence and support tie
        let grade_16 = band(16.0);
        let record = [
            (GENDER, MALE),
            (GRADE, grade_16.as_str()),
            (DIPLOMA, "Job and Knowledge"),
            (JOB_RELEVANCY, "2"),
        ];
        let matching: Vec<&Rule> = rs
            .rules
            .iter()
            .filter(|r| r.matches(&record).unwrap())
            .collect();
        assert_eq!(matching.len(), 2);
        let fired = rs.first_match(&record).unwrap().unwrap();
        assert_eq!(fired.lhs.len(), 3);
        assert_eq!(fired.rhs_value, "Software");
        assert_eq!(
            predict_rules(&rs, &record).unwrap(),
            ("Software".to_string(), 0.9)
        );
        let short_pos = rs.rules.iter().position(|r| r.lhs.len() == 3).unwrap();
        let long_pos = rs
            .rules
            .iter()
            .position(|r| r.rhs_value == "Car Quality Control & Machine Tools")
            .unwrap();
        assert!(short_pos < long_pos, "grade-free rule must sort first");

        // below the grade band only the grade-free rule still fires
        let grade_10 = band(10.0);
        let record = [
            (GENDER, MALE),
            (GRADE, grade_10.as_str()),
            (DIPLOMA, "Job and Knowledge"),
            (JOB_RELEVANCY, "2"),
        ];
        let fired = rs.first_match(&record).unwrap().unwrap();
        assert_eq!(fired.lhs.len(), 3);
    });
}

// ---------------------------------------------------------------------------
// 8. Lift curves: shape invariants and the perfect predictor.

#[test]
fn lift_curves_bounded_by_ideal() {
    criterion("lift curves: monotone, exact endpoints, bounded by the ideal", || {
        let mut rng = ChaCha8Rng::seed_from_u64(908);
        for case in 0..100 {
            let n = rng.random_range(1..=60);
            let mut truths: Vec<String> = (0..n)
                .map(|_| {
                    if rng.random::<f64>() < 0.3 { "yes" } else { "no" }.to_string()
                })
                .collect();
            truths[rng.random_range(0..n)] = "yes".into();
            let predictions: Vec<(String, f64)> = (0..n)
                .map(|_| {
                    let guess = if rng.random::<bool>() { "yes" } else { "no" };
                    (guess.to_string(), rng.random::<f64>())
                })
                .collect();
            let curve = lift_curve(&predictions, &truths, "yes").unwrap();
            assert_eq!(curve.points.first(), Some(&(0.0, 0.0)), "case {case}");
            assert_eq!(curve.points.last(), Some(&(1.0, 1.0)), "case {case}");
            for w in curve.points.windows(2) {
                assert!(w[1].1 >= w[0].1, "captured fraction fell on case {case}");
            }
            for &(x, y) in &curve.points {
                assert!(
                    y <= curve.ideal_at(x) + 1e-9,
                    "model beat the ideal at x={x} on case {case}"
                );
            }
        }

        // a predictor that ranks every positive first walks the ideal curve
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        let truths: Vec<String> = (0..40)
            .map(|_| {
                if rng.random::<f64>() < 0.25 { "yes" } else { "no" }.to_string()
            })
            .collect();
        let positives = truths.iter().filter(|t| *t == "yes").count() as u64;
        assert!(positives >= 1);
        let predictions: Vec<(String, f64)> = truths
            .iter()
            .map(|t| (t.clone(), if t == "yes" { 1.0 } else { 0.0 }))
            .collect();
        let curve = lift_curve(&predictions, &truths, "yes").unwrap();
        for (i, &captured) in curve.captured.iter().enumerate() {
            assert_eq!(captured, (i as u64).min(positives), "rank {i}");
        }
        for &(x, y) in &curve.points {
            assert!((y - curve.ideal_at(x)).abs() <= 1e-12);
        }
    });
}

// ---------------------------------------------------------------------------
// 9. Rerunning the pipeline reproduces its artifacts byte for byte.

#[test]
fn pipeline_rerun_is_byte_identical() {
    criterion("pipeline reruns write byte-identical summaries and rule lists", || {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let toml = format!(
            "seed = 11\nout_dir = \"{}\"\n[input]\nn_train = 400\nn_test = 150\n[clustering]\nmax_k = 8\n",
            out.display()
        );
        let cfg = PipelineConfig::from_toml_str(&toml).unwrap();
        let tracked = [
            "summary.txt",
            "rules_field_mined.csv",
            "rules_field_tree.csv",
            "rules_class_mined.csv",
            "rules_class_tree.csv",
        ];
        run_pipeline(&cfg).unwrap();
        let first: Vec<Vec<u8>> = tracked
            .iter()
            .map(|name| fs::read(out.join(name)).unwrap())
            .collect();
        run_pipeline(&cfg).unwrap();
        for (name, before) in tracked.iter().zip(&first) {
            let after = fs::read(out.join(name)).unwrap();
            assert_eq!(&after, before, "{name} changed between runs");
        }
    });
}
