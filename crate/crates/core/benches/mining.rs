//! Rule-mining benchmark over a discretized synthetic cohort, timed under a
//! one-worker rayon pool and the default pool (or the sequential code when
//! built with `--no-default-features`).

use candmine_core::data::CatTable;
use candmine_core::ingest::{discretize, BandSpec};
use candmine_core::models::{mine_rules, MineParams};
use candmine_core::synth::{default_mixture, generate_cohort};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use std::time::Duration;

fn banded_cohort(n: usize) -> CatTable {
    let (ds, _) = generate_cohort(&default_mixture(), n, 7, 2004).unwrap();
    let bands = BandSpec::default_for(&ds).unwrap();
    discretize(&ds, &bands).unwrap()
}

fn bench_mining(c: &mut Criterion) {
    let mut group = c.benchmark_group("mine_rules");
    group
        .sample_size(10)
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(4));
    for n in [500, 2000] {
        let table = banded_cohort(n);
        let params = MineParams::default();
        let work = || {
            black_box(mine_rules(black_box(&table), "field", &params).unwrap());
        };
        #[cfg(feature = "parallel")]
        {
            let single = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap();
            // worker count must not change the mined list
            let a = single.install(|| mine_rules(&table, "field", &params)).unwrap();
            let b = mine_rules(&table, "field", &params).unwrap();
            assert_eq!(a.rules, b.rules);
            group.bench_function(BenchmarkId::new("one-worker", n), |b| {
                b.iter(|| single.install(work))
            });
            group.bench_function(BenchmarkId::new("default-pool", n), |b| b.iter(work));
        }
        #[cfg(not(feature = "parallel"))]
        group.bench_function(BenchmarkId::new("sequential", n), |b| b.iter(work));
    }
    group.finish();
}

criterion_group!(benches, bench_mining);
criterion_main!(benches);
