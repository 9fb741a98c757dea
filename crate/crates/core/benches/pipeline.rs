//! Sequential against rayon execution: the rows of one large prime, and a
//! short range scan spread over worker threads.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use irregular::par::Parallelism;
use irregular::pipeline::{compute_irregular_with, PipelineOptions, Strategy};
use irregular::scan::{run_scan, ScanConfig};

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("rayon", Parallelism::Rayon),
];

fn single_prime(c: &mut Criterion) {
    let mut group = c.benchmark_group("single prime");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    // one prime per strategy, all near 10^6
    for (p, strategy) in [
        (1_000_211u64, None),
        (999_983, Some(Strategy::Umbrella)),
        (1_000_003, None),
    ] {
        for (name, rows) in MODES {
            let opts = PipelineOptions {
                force: strategy,
                rows,
                retry_on_checksum_failure: true,
            };
            let label = compute_irregular_with(p, opts).strategy;
            group.bench_with_input(BenchmarkId::new(format!("{label}/{name}"), p), &p, |b, &p| {
                b.iter(|| compute_irregular_with(p, opts))
            });
        }
    }
    group.finish();
}

fn range_scan(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get()).max(2);
    let mut group = c.benchmark_group("scan 20000..40000");
    group.sample_size(10);
    for (name, mode) in MODES {
        let mut cfg = ScanConfig::new(20_000, 40_000, dir.path().join(name));
        cfg.mode = mode;
        cfg.jobs = if mode == Parallelism::Sequential { 1 } else { jobs };
        group.bench_function(name, |b| b.iter(|| run_scan(&cfg, None).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, single_prime, range_scan);
criterion_main!(benches);
