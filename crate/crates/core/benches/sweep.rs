//! Parallel against sequential execution of a bench sweep.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use elq::harness::par;
use elq::harness::{bench, BenchStrategy, Workload};

fn cases() -> Vec<(usize, Workload, BenchStrategy)> {
    let mut out = Vec::new();
    for n in [50, 100, 200] {
        for w in [Workload::Install, Workload::DoubleWidth] {
            for s in BenchStrategy::ALL {
                out.push((n, w, s));
            }
        }
    }
    out
}

fn sweep(c: &mut Criterion) {
    let cases = cases();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("parallel", cases.len()), &cases, |b, cases| {
        b.iter(|| par::map(cases, |(n, w, s)| bench(*n, *w, *s).unwrap()))
    });
    group.bench_with_input(BenchmarkId::new("sequential", cases.len()), &cases, |b, cases| {
        b.iter(|| par::map_sequential(cases, |(n, w, s)| bench(*n, *w, *s).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
