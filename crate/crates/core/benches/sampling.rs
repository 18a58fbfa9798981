use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use finsler_douglas::douglas::is_douglas;
use finsler_douglas::par::Exec;
use finsler_douglas::sampling::SampleConfig;
use finsler_douglas::solutions::{catalog, CatalogParams};
use std::hint::black_box;

fn douglas_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("is_douglas");
    group.sample_size(10);
    for name in ["example2", "funk"] {
        let item = catalog(name, &CatalogParams::default()).unwrap();
        let phi = item.closed.clone().unwrap();
        let chart = item.chart.build(3).unwrap();
        let cfg = SampleConfig::new(64, 7);
        for (label, exec) in [
            ("sequential", Exec::Sequential),
            ("parallel", Exec::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(label, name), &exec, |b, &exec| {
                b.iter(|| black_box(is_douglas(&chart, &phi, &cfg, 1e-6, exec).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, douglas_sampling);
criterion_main!(benches);
