use std::hint::black_box;

use causalpt::semgen::{builtin_config, generate_dataset, generate_sample, SplitKind};
use criterion::{criterion_group, criterion_main, Criterion, Throughput};

fn single_sample(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample");
    for preset in ["SL", "SNL", "XLNL", "Wide10"] {
        let config = builtin_config(preset).unwrap();
        let mut index = 0usize;
        g.bench_function(preset, |b| {
            b.iter(|| {
                index += 1;
                generate_sample(black_box(&config), SplitKind::Train, index, None).unwrap()
            })
        });
    }
    g.finish();
}

fn dataset(c: &mut Criterion) {
    let config = builtin_config("SL").unwrap().with_sizes(200, 50, 50);
    let mut g = c.benchmark_group("dataset");
    g.throughput(Throughput::Elements(350));
    g.sample_size(10);
    g.bench_function("SL_350", |b| b.iter(|| generate_dataset(black_box(&config)).unwrap()));
    g.finish();
}

criterion_group!(benches, single_sample, dataset);
criterion_main!(benches);
