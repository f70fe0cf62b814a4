use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ticksim::clock::{ladder_clock, quasi_ideal_clock, QuasiIdealParams};
use ticksim::par::Execution;
use ticksim::stats::{sample_trajectories_with, SamplerOptions};

fn sampling(c: &mut Criterion) {
    let clocks = [
        ("ladder_5", ladder_clock(5).unwrap(), 60.0),
        ("quasi_ideal_8", quasi_ideal_clock(8, &QuasiIdealParams::defaults(8)).unwrap(), 48.0),
    ];
    let mut group = c.benchmark_group("sample_trajectories");
    group.sample_size(10);
    for (name, spec, t_max) in &clocks {
        for (label, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let opts = SamplerOptions {
                execution,
                first_id: 0,
            };
            group.bench_with_input(BenchmarkId::new(label, name), spec, |b, spec| {
                b.iter(|| sample_trajectories_with(spec, *t_max, black_box(2_000), 7, &opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sampling);
criterion_main!(benches);
