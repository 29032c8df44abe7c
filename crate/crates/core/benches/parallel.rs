use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use indexlab::checks::run_scenarios;
use indexlab::par::Exec;
use indexlab::scenario::presets;

// Cheap presets only; the point is the scheduling overhead and speedup, not the heavy cases.
fn batch() -> Vec<indexlab::scenario::Scenario> {
    presets()
        .into_iter()
        .filter(|s| s.name.starts_with("circle-winding") || s.name.starts_with("split-") || s.name == "eta-lattice")
        .collect()
}

fn scenarios(c: &mut Criterion) {
    let batch = batch();
    let mut g = c.benchmark_group("run_scenarios");
    g.sample_size(10);
    for (label, exec) in [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)] {
        g.bench_with_input(BenchmarkId::new(label, batch.len()), &exec, |b, &exec| {
            b.iter(|| run_scenarios(&batch, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, scenarios);
criterion_main!(benches);
