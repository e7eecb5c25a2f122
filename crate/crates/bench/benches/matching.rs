use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use xzzx::min_weight_perfect_matching;
use xzzx_bench::random_graph;

fn blossom(c: &mut Criterion) {
    let mut group = c.benchmark_group("blossom-complete");
    for n in [10, 40, 100, 200] {
        let g = random_graph(n, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| min_weight_perfect_matching(g).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, blossom);
criterion_main!(benches);
