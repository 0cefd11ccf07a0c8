use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spacetime_lab::grid_calculus::{quantize_weyl, SpacetimeGrid};
use spacetime_lab::hamilton_flow::{certify_nontrapping, CertifyOptions};
use spacetime_lab::metric_symbols::{conjugate_symbol, make_perturbed_minkowski, verify_weight_inequality, MetricSpec, WeightCase, WeightSpec};
use spacetime_lab::par;

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", true), ("sequential", false)]
}

fn run<R>(parallel: bool, f: impl FnOnce() -> R) -> R {
    if parallel {
        f()
    } else {
        par::sequential(f)
    }
}

fn weight_sampling(c: &mut Criterion) {
    let field = make_perturbed_minkowski(MetricSpec::bump(0.1, 2.0, 1.5)).unwrap();
    let spec = WeightSpec::new(0.5, 0.25, 0.3, 1.0, 0.4);
    let mut group = c.benchmark_group("weight_inequality");
    for n in [10_000usize, 40_000] {
        for (label, parallel) in modes() {
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, &n| {
                b.iter(|| run(parallel, || verify_weight_inequality(&field, &spec, WeightCase::Incoming { eps: 0.1, r: 1.0, big_r: 10.0 }, n, 1)))
            });
        }
    }
    group.finish();
}

fn certification(c: &mut Criterion) {
    let field = make_perturbed_minkowski(MetricSpec::bump(0.1, 2.0, 1.5)).unwrap();
    let opts = CertifyOptions::default();
    let mut group = c.benchmark_group("certify_nontrapping");
    group.sample_size(10);
    for (label, parallel) in modes() {
        group.bench_function(label, |b| b.iter(|| run(parallel, || certify_nontrapping(&field, 10.0, &opts).unwrap())));
    }
    group.finish();
}

fn weyl_quantization(c: &mut Criterion) {
    let mut group = c.benchmark_group("quantize_weyl");
    group.sample_size(10);
    for n in [16usize, 24] {
        let grid = SpacetimeGrid::square(4.0, n).unwrap();
        for (label, parallel) in modes() {
            group.bench_with_input(BenchmarkId::new(label, n), &grid, |b, g| b.iter(|| run(parallel, || quantize_weyl(g, conjugate_symbol))));
        }
    }
    group.finish();
}

criterion_group!(benches, weight_sampling, certification, weyl_quantization);
criterion_main!(benches);
