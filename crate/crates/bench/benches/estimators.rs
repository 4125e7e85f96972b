use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wodlab::counting::estimate_lambda;
use wodlab::deviation::estimate_sum_tail;
use wodlab::risk::simulate_path;
use wodlab::{CountingSpec, DependenceSpec, MarginalSpec, Method, RiskModelSpec, StreamKey};

fn centered_pareto() -> MarginalSpec {
    MarginalSpec::shifted(MarginalSpec::pareto(2.0, 1.0).unwrap(), 2.0).unwrap()
}

fn sum_tail(c: &mut Criterion) {
    let m = centered_pareto();
    let key = StreamKey::from_seed(1);
    let mut g = c.benchmark_group("sum_tail_n50_x200_10k");
    g.sample_size(20);
    let cases = [
        ("crude_independent", DependenceSpec::independent(), Method::CrudeMc),
        ("conditional_independent", DependenceSpec::independent(), Method::AsmussenKroese),
        ("crude_fgm_chain", DependenceSpec::fgm_chain(0.5).unwrap(), Method::CrudeMc),
        ("crude_gaussian_ar1", DependenceSpec::gaussian_ar1(0.5).unwrap(), Method::CrudeMc),
    ];
    for (name, dep, method) in cases {
        g.bench_with_input(BenchmarkId::from_parameter(name), &dep, |b, dep| {
            b.iter(|| estimate_sum_tail(&m, dep, 50, 200.0, method, 10_000, &key).unwrap())
        });
    }
    g.finish();
}

fn risk_paths(c: &mut Criterion) {
    let claim = MarginalSpec::pareto(2.0, 1.0).unwrap();
    let model = RiskModelSpec::new(claim, DependenceSpec::independent(), CountingSpec::poisson(1.0).unwrap(), 2.2).unwrap();
    let key = StreamKey::from_seed(2);
    c.bench_function("risk_path_t100", |b| {
        let mut rep = 0u64;
        b.iter(|| {
            rep += 1;
            black_box(simulate_path(&model, 100.0, &key, rep).unwrap().max_partial_sum())
        })
    });
}

fn renewal_function(c: &mut Criterion) {
    let spec = CountingSpec::renewal(MarginalSpec::exponential(1.0).unwrap(), DependenceSpec::fgm_chain(0.5).unwrap()).unwrap();
    let key = StreamKey::from_seed(3);
    let mut g = c.benchmark_group("renewal_lambda_t100_2k");
    g.sample_size(20);
    g.bench_function("fgm_chain_exponential", |b| b.iter(|| estimate_lambda(&spec, 100.0, 2_000, &key).unwrap()));
    g.finish();
}

criterion_group!(benches, sum_tail, risk_paths, renewal_function);
criterion_main!(benches);
