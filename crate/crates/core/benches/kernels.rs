//! Sequential vs. parallel execution of the data-parallel loops.
//!
//! "sequential" runs inside a one-thread rayon pool, "parallel" in the
//! default global pool. Build with `--no-default-features` to compile the
//! sequential fallback instead of rayon.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use regenline::analysis::one_step_mixture;
use regenline::regen::default_dim;
use regenline::wigner::{default_grid_spec, wigner_of_mixture};
use regenline::{
    apply_kernel, coherent_number_distribution, composite_step_kernel, iterate_chain,
    ChainConfig, Complex64,
};

fn modes() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        (
            "sequential",
            rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap(),
        ),
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn kernel_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("composite_kernel");
    group.sample_size(10);
    for (name, pool) in modes() {
        for beta in [10.0, 20.0] {
            let dim = default_dim(beta * beta);
            group.bench_with_input(BenchmarkId::new(name, beta), &beta, |b, &beta| {
                b.iter(|| {
                    pool.install(|| {
                        composite_step_kernel(black_box(Complex64::new(beta, 0.0)), 0.5, dim).unwrap()
                    })
                })
            });
        }
    }
    group.finish();
}

fn kernel_apply(c: &mut Criterion) {
    let beta = Complex64::new(20.0, 0.0);
    let dim = default_dim(400.0);
    let kernel = composite_step_kernel(beta, 1.0, dim).unwrap();
    let p = coherent_number_distribution(400.0, dim).unwrap();
    let mut group = c.benchmark_group("apply_kernel");
    for (name, pool) in modes() {
        group.bench_function(name, |b| {
            b.iter(|| pool.install(|| apply_kernel(black_box(&kernel), black_box(&p)).unwrap()))
        });
    }
    group.finish();
}

fn chain(c: &mut Criterion) {
    let cfg = ChainConfig::uniform(Complex64::new(20.0, 0.0), 1.0, 100, None).unwrap();
    let mut group = c.benchmark_group("chain_beta20_n100");
    group.sample_size(10);
    for (name, pool) in modes() {
        group.bench_function(name, |b| b.iter(|| pool.install(|| iterate_chain(black_box(&cfg)).unwrap())));
    }
    group.finish();
}

fn wigner(c: &mut Criterion) {
    let mix = one_step_mixture(Complex64::new(20.0, 0.0), None).unwrap();
    let spec = default_grid_spec(&mix, 121).unwrap();
    let mut group = c.benchmark_group("wigner_grid_121");
    group.sample_size(10);
    for (name, pool) in modes() {
        group.bench_function(name, |b| {
            b.iter(|| pool.install(|| wigner_of_mixture(black_box(&mix), &spec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, kernel_build, kernel_apply, chain, wigner);
criterion_main!(benches);
