use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use memf_bench::quadratic_grid;
use memf_core::{phi_from_theta, solve, SolveOptions, SolverKind};

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_16x16");
    group.sample_size(10);
    for l in [4, 8, 16] {
        let model = quadratic_grid(16, l, 0);
        for kind in [SolverKind::Reference, SolverKind::Poly, SolverKind::Block] {
            group.bench_with_input(BenchmarkId::new(kind.name(), l), &model, |b, m| {
                b.iter(|| solve(m, kind, SolveOptions::default()).unwrap())
            });
        }
    }
    group.finish();
}

fn construction(c: &mut Criterion) {
    let model = quadratic_grid(64, 16, 0);
    c.bench_function("phi_from_theta_64x64_l16", |b| b.iter(|| phi_from_theta(&model).unwrap()));
}

criterion_group!(benches, solvers, construction);
criterion_main!(benches);
