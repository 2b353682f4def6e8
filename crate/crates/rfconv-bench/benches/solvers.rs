use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rfconv::asymptotics::{self, Family, KernelQuantity};
use rfconv::fixedpoint::{EquationFamily, FixedPointSolver};
use rfconv::simulator::{sample_instance, Dims};
use rfconv_bench::proportional;

fn fixed_point(c: &mut Criterion) {
    let params = proportional("relu", 0.0);
    let solver = FixedPointSolver::default();
    c.bench_function("solve_at_zero/ubar", |b| {
        b.iter(|| {
            solver.solve_at_zero(black_box(EquationFamily::Ubar { lambda_bar: 5.0 }), &params)
        })
    });
    c.bench_function("solve_at_zero/risk", |b| {
        b.iter(|| solver.solve_at_zero(black_box(EquationFamily::RiskNu), &params))
    });
}

fn asymptotic(c: &mut Criterion) {
    let params = proportional("relu", 0.1);
    c.bench_function("ubar_point", |b| {
        b.iter(|| asymptotics::ubar_point(black_box(0.8), &params))
    });
    c.bench_function("risk_min_norm", |b| {
        b.iter(|| asymptotics::risk_min_norm(black_box(&params)))
    });
    c.bench_function("dual_value/T", |b| {
        b.iter(|| asymptotics::dual_value(Family::T, black_box(10.0), &params))
    });
    c.bench_function("kernel_limit/u_alpha", |b| {
        b.iter(|| {
            asymptotics::kernel_limit(KernelQuantity::UbarAlpha, black_box(100.0), 1.5, &params)
        })
    });
}

fn simulation(c: &mut Criterion) {
    let params = proportional("relu", 0.1);
    let dims = Dims::new(40, 100, 60).unwrap();
    let params = params.with_psi(dims.psi1(), dims.psi2());
    let mut group = c.benchmark_group("simulator");
    group.sample_size(20);
    group.bench_function("sample_instance", |b| {
        b.iter(|| sample_instance(dims, &params, black_box(7)))
    });
    group.bench_function("maximizer_t", |b| {
        b.iter_batched(
            || sample_instance(dims, &params, 7).unwrap(),
            |inst| inst.maximizer_t(black_box(1.0)),
            BatchSize::LargeInput,
        )
    });
    group.bench_function("maximizer_u", |b| {
        b.iter_batched(
            || sample_instance(dims, &params, 7).unwrap(),
            |inst| inst.maximizer_u(black_box(1.0)),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, fixed_point, asymptotic, simulation);
criterion_main!(benches);
