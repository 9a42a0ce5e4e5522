//! Scalar kernels, one feasibility LP, and complete fits.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ratmin_core::functions::Builtin;
use ratmin_core::minimax::assemble_feasibility;
use ratmin_core::{clenshaw, equidistant_grid, fit, solve_lp, BoundSpec, FitProblem};

fn problem(f: Builtin, deg: usize, u: f64) -> FitProblem {
    let grid = equidistant_grid(&f.domain(), 400);
    let values = grid.iter().map(|x| f.eval(x)).collect();
    FitProblem::new(f.domain(), grid, values, deg, deg, BoundSpec::new(1.0, u, false).unwrap()).unwrap()
}

fn scalar(c: &mut Criterion) {
    let coeffs: Vec<f64> = (0..21).map(|j| 1.0 / (1 + j) as f64).collect();
    c.bench_function("clenshaw_deg20", |b| b.iter(|| clenshaw(black_box(&coeffs), black_box(0.37))));
    c.bench_function("erf_1000", |b| {
        b.iter(|| (0..1000).map(|i| ratmin_core::functions::erf(-6.0 + 0.012 * i as f64)).sum::<f64>())
    });
}

fn level_lp(c: &mut Criterion) {
    let mut g = c.benchmark_group("feasibility_lp");
    g.sample_size(20);
    for deg in [3, 5, 10] {
        let p = problem(Builtin::Relu, deg, 100.0);
        let lp = assemble_feasibility(&p, 0.01).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(deg), &lp, |b, lp| b.iter(|| solve_lp(lp, None).unwrap()));
    }
    g.finish();
}

fn fits(c: &mut Criterion) {
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    let p = problem(Builtin::Relu, 5, 100.0).with_epsilon(1e-8).unwrap();
    g.bench_function("relu_5_5", |b| b.iter(|| fit(&p).unwrap()));
    let p = problem(Builtin::F3, 7, 50.0).with_epsilon(1e-8).unwrap();
    g.bench_function("f3_7_7", |b| b.iter(|| fit(&p).unwrap()));
    g.finish();
}

criterion_group!(benches, scalar, level_lp, fits);
criterion_main!(benches);
