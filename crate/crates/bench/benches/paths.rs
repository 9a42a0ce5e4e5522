//! `r(A) v` through one solve against forming `r(A)` first.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ratmin_core::matrix::{make_normal_matrix, rational_apply_vec, rational_apply_with, ApplyOptions};
use ratmin_core::{cheb_nodes, ChebCoeffs, Domain, RationalApproximant, SpectrumSpec};

fn approximant() -> RationalApproximant {
    let num = ChebCoeffs::new(vec![0.2, 0.5, -0.1, 0.05, 0.02, -0.01]).unwrap();
    let den = ChebCoeffs::new(vec![3.0, 0.4, 0.3, -0.2, 0.1, 0.05]).unwrap();
    RationalApproximant::new(Domain::unit(), num, den)
}

fn paths(c: &mut Criterion) {
    let r = approximant();
    let mut g = c.benchmark_group("apply");
    g.sample_size(10);
    for k in [100, 300, 600] {
        let a = make_normal_matrix(&SpectrumSpec::new(cheb_nodes(k).into(), 7).unwrap());
        let v = vec![1.0 / (k as f64).sqrt(); k];
        g.bench_with_input(BenchmarkId::new("matvec", k), &a, |b, a| b.iter(|| rational_apply_vec(&r, a, &v).unwrap()));
        g.bench_with_input(BenchmarkId::new("explicit", k), &a, |b, a| {
            b.iter(|| {
                let opts = ApplyOptions { refine: false, residual: false };
                rational_apply_with(&r, a, opts).unwrap().result.matvec(&v)
            })
        });
    }
    g.finish();
}

criterion_group!(benches, paths);
criterion_main!(benches);
