use std::hint::black_box;

use covshrink::study::{build_true_matrix, TrueMatrixId};
use covshrink::{cholesky, givens_rotation_product, symmetric_eigen, RngStream, SpdMatrix, sample_wishart, WishartParams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn random_spd(p: usize, seed: u64) -> SpdMatrix {
    let params = WishartParams::new((p + 2) as f64, SpdMatrix::identity(p)).unwrap();
    sample_wishart(&mut RngStream::new(seed), &params)
}

fn factorizations(c: &mut Criterion) {
    let mut group = c.benchmark_group("factorize");
    for p in [5, 20, 50] {
        let m = random_spd(p, p as u64).into_matrix();
        group.bench_with_input(BenchmarkId::new("cholesky", p), &m, |b, m| b.iter(|| cholesky(black_box(m))));
        group.bench_with_input(BenchmarkId::new("eigen", p), &m, |b, m| b.iter(|| symmetric_eigen(black_box(m))));
    }
    group.finish();
}

fn inverse(c: &mut Criterion) {
    let m = build_true_matrix(TrueMatrixId::C2);
    c.bench_function("spd_inverse/5", |b| b.iter(|| black_box(&m).inverse()));
    let angles = TrueMatrixId::C2.givens_angles().unwrap();
    c.bench_function("givens_product/5", |b| b.iter(|| givens_rotation_product(5, black_box(&angles))));
}

criterion_group!(benches, factorizations, inverse);
criterion_main!(benches);
