use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use polarlab_bench::{config, exponent, symmetric};
use polarlab_core::certify::certified_max;
use polarlab_core::frames::synthesize_untf;
use polarlab_core::linalg::jacobi_eigen;
use polarlab_core::planar::{
    equidistributed, equidistributed_grid_max, riesz_energy, riesz_energy_closed,
};
use polarlab_core::potential;
use polarlab_core::signsum::{max_sign_sum_exact, max_sign_sum_local};

fn potentials(c: &mut Criterion) {
    let cfg = config(64, 8);
    let v = cfg.vector(0).to_vec();
    for p in [1.0, 1.5, 2.0] {
        let p = exponent(p);
        c.bench_function(&format!("potential n=64 d=8 p={}", p.get()), |b| {
            b.iter(|| potential(black_box(&cfg), black_box(&v), p).unwrap())
        });
    }
}

fn certifier(c: &mut Criterion) {
    let mut g = c.benchmark_group("certified_max");
    g.sample_size(10);
    for (n, d, p) in [(12, 3, 1.0), (12, 3, 2.0), (8, 4, 1.5)] {
        let cfg = config(n, d);
        let p = exponent(p);
        g.bench_function(format!("n={n} d={d} p={} delta=1e-3", p.get()), |b| {
            b.iter(|| certified_max(black_box(&cfg), p, 1e-3).unwrap())
        });
    }
    g.finish();
}

fn eigen(c: &mut Criterion) {
    for d in [4, 16, 64] {
        let m = symmetric(d);
        c.bench_function(&format!("jacobi d={d}"), |b| {
            b.iter(|| jacobi_eigen(black_box(&m), d))
        });
    }
}

fn signs(c: &mut Criterion) {
    let mut g = c.benchmark_group("signsum");
    g.sample_size(10);
    let cfg = config(20, 4);
    g.bench_function("exact n=20 d=4", |b| {
        b.iter(|| max_sign_sum_exact(black_box(&cfg)).unwrap())
    });
    g.bench_function("local n=20 d=4", |b| {
        b.iter(|| max_sign_sum_local(black_box(&cfg), 1))
    });
    g.finish();
}

fn frames(c: &mut Criterion) {
    let mut g = c.benchmark_group("frames");
    g.sample_size(10);
    g.bench_function("synthesize_untf n=12 d=4", |b| {
        b.iter(|| synthesize_untf(12, 4, black_box(3)).unwrap())
    });
    g.finish();
}

fn planar(c: &mut Criterion) {
    let p = exponent(3.0);
    let pts = equidistributed(32).unwrap();
    c.bench_function("riesz direct n=32", |b| {
        b.iter(|| riesz_energy(black_box(&pts), p))
    });
    c.bench_function("riesz closed n=32", |b| {
        b.iter(|| riesz_energy_closed(black_box(32), p).unwrap())
    });
    c.bench_function("grid max n=8 per_point=1e4", |b| {
        b.iter(|| equidistributed_grid_max(black_box(8), p, 10_000))
    });
}

criterion_group!(benches, potentials, certifier, eigen, signs, frames, planar);
criterion_main!(benches);
