use criterion::{black_box, criterion_group, criterion_main, Criterion};

use entromin::experiments::gen_instance;
use entromin::operators::{make_srm, make_wavelet_frame};
use entromin::shrinkage::soft_threshold;
use entromin::{solve, RandomSeed, RegularizerSpec, SolverConfig};

fn shrinkage(c: &mut Criterion) {
    let xs: Vec<(f64, f64)> = (0..4096)
        .map(|k| {
            let t = k as f64 / 4096.0;
            (6.0 * t - 3.0, 4.0 * (t * 7.0).fract() - 2.0)
        })
        .collect();
    c.bench_function("soft_threshold 4096", |b| {
        b.iter(|| xs.iter().map(|&(x, tau)| soft_threshold(black_box(x), black_box(tau))).sum::<f64>())
    });
}

fn operators(c: &mut Criterion) {
    let side = 64;
    let n = side * side;
    let srm = make_srm(n / 2, n, RandomSeed::new(3, 0)).unwrap();
    let frame = make_wavelet_frame(side, 3).unwrap();
    let s: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
    let coeffs = frame.adjoint(&s).unwrap();
    c.bench_function("srm apply 4096 -> 2048", |b| b.iter(|| srm.apply(black_box(&s)).unwrap()));
    c.bench_function("frame synthesis 64x64", |b| b.iter(|| frame.apply(black_box(&coeffs)).unwrap()));
    c.bench_function("frame analysis 64x64", |b| b.iter(|| frame.adjoint(black_box(&s)).unwrap()));
}

fn solver(c: &mut Criterion) {
    let inst = gen_instance(200, 100, 15, 7, 0.0).unwrap();
    let mut group = c.benchmark_group("solve N=200 M=100 S=15");
    group.sample_size(10);
    for spec in [
        RegularizerSpec::l1(),
        RegularizerSpec::sef(1.1).unwrap(),
        RegularizerSpec::renyi(1.1, 1.1).unwrap(),
        RegularizerSpec::lpp(0.5).unwrap(),
    ] {
        let cfg = SolverConfig::new(spec);
        group.bench_function(spec.penalty().name(), |b| b.iter(|| solve(&inst.y, &inst.a, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, shrinkage, operators, solver);
criterion_main!(benches);
