use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use torusnf::exec::Execution;
use torusnf::exppoly::{ep_bilinear_with, ExpPolyField, PolyField};
use torusnf::init::{random_field, rng_from_seed};
use torusnf::solver::{evolve, EvolveOptions};
use torusnf::spectral::{bilinear_with, Dim, ModeSet};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bilinear(c: &mut Criterion) {
    let mut g = c.benchmark_group("bilinear");
    for lambda in [10, 20] {
        let ms = ModeSet::shared(Dim::Three, lambda).unwrap();
        let mut rng = rng_from_seed(1);
        let u = random_field(&ms, 1.0, &mut rng).unwrap();
        let v = random_field(&ms, 1.0, &mut rng).unwrap();
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, lambda), &lambda, |b, _| {
                b.iter(|| bilinear_with(exec, black_box(&u), black_box(&v)).unwrap())
            });
        }
    }
    g.finish();
}

fn exp_poly(c: &mut Criterion) {
    let ms = ModeSet::shared(Dim::Three, 8).unwrap();
    let mut rng = rng_from_seed(2);
    let mut f = ExpPolyField::zero(Arc::clone(&ms));
    for m in 1..=3u32 {
        let coeffs = (0..m as usize).map(|_| random_field(&ms, 1.0, &mut rng).unwrap()).collect();
        f.add_term(m, &PolyField::from_coeffs(Arc::clone(&ms), coeffs).unwrap());
    }
    let mut g = c.benchmark_group("ep_bilinear");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| ep_bilinear_with(exec, black_box(&f), black_box(&f)).unwrap()));
    }
    g.finish();
}

fn time_stepping(c: &mut Criterion) {
    let ms = ModeSet::shared(Dim::Three, 10).unwrap();
    let u0 = random_field(&ms, 0.5, &mut rng_from_seed(3)).unwrap();
    let mut g = c.benchmark_group("evolve");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = EvolveOptions { exec, ..EvolveOptions::new(1e-2, 0.5, 50) };
        g.bench_function(name, |b| b.iter(|| evolve(black_box(&u0), &opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bilinear, exp_poly, time_stepping);
criterion_main!(benches);
