//! Compares the data-parallel grid evaluation against a single-threaded
//! pool on the same workload: multipoint Pade errors on a ring of sample
//! points. Built without the `parallel` feature, both cases measure the
//! sequential fallback.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use markov_approx::approx::{pade, pade_error, MarkovFunction, MuSpec};
use markov_approx::basis::Poly;
use markov_approx::geometry::{IntervalSystem, Side};
use markov_approx::par_map;
use markov_approx::quad::DEFAULT_BAND_ORDER;
use markov_approx::scalarmaps::InterpolationScheme;
use num_complex::Complex64;

fn workload() -> (MarkovFunction, markov_approx::approx::RationalApproximant, Vec<Complex64>) {
    let sys = IntervalSystem::new(&[-0.7, -0.3, 0.2, 0.6]).unwrap();
    let mf = MarkovFunction::new(&sys, MuSpec::One, Poly::new(vec![0.0, 1.0])).unwrap();
    let r = pade(&mf, &InterpolationScheme::all_infinity(8), DEFAULT_BAND_ORDER).unwrap();
    let grid: Vec<Complex64> = (0..64)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            2.0 * Complex64::new(th.cos(), th.sin())
        })
        .collect();
    (mf, r, grid)
}

fn eval_grid(mf: &MarkovFunction, r: &markov_approx::approx::RationalApproximant, grid: &[Complex64]) -> f64 {
    par_map(grid, |&z| {
        pade_error(mf, r, z, Side::None, DEFAULT_BAND_ORDER)
            .map(|e| e.norm())
            .unwrap_or(f64::NAN)
    })
    .iter()
    .sum()
}

fn bench(c: &mut Criterion) {
    let (mf, r, grid) = workload();
    let mut group = c.benchmark_group("grid-pade-error");

    group.bench_function("default-pool", |b| {
        b.iter_batched(|| (), |()| eval_grid(&mf, &r, &grid), BatchSize::SmallInput)
    });

    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function("single-thread-pool", |b| {
            b.iter_batched(
                || (),
                |()| single.install(|| eval_grid(&mf, &r, &grid)),
                BatchSize::SmallInput,
            )
        });
    }

    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
