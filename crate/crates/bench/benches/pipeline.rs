use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cdroop_core::certify::check_condition3;
use cdroop_core::dynamics::build_system_matrix;
use cdroop_core::net::{kron_reduce, FullNetwork};
use cdroop_core::sim::{black_start_state, integrate, SimConfig};
use cdroop_core::spectral::analyze;
use cdroop_core::C64;
use cdroop_testkit::{certified_system, random_connected_branches};

/// System-matrix assembly plus the full spectral report.
fn bench_assemble_analyze(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_analyze");
    for n in [3usize, 6, 10] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sysd = certified_system(&mut rng, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &sysd, |b, sysd| {
            b.iter(|| {
                let sys = build_system_matrix(&sysd.net, &sysd.sp, &sysd.gains).unwrap();
                analyze(black_box(&sys)).unwrap()
            })
        });
    }
    group.finish();
}

/// End-to-end certification: both parametric conditions, margins, gain
/// threshold and the steady-state prediction.
fn bench_certify(c: &mut Criterion) {
    let mut group = c.benchmark_group("certify");
    for n in [3usize, 6, 10] {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sysd = certified_system(&mut rng, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &sysd, |b, sysd| {
            b.iter(|| check_condition3(&sysd.net, &sysd.sp, &sysd.gains, &sysd.env).unwrap())
        });
    }
    group.finish();
}

/// One second of adaptive integration from a black-start state.
fn bench_integrate(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrate_1s");
    group.sample_size(30);
    for n in [3usize, 6] {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sysd = certified_system(&mut rng, n);
        let v0 = black_start_state(&sysd.sp, 1e-3, 42).unwrap();
        let cfg = SimConfig {
            rtol: 1e-8,
            atol: 1e-12,
            ..SimConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &(), |b, _| {
            b.iter(|| {
                integrate(
                    black_box(&v0),
                    &sysd.net,
                    &sysd.sp,
                    &sysd.gains,
                    &[],
                    1.0,
                    &cfg,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

/// Reduction of a 30-bus grid onto 10 converter buses.
fn bench_reduce(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let n_total = 30;
    let m = 10;
    let branches = random_connected_branches(&mut rng, n_total);
    let mut shunts = vec![C64::new(0.0, 0.0); n_total];
    for s in shunts.iter_mut().skip(m) {
        *s = C64::new(rng.gen_range(0.05..0.2), rng.gen_range(-1.0..-0.2));
    }
    let full = FullNetwork::new(n_total, branches, shunts, (0..m).collect()).unwrap();
    c.bench_function("kron_reduce_30_to_10", |b| {
        b.iter(|| kron_reduce(black_box(&full), 0.9).unwrap())
    });
}

criterion_group!(
    benches,
    bench_assemble_analyze,
    bench_certify,
    bench_integrate,
    bench_reduce
);
criterion_main!(benches);
