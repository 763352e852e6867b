use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use circlab::symmetry::{orbit_distance, orbit_distance_grid, shift};
use circlab::zeronum::{default_tol, zero_number};
use circlab::{evolve, HullPoint, Nonlinearity};
use circlab_bench::wavy_field;

const STEPS: usize = 100;

fn etdrk4(c: &mut Criterion) {
    let mut group = c.benchmark_group("etdrk4_100_steps");
    for n in [32, 64, 256] {
        let u0 = wavy_field(n, 1);
        for (name, nl) in [
            ("appendix", Nonlinearity::appendix()),
            ("burgers", Nonlinearity::burgers(1.0)),
        ] {
            group.bench_with_input(BenchmarkId::new(name, n), &u0, |b, u0| {
                b.iter(|| {
                    evolve(
                        black_box(u0),
                        HullPoint::new(0.0),
                        &nl,
                        1e-3 * STEPS as f64,
                        1e-3,
                        STEPS,
                    )
                    .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn zeros(c: &mut Criterion) {
    let mut group = c.benchmark_group("zero_number");
    for n in [64, 256, 1024] {
        let u = wavy_field(n, 7);
        let tol = default_tol(&u);
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| zero_number(black_box(u), tol).unwrap())
        });
    }
    group.finish();
}

fn orbit(c: &mut Criterion) {
    let mut group = c.benchmark_group("orbit_distance");
    for n in [64, 256] {
        let u = wavy_field(n, 3);
        let v = shift(&wavy_field(n, 3), 0.7).scale(1.01);
        group.bench_with_input(BenchmarkId::new("grid", n), &(&u, &v), |b, (u, v)| {
            b.iter(|| orbit_distance_grid(black_box(u), black_box(v)))
        });
        group.bench_with_input(BenchmarkId::new("refined", n), &(&u, &v), |b, (u, v)| {
            b.iter(|| orbit_distance(black_box(u), black_box(v)))
        });
    }
    group.finish();
}

criterion_group!(benches, etdrk4, zeros, orbit);
criterion_main!(benches);
