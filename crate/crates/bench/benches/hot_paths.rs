use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use saddlekit::ode::{ContinuousState, OdeKind, OdeSystem};
use saddlekit::problems::difference_matrix;
use saddlekit::solvers::{self, SolverState};
use saddlekit::FunctionDescriptor;
use saddlekit::{Matrix, Vector};

use saddlekit_bench::{fused_lasso, quadratic_saddle, start};

fn bench_pdhg_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("pdhg_step/fused_lasso");
    for dim in [8usize, 32, 96] {
        let problem = fused_lasso(dim);
        let s = 0.9 / problem.coupling_norm();
        // Warm the cached prox factorization so the loop measures the step.
        let state = SolverState::initial(start(dim), Vector::zeros(dim - 1));
        let state = solvers::pdhg_step(&problem, &state, s).expect("valid step");
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| solvers::pdhg_step(&problem, black_box(&state), s).expect("valid step"))
        });
    }
    group.finish();
}

fn bench_prox(c: &mut Criterion) {
    let dim = 64;
    let point = start(dim);
    let a = Matrix::from_fn(dim, dim, |i, j| {
        if i == j {
            2.0
        } else {
            ((i * 31 + j) % 7) as f64 * 0.05
        }
    });
    let b_vec = start(dim);
    let cases: Vec<(&str, FunctionDescriptor)> = vec![
        ("scaled_l1", FunctionDescriptor::scaled_l1(0.7).unwrap()),
        (
            "linf_ball",
            FunctionDescriptor::indicator_linf_ball(0.5).unwrap(),
        ),
        (
            "least_squares",
            FunctionDescriptor::least_squares(a, b_vec).unwrap(),
        ),
    ];
    let mut group = c.benchmark_group("prox");
    for (name, descriptor) in &cases {
        // First call factors once; the loop then measures the steady state.
        descriptor.prox(0.8, &point).expect("valid prox");
        group.bench_function(*name, |b| {
            b.iter(|| descriptor.prox(0.8, black_box(&point)).expect("valid prox"))
        });
    }
    group.finish();
}

fn bench_spectral_norm(c: &mut Criterion) {
    let d = difference_matrix(30).unwrap();
    c.bench_function("spectral_norm/difference_30", |b| {
        b.iter(|| black_box(&d).spectral_norm().expect("converges"))
    });
}

fn bench_rk4(c: &mut Criterion) {
    let problem = quadratic_saddle(6);
    let s = 0.4 / problem.coupling_norm();
    let system = OdeSystem::new(&problem, OdeKind::HighRes { s }).expect("differentiable");
    let initial = ContinuousState {
        t: 0.0,
        x: start(6),
        y: start(6),
    };
    c.bench_function("rk4/high_res_100_steps", |b| {
        b.iter(|| {
            system
                .rk4_trajectory(black_box(&initial), 0.01, 100)
                .expect("finite")
        })
    });
}

criterion_group!(
    benches,
    bench_pdhg_step,
    bench_prox,
    bench_spectral_norm,
    bench_rk4
);
criterion_main!(benches);
