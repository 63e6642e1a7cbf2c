//! Benchmarks for the hot kernels: matrix exponential, θ-derivative,
//! the Killing pairing on grids, form evaluation and a full identity
//! check.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use csgerbe_core::catalog::{epsilon_form, point_path_loop, r_form, tangent_path_loop};
use csgerbe_core::checks::{run_check, CheckParams};
use csgerbe_core::forms::{Point, PointComponent, Tangent, TangentComponent};
use csgerbe_core::lie::{exp, killing_form, random_algebra, GroupSpec};
use csgerbe_core::pathspace::{
    quadrature, random_loop, random_loop_tangent, random_path, random_path_tangent,
    theta_derivative, GridKind, GridSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_exp(c: &mut Criterion) {
    let mut group = c.benchmark_group("lie");
    for spec in [GroupSpec::su(2), GroupSpec::so(5)] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_algebra(&spec, 1.0, &mut rng);
        group.bench_function(format!("exp_{spec}"), |b| b.iter(|| exp(&x, &spec)));
        let y = random_algebra(&spec, 1.0, &mut rng);
        group.bench_function(format!("killing_{spec}"), |b| {
            b.iter(|| killing_form(&x, &y, &spec).unwrap())
        });
    }
    group.finish();
}

fn bench_pathspace(c: &mut Criterion) {
    let mut group = c.benchmark_group("pathspace");
    let spec = GroupSpec::su(2);
    let grid = GridSpec::new(128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_loop_tangent(&spec, &grid, &mut rng);

    group.bench_function("theta_derivative_N128", |b| {
        b.iter(|| theta_derivative(&x.coeffs, &grid, GridKind::Loop).unwrap())
    });

    let vals: Vec<f64> = grid.nodes().iter().map(|t| (3.0 * t).sin().exp()).collect();
    group.bench_function("quadrature_N128", |b| {
        b.iter(|| quadrature(&vals, GridKind::Path))
    });

    let p = random_path(&spec, &grid, &mut rng);
    let q = random_path(&spec, &grid, &mut rng);
    group.bench_function("path_multiply_N128", |b| {
        b.iter_batched(|| (p.clone(), q.clone()), |(p, q)| p.multiply(&q).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

fn bench_forms(c: &mut Criterion) {
    let mut group = c.benchmark_group("forms");
    let spec = GroupSpec::su(2);
    let grid = GridSpec::new(128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let r = r_form(spec, grid);
    let gamma = random_loop(&spec, &grid, &mut rng);
    let w1 = random_loop_tangent(&spec, &grid, &mut rng);
    let w2 = random_loop_tangent(&spec, &grid, &mut rng);
    let lp = Point::new(vec![PointComponent::Loop(gamma)]);
    let v1 = Tangent::new(vec![TangentComponent::Loop(w1)]);
    let v2 = Tangent::new(vec![TangentComponent::Loop(w2)]);
    group.bench_function("r_form_eval_N128", |b| {
        b.iter(|| r.eval(&lp, &[v1.clone(), v2.clone()]).unwrap())
    });

    let eps = epsilon_form(spec, grid);
    let p = random_path(&spec, &grid, &mut rng);
    let gamma = random_loop(&spec, &grid, &mut rng);
    let x = random_path_tangent(&spec, &grid, &mut rng);
    let w = random_loop_tangent(&spec, &grid, &mut rng);
    let point = point_path_loop(&p, &gamma);
    let tangent = tangent_path_loop(&x, &w);
    group.bench_function("epsilon_eval_N128", |b| {
        b.iter(|| eps.eval(&point, std::slice::from_ref(&tangent)).unwrap())
    });
    group.finish();
}

fn bench_checks(c: &mut Criterion) {
    let mut group = c.benchmark_group("checks");
    group.sample_size(10);
    let params = CheckParams {
        n: 64,
        points: 2,
        tuples: 2,
        ..CheckParams::default()
    };
    group.bench_function("delta_epsilon_eq_nu_N64", |b| {
        b.iter(|| run_check("delta_epsilon_eq_nu", &params).unwrap())
    });
    group.bench_function("delta_B_N64", |b| {
        b.iter(|| run_check("delta_B", &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_exp, bench_pathspace, bench_forms, bench_checks);
criterion_main!(benches);
