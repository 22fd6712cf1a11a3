use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use twowall::obstacle::{solve_psor, solve_two_wall, ObstacleProblem, PenaltyParams, WallPair};
use twowall::picard::PicardOptions;
use twowall::{discrete_green, picard_solve, CoefficientPair, Diffusion, Drift, Grid};
use twowall_bench::benchmark_problem;

fn green(c: &mut Criterion) {
    let mut group = c.benchmark_group("discrete_green");
    for n in [99, 399] {
        let grid = Grid::new(1, n).unwrap();
        group.bench_with_input(BenchmarkId::new("1d", n), &grid, |b, g| b.iter(|| discrete_green(black_box(g))));
    }
    let grid = Grid::new(2, 15).unwrap();
    group.bench_function("2d/15", |b| b.iter(|| discrete_green(black_box(&grid))));
    group.finish();
}

fn obstacle(c: &mut Criterion) {
    let mut group = c.benchmark_group("obstacle");
    for n in [99, 399] {
        let (grid, drift, v, walls) = benchmark_problem(n);
        let problem = ObstacleProblem::new(&grid, &drift, &v, &walls).unwrap();
        group.bench_with_input(BenchmarkId::new("staged", n), &problem, |b, p| {
            b.iter(|| solve_two_wall(p, &PenaltyParams::default(), 1e-10))
        });
    }
    let (grid, drift, v, walls) = benchmark_problem(99);
    let problem = ObstacleProblem::new(&grid, &drift, &v, &walls).unwrap();
    group.bench_function("psor/99", |b| b.iter(|| solve_psor(&problem, 1e-10, 1.9)));
    group.finish();
}

fn picard(c: &mut Criterion) {
    let grid = Grid::new(1, 99).unwrap();
    let kernel = discrete_green(&grid).unwrap();
    let coeff = CoefficientPair::new(Drift::Zero, Diffusion::affine(0.1, 0.05), 1).unwrap();
    let walls = WallPair::constant(&grid, -0.5, 0.5).unwrap();
    let opts = PicardOptions::default();
    let mut seed = 0;
    c.bench_function("picard/99", |b| {
        b.iter(|| {
            seed += 1;
            picard_solve(&grid, &kernel, &coeff, &walls, seed, &opts)
        })
    });
}

criterion_group!(benches, green, obstacle, picard);
criterion_main!(benches);
