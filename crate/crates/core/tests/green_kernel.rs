use approx::assert_abs_diff_eq;
use twowall::{discrete_green, green_1d_analytic, green_holder_constant, green_sup_l2, Grid, GreenKernel};

#[test]
fn symmetric_and_inverse_of_the_laplacian() {
    for grid in [Grid::new(1, 40).unwrap(), Grid::new(2, 9).unwrap()] {
        let k = discrete_green(&grid).unwrap();
        let n = grid.len();
        let scale = k.max_abs();
        for i in 0..n {
            for j in 0..n {
                assert!((k.get(i, j) - k.get(j, i)).abs() <= 1e-12 * scale);
            }
        }
        // (−Δ_h) applied to column j gives e_j / cell_volume
        for j in [0, n / 2, n - 1] {
            let col: Vec<f64> = (0..n).map(|i| k.get(i, j)).collect();
            let field = twowall::ScalarField::new(grid, col).unwrap();
            let lap = twowall::laplacian_apply(&grid, &field).unwrap();
            for i in 0..n {
                let target = if i == j { 1.0 / grid.cell_volume() } else { 0.0 };
                assert!((lap[i] * grid.cell_volume() - target * grid.cell_volume()).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn nodally_exact_in_one_dimension() {
    let grid = Grid::new(1, 63).unwrap();
    let discrete = discrete_green(&grid).unwrap();
    let exact = GreenKernel::analytic_1d(grid).unwrap();
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            assert!((discrete.get(i, j) - exact.get(i, j)).abs() < 1e-12);
        }
    }
    assert_abs_diff_eq!(green_1d_analytic(0.5, 0.5).unwrap(), 0.25);
}

#[test]
fn sup_l2_constant_approaches_one_over_48() {
    let grid = Grid::new(1, 999).unwrap();
    let k = GreenKernel::analytic_1d(grid).unwrap();
    let c = green_sup_l2(&grid, &k).unwrap();
    assert!((c - 1.0 / 48.0).abs() < 1e-4, "{c}");
}

#[test]
fn holder_constant_bounded_by_one_at_lambda_one() {
    for n in [15, 63, 127] {
        let grid = Grid::new(1, n).unwrap();
        let k = discrete_green(&grid).unwrap();
        let b = green_holder_constant(&grid, &k, 1.0).unwrap();
        assert!(b > 0.0 && b <= 1.0 + 1e-6, "n = {n}: {b}");
    }
}

#[test]
fn two_dimensional_constants_are_finite() {
    let grid = Grid::new(2, 15).unwrap();
    let k = discrete_green(&grid).unwrap();
    let c = green_sup_l2(&grid, &k).unwrap();
    let b = green_holder_constant(&grid, &k, 0.5).unwrap();
    assert!(c.is_finite() && c > 0.0);
    assert!(b.is_finite() && b > 0.0);
    assert!(k.row(0).iter().all(|g| *g > 0.0));
}
