#![allow(dead_code)]

use sbary::cost::CostModel;
use sbary::grid::Grid;
use sbary::measure::gaussian_on_grid;
use sbary::problem::Problem;

pub fn unit_line(n: usize) -> Grid {
    Grid::line(0.0, 1.0, n).unwrap()
}

pub fn gaussians_1d(weights: &[f64], params: &[(f64, f64)], n: usize) -> Problem {
    let g = unit_line(n);
    let mus = params
        .iter()
        .map(|(m, s)| gaussian_on_grid(g, &[*m], *s).unwrap())
        .collect();
    Problem::new(weights, mus, CostModel::Quadratic).unwrap()
}

/// a = (0.5, 0.5), N(0.3, 0.05²) and N(0.7, 0.05²) on 256 nodes.
pub fn classical() -> Problem {
    gaussians_1d(&[0.5, 0.5], &[(0.3, 0.05), (0.7, 0.05)], 256)
}

/// a = (0.6, 0.6, -0.2), N(0.4, 0.05²), N(0.6, 0.05²), N(0.5, 0.05²).
pub fn three_marginal() -> Problem {
    gaussians_1d(
        &[0.6, 0.6, -0.2],
        &[(0.4, 0.05), (0.6, 0.05), (0.5, 0.05)],
        256,
    )
}

/// a = (2, -1), N(0.5, 0.05²) and N(0.5, 0.10²): the affine quantile is
/// constant.
pub fn dirac_collapse() -> Problem {
    gaussians_1d(&[2.0, -1.0], &[(0.5, 0.05), (0.5, 0.10)], 256)
}

/// a = (2, -1), N(0.5, 0.05²) and N(0.4, 0.05²): barycenter N(0.6, 0.05²).
pub fn extrapolation() -> Problem {
    gaussians_1d(&[2.0, -1.0], &[(0.5, 0.05), (0.4, 0.05)], 256)
}

/// a = (0.5, 0.5), isotropic Gaussians at (0.35, 0.35) and (0.65, 0.65)
/// with standard deviation 0.08 on a 64² grid of the unit square.
pub fn planar() -> Problem {
    let g = Grid::square(0.0, 1.0, 64).unwrap();
    let mus = vec![
        gaussian_on_grid(g, &[0.35, 0.35], 0.08).unwrap(),
        gaussian_on_grid(g, &[0.65, 0.65], 0.08).unwrap(),
    ];
    Problem::new(&[0.5, 0.5], mus, CostModel::Quadratic).unwrap()
}
