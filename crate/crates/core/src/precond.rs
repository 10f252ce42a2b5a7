//! `(-Δ_h + ε)⁻¹` with homogeneous Neumann boundary conditions.
//!
//! The boundary is handled by reflecting a ghost node, so the 1D operator is
//! `(2u₀ - 2u₁)/h²` at the ends and the usual three-point stencil inside. Its
//! eigenvectors are the DCT-I modes `cos(π j k / (n-1))` with eigenvalues
//! `2(1 - cos(π k / (n-1)))/h²`; the solve is a forward DCT-I, a diagonal
//! scaling and the inverse transform, applied axis by axis in 2D.

use std::f64::consts::PI;

use crate::grid::Grid;

/// Precomputed cosine tables for repeated solves on one grid.
#[derive(Debug, Clone)]
pub struct NeumannSolver {
    grid: Grid,
    tables: Vec<Vec<f64>>,
    eig: Vec<Vec<f64>>,
}

impl NeumannSolver {
    pub fn new(grid: Grid) -> Self {
        let mut tables = Vec::new();
        let mut eig = Vec::new();
        for axis in 0..grid.dim() {
            let n = grid.resolution()[axis];
            let h = grid.spacing()[axis];
            let mut t = vec![0.0; n * n];
            for j in 0..n {
                for k in 0..n {
                    // reduce jk mod 2(n-1) so large products keep full accuracy
                    let r = (j * k) % (2 * (n - 1));
                    t[j * n + k] = (PI * r as f64 / (n - 1) as f64).cos();
                }
            }
            tables.push(t);
            eig.push(
                (0..n)
                    .map(|k| 2.0 * (1.0 - (PI * k as f64 / (n - 1) as f64).cos()) / (h * h))
                    .collect(),
            );
        }
        NeumannSolver { grid, tables, eig }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `X_k = Σ''_j x_j cos(π j k / (n-1))`, endpoints halved.
    fn forward(&self, axis: usize, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let t = &self.tables[axis];
        for k in 0..n {
            let mut s = 0.5 * (x[0] * t[k] + x[n - 1] * t[(n - 1) * n + k]);
            for j in 1..n - 1 {
                s += x[j] * t[j * n + k];
            }
            out[k] = s;
        }
    }

    /// Inverse of [`forward`](Self::forward): `x_j = 2/(n-1) Σ''_k X_k cos(...)`.
    fn inverse(&self, axis: usize, x: &[f64], out: &mut [f64]) {
        self.forward(axis, x, out);
        let scale = 2.0 / (x.len() - 1) as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
    }

    /// Solves `(-Δ_h + eps) u = r`.
    pub fn solve(&self, r: &[f64], eps: f64) -> Vec<f64> {
        let g = &self.grid;
        let n0 = g.resolution()[0];
        if g.dim() == 1 {
            let mut spec = vec![0.0; n0];
            self.forward(0, r, &mut spec);
            for (s, l) in spec.iter_mut().zip(&self.eig[0]) {
                *s /= l + eps;
            }
            let mut u = vec![0.0; n0];
            self.inverse(0, &spec, &mut u);
            return u;
        }
        let n1 = g.resolution()[1];
        let mut a = vec![0.0; n0 * n1];
        let mut row_in = vec![0.0; n0];
        let mut row_out = vec![0.0; n0];
        for i1 in 0..n1 {
            row_in.copy_from_slice(&r[i1 * n0..(i1 + 1) * n0]);
            self.forward(0, &row_in, &mut row_out);
            a[i1 * n0..(i1 + 1) * n0].copy_from_slice(&row_out);
        }
        let mut col_in = vec![0.0; n1];
        let mut col_out = vec![0.0; n1];
        for k0 in 0..n0 {
            for i1 in 0..n1 {
                col_in[i1] = a[i1 * n0 + k0];
            }
            self.forward(1, &col_in, &mut col_out);
            for (k1, v) in col_out.iter().enumerate() {
                let lam = self.eig[0][k0] + self.eig[1][k1] + eps;
                col_in[k1] = v / lam;
            }
            self.inverse(1, &col_in, &mut col_out);
            for i1 in 0..n1 {
                a[i1 * n0 + k0] = col_out[i1];
            }
        }
        let mut u = vec![0.0; n0 * n1];
        for i1 in 0..n1 {
            row_in.copy_from_slice(&a[i1 * n0..(i1 + 1) * n0]);
            self.inverse(0, &row_in, &mut row_out);
            u[i1 * n0..(i1 + 1) * n0].copy_from_slice(&row_out);
        }
        u
    }
}

/// One-off `(-Δ_h + eps)⁻¹ r` on `grid`.
pub fn h1_precondition(grid: Grid, r: &[f64], eps: f64) -> Vec<f64> {
    NeumannSolver::new(grid).solve(r, eps)
}

/// Applies `-Δ_h + eps` with the reflected ghost nodes; used to check solves.
pub fn apply_operator(grid: &Grid, u: &[f64], eps: f64) -> Vec<f64> {
    let mut out: Vec<f64> = u.iter().map(|v| eps * v).collect();
    for axis in 0..grid.dim() {
        let n = grid.resolution()[axis];
        let stride = if axis == 0 { 1 } else { grid.resolution()[0] };
        let inv = 1.0 / (grid.spacing()[axis] * grid.spacing()[axis]);
        for (j, o) in out.iter_mut().enumerate() {
            let i = grid.multi_index(j)[axis];
            let left = if i == 0 { u[j + stride] } else { u[j - stride] };
            let right = if i + 1 == n {
                u[j - stride]
            } else {
                u[j + stride]
            };
            *o += (2.0 * u[j] - left - right) * inv;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_and_constant() {
        let g = Grid::line(0.0, 1.0, 33).unwrap();
        assert!(h1_precondition(g, &vec![0.0; 33], 1e-3)
            .iter()
            .all(|v| *v == 0.0));
        let u = h1_precondition(g, &vec![2.0; 33], 1e-3);
        assert!(u.iter().all(|v| (v - 2000.0).abs() < 1e-8));
    }

    #[test]
    fn single_cosine_mode() {
        let n = 65;
        let g = Grid::line(0.0, 1.0, n).unwrap();
        let h = g.h();
        let eps = 1e-3;
        for k in [1usize, 7, 64] {
            let r: Vec<f64> = (0..n)
                .map(|j| (PI * (j * k) as f64 / (n - 1) as f64).cos())
                .collect();
            let lam = 2.0 * (1.0 - (PI * k as f64 / (n - 1) as f64).cos()) / (h * h);
            let u = h1_precondition(g, &r, eps);
            for (a, b) in u.iter().zip(&r) {
                assert!((a - b / (lam + eps)).abs() < 1e-12 * (1.0 + b.abs() / (lam + eps)));
            }
        }
    }

    #[test]
    fn random_solve_satisfies_the_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in [
            Grid::line(-1.0, 2.0, 40).unwrap(),
            Grid::new(&[0.0, 0.0], &[1.0, 2.0], &[13, 9]).unwrap(),
        ] {
            let r: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = h1_precondition(g, &r, 0.1);
            let back = apply_operator(&g, &u, 0.1);
            for (a, b) in back.iter().zip(&r) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
