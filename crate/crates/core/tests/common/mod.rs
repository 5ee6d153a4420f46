//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use epx::spectral::Grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Dense periodic spectral second-derivative matrix on `n` points of a
/// period-`length` interval, summed mode by mode:
/// `D_jm = (1/n) Σ_k −κ_k² cos(κ_k (x_j − x_m))`, `κ_k = 2πk/length`,
/// `k = −n/2, …, n/2 − 1`.
pub fn dense_second_derivative(n: usize, length: f64) -> Vec<Vec<f64>> {
    let h = length / n as f64;
    let mut d = vec![vec![0.0; n]; n];
    for (j, row) in d.iter_mut().enumerate() {
        for (m, entry) in row.iter_mut().enumerate() {
            let dx = (j as f64 - m as f64) * h;
            let mut s = 0.0;
            for k in -(n as i64) / 2..(n as i64) / 2 {
                let kappa = 2.0 * PI * k as f64 / length;
                s -= kappa * kappa * (kappa * dx).cos();
            }
            *entry = s / n as f64;
        }
    }
    d
}

/// Dense `Δ_h` on `grid` (row-major, x slowest), assembled as a Kronecker sum
/// of the 1D matrices.
pub fn dense_laplacian(grid: &Grid) -> Vec<Vec<f64>> {
    let axes = grid.axes();
    let dx = dense_second_derivative(axes[0].n, axes[0].length());
    if grid.dim() == 1 {
        return dx;
    }
    let (nx, ny) = (axes[0].n, axes[1].n);
    let dy = dense_second_derivative(ny, axes[1].length());
    let n = nx * ny;
    let mut l = vec![vec![0.0; n]; n];
    for ix in 0..nx {
        for iy in 0..ny {
            let row = ix * ny + iy;
            for jx in 0..nx {
                l[row][jx * ny + iy] += dx[ix][jx];
            }
            for jy in 0..ny {
                l[row][ix * ny + jy] += dy[iy][jy];
            }
        }
    }
    l
}

pub fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// `h_x h_y Σ u_j v_j` by a plain loop.
pub fn direct_inner(grid: &Grid, u: &[f64], v: &[f64]) -> f64 {
    let mut w = 1.0;
    for axis in grid.axes() {
        w *= axis.length() / axis.n as f64;
    }
    let mut s = 0.0;
    for j in 0..u.len() {
        s += u[j] * v[j];
    }
    w * s
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
