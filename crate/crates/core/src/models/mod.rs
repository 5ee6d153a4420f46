//! Concrete discrete Hamiltonian systems on periodic grids.
//!
//! * [`nls`]: the cubic nonlinear Schrödinger equation `i u_t + Δu + β|u|²u = 0`
//!   in real variables `u = p + i q`, state layout `[p, q]`.
//! * [`sg`]: the sine-Gordon equation `u_tt − Δu + sin u = 0` after energy
//!   quadratization, state layout `[u, v, q]`.

pub mod nls;
pub mod sg;

use crate::error::Result;
use crate::integrator::VectorField;
use crate::projection::Projector;
use crate::spectral::Grid;

pub use nls::{Nls, NlsState};
pub use sg::{SgState, SineGordon};

/// What the experiment harness needs from a discretized system.
pub trait Model: VectorField + Send + Sync {
    fn grid(&self) -> &Grid;

    /// Names of the state components, in layout order.
    fn components(&self) -> &'static [&'static str];

    /// The quadratic invariant the projected schemes conserve.
    fn invariant(&self, y: &[f64]) -> f64;

    /// The energy in the original (non-quadratized) variables, when it
    /// differs from [`invariant`](Self::invariant).
    fn original_invariant(&self, _y: &[f64]) -> Option<f64> {
        None
    }

    /// Projection post-step referenced to the initial state.
    fn projector(&self, phi0: &[f64]) -> Result<Projector>;

    /// Discrete `(L², L∞)` error of the physical solution.
    fn solution_error(&self, numeric: &[f64], exact: &[f64]) -> (f64, f64);

    /// Derived per-node quantities written to snapshots besides the raw
    /// components, e.g. `|u|` for NLS.
    fn derived(&self, y: &[f64]) -> Vec<(&'static str, Vec<f64>)>;
}

/// Discrete `(L²_h, L∞)` norms of `a − b` for real fields.
pub fn error_norms(grid: &Grid, a: &[f64], b: &[f64]) -> (f64, f64) {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let linf = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    (grid.norm(&diff), linf)
}

/// Discrete `(L²_h, L∞)` norms of `u_a − u_b` for complex fields stored as
/// `[re, im]` halves.
pub fn complex_error_norms(grid: &Grid, a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = grid.len();
    let (mut sum, mut linf) = (0.0f64, 0.0f64);
    for j in 0..n {
        let dr = a[j] - b[j];
        let di = a[n + j] - b[n + j];
        let m2 = dr * dr + di * di;
        sum += m2;
        linf = linf.max(m2.sqrt());
    }
    ((grid.cell_measure() * sum).sqrt(), linf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn error_norm_examples() {
        let grid = Grid::line(0.0, 1.0, 10).unwrap();
        let a = vec![0.25; 10];
        assert_eq!(error_norms(&grid, &a, &a), (0.0, 0.0));
        let b = vec![1.25; 10];
        let (l2, linf) = error_norms(&grid, &b, &a);
        assert!((l2 - 1.0).abs() < 1e-15);
        assert_eq!(linf, 1.0);
    }

    #[test]
    fn error_norms_match_direct_loops() {
        let grid = Grid::rectangle((0.0, 2.0), (0.0, 3.0), 4, 6).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let n = grid.len();
        let a: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = 0.5 * 0.5;
        let mut s = 0.0;
        let mut m: f64 = 0.0;
        for j in 0..n {
            s += (a[j] - b[j]).powi(2);
            m = m.max((a[j] - b[j]).abs());
        }
        let (l2, linf) = error_norms(&grid, &a[..n], &b[..n]);
        assert!((l2 - (h * s).sqrt()).abs() < 1e-14);
        assert_eq!(linf, m);

        let mut s = 0.0;
        let mut m: f64 = 0.0;
        for j in 0..n {
            let d = ((a[j] - b[j]).powi(2) + (a[n + j] - b[n + j]).powi(2)).sqrt();
            s += d * d;
            m = m.max(d);
        }
        let (l2, linf) = complex_error_norms(&grid, &a, &b);
        assert!((l2 - (h * s).sqrt()).abs() < 1e-14);
        assert!((linf - m).abs() < 1e-15);
    }
}
