//! Cubic nonlinear Schrödinger equation in real variables:
//!
//! ```text
//! ∂_t p = −Δq − β(p² + q²) q
//! ∂_t q =  Δp + β(p² + q²) p
//! ```
//!
//! with the quadratic mass invariant `½(‖p‖² + ‖q‖²)`.

use std::sync::Arc;

use num_complex::Complex64;

use super::{complex_error_norms, Model};
use crate::error::{Error, Result};
use crate::integrator::VectorField;
use crate::projection::Projector;
use crate::spectral::{Grid, Laplacian};

/// Real and imaginary parts of `u = p + i q` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NlsState {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl NlsState {
    /// Samples a complex profile `u(x, y)` at the grid nodes.
    pub fn sample<F: Fn(f64, f64) -> Complex64>(grid: &Grid, u: F) -> Self {
        let (p, q) = (0..grid.len())
            .map(|j| {
                let [x, y] = grid.coords(j);
                let z = u(x, y);
                (z.re, z.im)
            })
            .unzip();
        NlsState { p, q }
    }

    pub fn from_flat(y: &[f64]) -> Self {
        let (p, q) = y.split_at(y.len() / 2);
        NlsState {
            p: p.to_vec(),
            q: q.to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = self.p.clone();
        y.extend_from_slice(&self.q);
        y
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.p.iter().zip(&self.q).map(|(a, b)| a.hypot(*b)).collect()
    }
}

/// Spectrally discretized NLS with coupling `β`.
#[derive(Debug, Clone)]
pub struct Nls {
    laplacian: Arc<Laplacian>,
    beta: f64,
}

impl Nls {
    pub fn new(grid: &Grid, beta: f64) -> Self {
        Nls {
            laplacian: Arc::new(Laplacian::new(grid)),
            beta,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    fn nodes(&self) -> usize {
        self.laplacian.grid().len()
    }

    /// `H = ½(‖p‖²_h + ‖q‖²_h)`.
    pub fn mass(&self, y: &[f64]) -> f64 {
        0.5 * self.laplacian.grid().inner(y, y)
    }

    /// Applies the structure operator
    /// `G(Φ) = [[0, −Δ − β|u|²], [Δ + β|u|², 0]]` at state `phi` to `a`.
    pub fn structure_apply(&self, phi: &[f64], a: &[f64], out: &mut [f64]) {
        let n = self.nodes();
        let (p, q) = phi.split_at(n);
        let (ap, aq) = a.split_at(n);
        let (out_p, out_q) = out.split_at_mut(n);
        self.laplacian.apply_pair(ap, aq, out_q, out_p);
        for j in 0..n {
            let m = self.beta * (p[j] * p[j] + q[j] * q[j]);
            out_p[j] = -out_p[j] - m * aq[j];
            out_q[j] += m * ap[j];
        }
    }
}

impl VectorField for Nls {
    fn dim(&self) -> usize {
        2 * self.nodes()
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.nodes();
        if y.len() != 2 * n || dy.len() != 2 * n {
            return Err(Error::IncompatibleFields(format!(
                "NLS state must have length {}, got {}",
                2 * n,
                y.len()
            )));
        }
        let (p, q) = y.split_at(n);
        let (dp, dq) = dy.split_at_mut(n);
        // dp <- Δq, dq <- Δp
        self.laplacian.apply_pair(p, q, dq, dp);
        for j in 0..n {
            let m = self.beta * (p[j] * p[j] + q[j] * q[j]);
            dp[j] = -dp[j] - m * q[j];
            dq[j] += m * p[j];
        }
        Ok(())
    }
}

impl Model for Nls {
    fn grid(&self) -> &Grid {
        self.laplacian.grid()
    }

    fn components(&self) -> &'static [&'static str] {
        &["p", "q"]
    }

    fn invariant(&self, y: &[f64]) -> f64 {
        self.mass(y)
    }

    fn projector(&self, phi0: &[f64]) -> Result<Projector> {
        Projector::norm(phi0, self.grid().cell_measure())
    }

    fn solution_error(&self, numeric: &[f64], exact: &[f64]) -> (f64, f64) {
        complex_error_norms(self.grid(), numeric, exact)
    }

    fn derived(&self, y: &[f64]) -> Vec<(&'static str, Vec<f64>)> {
        vec![("abs", NlsState::from_flat(y).modulus())]
    }
}

/// Traveling sech soliton
/// `u = √(2α/β) e^{i(cx/2 − (c²/4 − α)t)} sech(√α (x − ct))`.
pub fn soliton_1d(x: f64, t: f64, alpha: f64, beta: f64, c: f64) -> Complex64 {
    let amp = (2.0 * alpha / beta).sqrt() / (alpha.sqrt() * (x - c * t)).cosh();
    let phase = 0.5 * c * x - (0.25 * c * c - alpha) * t;
    Complex64::from_polar(amp, phase)
}

/// Two-soliton initial profile; the amplitude factor `√(2α/β)` multiplies
/// only the first term.
pub fn two_soliton_init(x: f64, alpha: f64, beta: f64, c1: f64, c2: f64, delta: f64) -> Complex64 {
    let s = alpha.sqrt();
    let first = Complex64::from_polar((2.0 * alpha / beta).sqrt() / (s * x).cosh(), 0.5 * c1 * x);
    let second = Complex64::from_polar(1.0 / (s * (x - delta)).cosh(), 0.5 * c2 * (x - delta));
    first + second
}

/// `ω = k₁² + k₂² − β A²` of the plane wave.
pub fn plane_wave_frequency(amplitude: f64, k1: f64, k2: f64, beta: f64) -> f64 {
    k1 * k1 + k2 * k2 - beta * amplitude * amplitude
}

/// Plane wave `A e^{i(k₁x + k₂y − ωt)}`.
pub fn plane_wave_2d(x: f64, y: f64, t: f64, amplitude: f64, k1: f64, k2: f64, beta: f64) -> Complex64 {
    let omega = plane_wave_frequency(amplitude, k1, k2, beta);
    Complex64::from_polar(amplitude, k1 * x + k2 * y - omega * t)
}
