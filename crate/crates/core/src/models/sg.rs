//! Sine-Gordon equation `u_tt − Δu + sin u = 0` after energy quadratization
//! with `f(u) = 1 − cos u`:
//!
//! ```text
//! ∂_t u = v
//! ∂_t v = Δu − g(u) q
//! ∂_t q = g(u) ∂_t u
//! ```
//!
//! The quadratized system conserves `½(‖v‖² + ⟨u, −Δu⟩ + ‖q‖²) − C₀`; the
//! original Hamiltonian `½(‖v‖² + ⟨u, −Δu⟩ + 2⟨1 − cos u, 1⟩)` is only
//! conserved in the continuous limit.

use std::sync::Arc;

use super::{error_norms, Model};
use crate::error::{Error, Result};
use crate::integrator::VectorField;
use crate::projection::{EnergyOperator, OperatorBlock, Projector};
use crate::quadratization::{aux_init, ieq_structure_apply, Nonlinearity, QuadratizationConfig};
use crate::spectral::{Grid, Laplacian};

/// Components `u`, `v = u_t` and the auxiliary `q` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SgState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub q: Vec<f64>,
}

impl SgState {
    pub fn from_flat(y: &[f64]) -> Self {
        let n = y.len() / 3;
        SgState {
            u: y[..n].to_vec(),
            v: y[n..2 * n].to_vec(),
            q: y[2 * n..].to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(3 * self.u.len());
        y.extend_from_slice(&self.u);
        y.extend_from_slice(&self.v);
        y.extend_from_slice(&self.q);
        y
    }
}

/// Spectrally discretized, quadratized sine-Gordon system.
#[derive(Debug, Clone)]
pub struct SineGordon {
    laplacian: Arc<Laplacian>,
    quad: QuadratizationConfig,
    nl: Nonlinearity,
}

impl SineGordon {
    /// `|Ω|` is taken from the grid.
    pub fn new(grid: &Grid, c0: f64) -> Result<Self> {
        Ok(SineGordon {
            laplacian: Arc::new(Laplacian::new(grid)),
            quad: QuadratizationConfig::new(c0, grid.domain_measure())?,
            nl: Nonlinearity::sine_gordon(),
        })
    }

    pub fn c0(&self) -> f64 {
        self.quad.c0
    }

    pub fn quadratization(&self) -> &QuadratizationConfig {
        &self.quad
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    fn nodes(&self) -> usize {
        self.laplacian.grid().len()
    }

    /// Consistent initial state: `q = √(2(1 − cos u₀) + 2C₀/|Ω|)`.
    pub fn init(&self, u0: &[f64], v0: &[f64]) -> Result<SgState> {
        if u0.len() != self.nodes() || v0.len() != self.nodes() {
            return Err(Error::IncompatibleFields(
                "initial data does not match the grid".into(),
            ));
        }
        Ok(SgState {
            u: u0.to_vec(),
            v: v0.to_vec(),
            q: aux_init(&self.nl, &self.quad, u0)?,
        })
    }

    /// `L = diag(−Δ, 1, 1)`.
    pub fn energy_operator(&self) -> EnergyOperator {
        EnergyOperator::diagonal(
            vec![
                OperatorBlock::NegLaplacian,
                OperatorBlock::Identity,
                OperatorBlock::Identity,
            ],
            Arc::clone(&self.laplacian),
        )
    }

    fn dirichlet(&self, u: &[f64]) -> f64 {
        let mut lu = vec![0.0; u.len()];
        self.laplacian.apply(u, &mut lu);
        -self.laplacian.grid().inner(u, &lu)
    }

    /// `½(‖v‖² + ⟨u, −Δu⟩ + ‖q‖²) − C₀`.
    pub fn modified_energy(&self, y: &[f64]) -> f64 {
        let n = self.nodes();
        let grid = self.laplacian.grid();
        let (u, rest) = y.split_at(n);
        let (v, q) = rest.split_at(n);
        0.5 * (grid.inner(v, v) + self.dirichlet(u) + grid.inner(q, q)) - self.quad.c0
    }

    /// `½(‖v‖² + ⟨u, −Δu⟩ + 2⟨1 − cos u, 1⟩)`.
    pub fn original_energy(&self, y: &[f64]) -> f64 {
        let n = self.nodes();
        let grid = self.laplacian.grid();
        let (u, rest) = y.split_at(n);
        let v = &rest[..n];
        let potential: f64 = u.iter().map(|&x| (self.nl.f)(x)).sum::<f64>();
        0.5 * (grid.inner(v, v) + self.dirichlet(u)) + grid.cell_measure() * potential
    }

    fn g(&self, u: &[f64]) -> Result<Vec<f64>> {
        u.iter()
            .enumerate()
            .map(|(j, &x)| self.quad.g_value(&self.nl, x, j))
            .collect()
    }

    /// Applies `G(Φ)`: the canonical `[[0, 1], [−1, 0]]` on `(u, v)`,
    /// quadratized with `g(u)`.
    pub fn structure_apply(&self, phi: &[f64], a: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.nodes();
        let g = self.g(&phi[..n])?;
        let canonical = |x: &[f64], o: &mut [f64]| {
            let (xu, xv) = x.split_at(n);
            let (ou, ov) = o.split_at_mut(n);
            ou.copy_from_slice(xv);
            for (o, x) in ov.iter_mut().zip(xu) {
                *o = -x;
            }
        };
        ieq_structure_apply(canonical, &g, 0, a, out);
        Ok(())
    }
}

impl VectorField for SineGordon {
    fn dim(&self) -> usize {
        3 * self.nodes()
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.nodes();
        if y.len() != 3 * n || dy.len() != 3 * n {
            return Err(Error::IncompatibleFields(format!(
                "sine-Gordon state must have length {}, got {}",
                3 * n,
                y.len()
            )));
        }
        let (u, rest) = y.split_at(n);
        let (v, q) = rest.split_at(n);
        let (du, drest) = dy.split_at_mut(n);
        let (dv, dq) = drest.split_at_mut(n);
        du.copy_from_slice(v);
        self.laplacian.apply(u, dv);
        for j in 0..n {
            let g = self.quad.g_value(&self.nl, u[j], j)?;
            dv[j] -= g * q[j];
            dq[j] = g * v[j];
        }
        Ok(())
    }
}

impl Model for SineGordon {
    fn grid(&self) -> &Grid {
        self.laplacian.grid()
    }

    fn components(&self) -> &'static [&'static str] {
        &["u", "v", "q"]
    }

    fn invariant(&self, y: &[f64]) -> f64 {
        self.modified_energy(y)
    }

    fn original_invariant(&self, y: &[f64]) -> Option<f64> {
        Some(self.original_energy(y))
    }

    fn projector(&self, phi0: &[f64]) -> Result<Projector> {
        Projector::modified(self.energy_operator(), phi0)
    }

    fn solution_error(&self, numeric: &[f64], exact: &[f64]) -> (f64, f64) {
        let n = self.nodes();
        error_norms(self.grid(), &numeric[..n], &exact[..n])
    }

    fn derived(&self, y: &[f64]) -> Vec<(&'static str, Vec<f64>)> {
        let n = self.nodes();
        vec![(
            "sin_half_u",
            y[..n].iter().map(|u| (0.5 * u).sin()).collect(),
        )]
    }
}

/// Breather-type exact solution `u = 4 arctan(t sech x)`.
pub fn exact_1d(x: f64, t: f64) -> f64 {
    4.0 * (t / x.cosh()).atan()
}

/// `∂_t` of [`exact_1d`]: `4 sech x / (1 + t² sech² x)`.
pub fn exact_1d_velocity(x: f64, t: f64) -> f64 {
    let s = 1.0 / x.cosh();
    4.0 * s / (1.0 + t * t * s * s)
}

/// Ring-soliton initial data `(u₀, v₀)` centered at `(−3, −7)`.
pub fn ring_init(x: f64, y: f64) -> (f64, f64) {
    let r = ((x + 3.0).powi(2) + (y + 7.0).powi(2)).sqrt();
    let s = (4.0 - r) / 0.436;
    (4.0 * s.exp().atan(), 4.13 / s.cosh())
}
