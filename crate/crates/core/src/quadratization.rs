//! Energy quadratization with a pointwise auxiliary variable.
//!
//! For an energy `½(z, Bz) + (f(z), 1)` with `f` bounded from below, the
//! auxiliary variable `q = √(2(f(z) + C₀/|Ω|))` turns the energy into the
//! quadratic form `½(z, Bz) + ½‖q‖² − C₀`. The system is then evolved as
//!
//! ```text
//! ∂_t z = D(z) (Bz + g(z) q),    ∂_t q = g(z) ∂_t z,    g = f′ / q,
//! ```
//!
//! whose structure operator `G(Φ) = [1; g] D [1, g]` stays skew-adjoint.

use crate::error::{Error, Result};

/// Pointwise energy density `f` and its derivative.
#[derive(Clone, Copy)]
pub struct Nonlinearity {
    pub f: fn(f64) -> f64,
    pub df: fn(f64) -> f64,
    pub bounded_below: bool,
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("bounded_below", &self.bounded_below)
            .finish_non_exhaustive()
    }
}

fn sg_density(u: f64) -> f64 {
    // 1 − cos u without cancellation near 0
    2.0 * (0.5 * u).sin().powi(2)
}

impl Nonlinearity {
    /// `f(u) = 1 − cos u`, `f′(u) = sin u`.
    pub fn sine_gordon() -> Self {
        Nonlinearity {
            f: sg_density,
            df: f64::sin,
            bounded_below: true,
        }
    }
}

/// The constant `C₀` and the domain measure `|Ω|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratizationConfig {
    pub c0: f64,
    pub domain_measure: f64,
}

/// Default `C₀` for sine-Gordon runs.
pub const DEFAULT_C0: f64 = 1.0;

impl QuadratizationConfig {
    pub fn new(c0: f64, domain_measure: f64) -> Result<Self> {
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(Error::Config(format!("C0 must be finite and >= 0, got {c0}")));
        }
        if !(domain_measure > 0.0 && domain_measure.is_finite()) {
            return Err(Error::Config(format!(
                "domain measure must be positive, got {domain_measure}"
            )));
        }
        Ok(QuadratizationConfig { c0, domain_measure })
    }

    /// `C₀ / |Ω|`.
    pub fn shift(&self) -> f64 {
        self.c0 / self.domain_measure
    }

    fn radicand(&self, nl: &Nonlinearity, z: f64, node: usize) -> Result<f64> {
        let r = 2.0 * ((nl.f)(z) + self.shift());
        if r > 0.0 && r.is_finite() {
            Ok(r)
        } else {
            Err(Error::QuadratizationDomain { node, radicand: r })
        }
    }

    /// `√(2(f(z) + C₀/|Ω|))` at one node.
    pub fn aux_value(&self, nl: &Nonlinearity, z: f64, node: usize) -> Result<f64> {
        Ok(self.radicand(nl, z, node)?.sqrt())
    }

    /// `f′(z) / √(2(f(z) + C₀/|Ω|))` at one node.
    pub fn g_value(&self, nl: &Nonlinearity, z: f64, node: usize) -> Result<f64> {
        Ok((nl.df)(z) / self.aux_value(nl, z, node)?)
    }
}

/// Consistent auxiliary variable `q_j = √(2(f(z_j) + C₀/|Ω|))`.
pub fn aux_init(nl: &Nonlinearity, cfg: &QuadratizationConfig, z: &[f64]) -> Result<Vec<f64>> {
    z.iter()
        .enumerate()
        .map(|(j, &zj)| cfg.aux_value(nl, zj, j))
        .collect()
}

/// `g_j = f′(z_j) / q_j` with the consistent `q`.
pub fn g_factor(nl: &Nonlinearity, cfg: &QuadratizationConfig, z: &[f64]) -> Result<Vec<f64>> {
    z.iter()
        .enumerate()
        .map(|(j, &zj)| cfg.g_value(nl, zj, j))
        .collect()
}

/// Applies the quadratized structure operator `G(Φ) = [1; g] D [1, g]` to
/// `a = (a_z, a_q)`.
///
/// `a_z` holds the original components (each of length `g.len()`), followed
/// by `a_q`. The auxiliary variable couples to component `coupled` of `z`:
/// `[1, g]` maps `(a_z, a_q)` to `a_z` with `g · a_q` added to that
/// component, and `[1; g]` returns `(s, g · s_coupled)` for `s = D(...)`.
pub fn ieq_structure_apply<D>(
    apply_d: D,
    g: &[f64],
    coupled: usize,
    a: &[f64],
    out: &mut [f64],
) where
    D: Fn(&[f64], &mut [f64]),
{
    let n = g.len();
    let nz = a.len() - n;
    let (a_z, a_q) = a.split_at(nz);
    let mut s = a_z.to_vec();
    for ((sj, gj), qj) in s[coupled * n..(coupled + 1) * n].iter_mut().zip(g).zip(a_q) {
        *sj += gj * qj;
    }
    let (out_z, out_q) = out.split_at_mut(nz);
    apply_d(&s, out_z);
    for ((oq, gj), dz) in out_q
        .iter_mut()
        .zip(g)
        .zip(&out_z[coupled * n..(coupled + 1) * n])
    {
        *oq = gj * dz;
    }
}
