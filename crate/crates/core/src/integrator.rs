//! Runge-Kutta time stepping: explicit steps, adaptive embedded steps and the
//! fixed-point 2-stage Gauss step.

use crate::error::{Error, Result};
use crate::tableaux::{EmbeddedTableau, ExplicitTableau, ImplicitTableau};

/// Right-hand side `F(Φ)` of an autonomous system `∂_t Φ = F(Φ)` acting on
/// flat state vectors.
pub trait VectorField {
    fn dim(&self) -> usize;

    /// Writes `F(y)` into `dy`. Both slices have length [`dim`](Self::dim).
    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (**self).eval(y, dy)
    }
}

impl<T: VectorField + ?Sized> VectorField for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (**self).eval(y, dy)
    }
}

/// Adapts a closure into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (self.f)(y, dy);
        Ok(())
    }
}

/// Result of a single (possibly adaptive) step attempt.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Proposed state `Φ̃ⁿ⁺¹`.
    pub state: Vec<f64>,
    pub tau: f64,
    /// Weighted RMS error estimate; present for adaptive steps.
    pub error: Option<f64>,
    /// Suggested size for the next attempt; present for adaptive steps.
    pub next_tau: Option<f64>,
    pub accepted: bool,
}

fn check_finite(v: &[f64], stage: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState { stage })
    }
}

// y + tau * Σ_j coeffs[j] * ks[j], skipping zero coefficients
fn combine(y: &[f64], tau: f64, coeffs: &[f64], ks: &[Vec<f64>], out: &mut [f64]) {
    out.copy_from_slice(y);
    for (cj, kj) in coeffs.iter().zip(ks) {
        if *cj != 0.0 {
            let w = tau * cj;
            for (o, k) in out.iter_mut().zip(kj) {
                *o += w * k;
            }
        }
    }
}

// Evaluates the s stage slopes of an explicit method.
fn explicit_stages<F: VectorField + ?Sized>(
    f: &F,
    y: &[f64],
    tau: f64,
    a: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let n = y.len();
    let s = a.len();
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut stage = vec![0.0; n];
    for (i, row) in a.iter().enumerate() {
        let mut k = vec![0.0; n];
        if i == 0 {
            f.eval(y, &mut k)?;
        } else {
            combine(y, tau, &row[..i], &ks, &mut stage);
            check_finite(&stage, i + 1)?;
            f.eval(&stage, &mut k)?;
        }
        check_finite(&k, i + 1)?;
        ks.push(k);
    }
    Ok(ks)
}

/// One explicit Runge-Kutta step; exactly `s` evaluations of `F`.
///
/// Stage indices in [`Error::NonFiniteState`] are 1-based.
pub fn explicit_rk_step<F: VectorField + ?Sized>(
    f: &F,
    y: &[f64],
    tau: f64,
    tab: &ExplicitTableau,
) -> Result<Vec<f64>> {
    debug_assert!(tau > 0.0);
    let ks = explicit_stages(f, y, tau, &tab.a)?;
    let mut out = vec![0.0; y.len()];
    combine(y, tau, &tab.b, &ks, &mut out);
    check_finite(&out, tab.stages())?;
    Ok(out)
}

/// Controller constants for embedded steps.
pub const SAFETY: f64 = 0.9;
pub const MIN_FACTOR: f64 = 0.2;
pub const MAX_FACTOR: f64 = 5.0;

/// One attempt of an embedded pair. The returned state is the higher-order
/// solution; the step is accepted iff the weighted RMS of the difference
/// between the two solutions, with weights `atol + rtol·max(|y|, |ỹ|)`, is at
/// most one.
pub fn adaptive_embedded_step<F: VectorField + ?Sized>(
    f: &F,
    y: &[f64],
    tau: f64,
    atol: f64,
    rtol: f64,
    tab: &EmbeddedTableau,
) -> Result<StepOutcome> {
    if !(atol > 0.0 && rtol > 0.0) {
        return Err(Error::Config(format!(
            "tolerances must be positive, got atol={atol}, rtol={rtol}"
        )));
    }
    let ks = explicit_stages(f, y, tau, &tab.method.a)?;
    let n = y.len();
    let mut high = vec![0.0; n];
    let mut low = vec![0.0; n];
    combine(y, tau, &tab.method.b, &ks, &mut high);
    combine(y, tau, &tab.b_hat, &ks, &mut low);
    check_finite(&high, tab.method.stages())?;

    let sum: f64 = (0..n)
        .map(|j| {
            let scale = atol + rtol * y[j].abs().max(high[j].abs());
            ((high[j] - low[j]) / scale).powi(2)
        })
        .sum();
    let error = if n == 0 { 0.0 } else { (sum / n as f64).sqrt() };
    let exponent = -1.0 / (tab.order_hat as f64 + 1.0);
    let factor = if error == 0.0 {
        MAX_FACTOR
    } else {
        (SAFETY * error.powf(exponent)).clamp(MIN_FACTOR, MAX_FACTOR)
    };
    Ok(StepOutcome {
        state: high,
        tau,
        error: Some(error),
        next_tau: Some(tau * factor),
        accepted: error <= 1.0,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub atol: f64,
    pub rtol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            atol: 1e-10,
            rtol: 1e-10,
            initial_step: 1e-3,
            max_steps: 10_000_000,
        }
    }
}

/// An accepted adaptive step, handed to the observer of
/// [`integrate_adaptive`]. The observer may modify `state` in place (e.g.
/// project it); the modified state is what the integration continues from.
pub struct AcceptedStep<'a> {
    pub index: usize,
    pub t: f64,
    pub tau: f64,
    pub error: f64,
    pub state: &'a mut Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdaptiveStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates from `t0` to `t1` with an embedded pair, landing exactly on
/// `t1`. Fails with [`Error::StiffnessFailure`] once the step drops below
/// `1e-14 · (t1 − t0)`.
pub fn integrate_adaptive<F, O>(
    f: &F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    tab: &EmbeddedTableau,
    opts: &AdaptiveOptions,
    mut observe: O,
) -> Result<(Vec<f64>, AdaptiveStats)>
where
    F: VectorField + ?Sized,
    O: FnMut(AcceptedStep<'_>) -> Result<()>,
{
    let span = t1 - t0;
    let min_step = 1e-14 * span.abs();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut tau = opts.initial_step.min(span);
    let mut stats = AdaptiveStats::default();
    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StiffnessFailure { t, tau });
        }
        let last = t + tau >= t1;
        let this_tau = if last { t1 - t } else { tau };
        if this_tau < min_step && !last {
            return Err(Error::StiffnessFailure { t, tau: this_tau });
        }
        let out = adaptive_embedded_step(f, &y, this_tau, opts.atol, opts.rtol, tab)?;
        let next = out.next_tau.unwrap_or(this_tau);
        if out.accepted {
            y = out.state;
            t = if last { t1 } else { t + this_tau };
            stats.accepted += 1;
            observe(AcceptedStep {
                index: stats.accepted,
                t,
                tau: this_tau,
                error: out.error.unwrap_or(0.0),
                state: &mut y,
            })?;
            // a clipped final step says nothing about the natural step size
            tau = if last { tau } else { next };
        } else {
            stats.rejected += 1;
            tau = next;
            if tau < min_step {
                return Err(Error::StiffnessFailure { t, tau });
            }
        }
    }
    Ok((y, stats))
}

/// Defaults for the Gauss fixed-point solver.
pub const GAUSS_FP_TOL: f64 = 1e-14;
pub const GAUSS_MAX_ITER: usize = 200;

#[derive(Debug, Clone)]
pub struct GaussOutcome {
    pub state: Vec<f64>,
    pub iterations: usize,
}

/// One step of an implicit Runge-Kutta method with stages solved by
/// fixed-point iteration.
///
/// Slopes start at `k_i = F(Φⁿ)` and are updated by
/// `k_i ← F(Φⁿ + τ Σ_j a_ij k_j)`. Iteration stops once the max-norm change
/// of the stage increments `τ k_i` between successive iterates is at most
/// `fp_tol`.
pub fn gauss_step<F: VectorField + ?Sized>(
    f: &F,
    y: &[f64],
    tau: f64,
    tab: &ImplicitTableau,
    fp_tol: f64,
    max_iter: usize,
) -> Result<GaussOutcome> {
    if !(fp_tol > 0.0) || max_iter == 0 {
        return Err(Error::Config(format!(
            "need fp_tol > 0 and max_iter >= 1, got {fp_tol}, {max_iter}"
        )));
    }
    let n = y.len();
    let s = tab.stages();
    let mut k0 = vec![0.0; n];
    f.eval(y, &mut k0)?;
    check_finite(&k0, 1)?;
    let mut ks = vec![k0; s];
    let mut next = vec![vec![0.0; n]; s];
    let mut stage = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        for (i, out) in next.iter_mut().enumerate() {
            combine(y, tau, &tab.a[i], &ks, &mut stage);
            check_finite(&stage, i + 1)?;
            f.eval(&stage, out)?;
        }
        residual = ks
            .iter()
            .zip(&next)
            .flat_map(|(old, new)| old.iter().zip(new).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
            * tau;
        std::mem::swap(&mut ks, &mut next);
        if !residual.is_finite() {
            break;
        }
        if residual <= fp_tol {
            let mut out = vec![0.0; n];
            combine(y, tau, &tab.b, &ks, &mut out);
            return Ok(GaussOutcome {
                state: out,
                iterations: iter,
            });
        }
    }
    Err(Error::FixedPointDivergence {
        iterations: max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableaux::{dopri54, gauss2, rk4};
    use std::cell::Cell;

    struct Counting<F> {
        inner: F,
        calls: Cell<usize>,
    }

    impl<F: VectorField> VectorField for Counting<F> {
        fn dim(&self) -> usize {
            self.inner.dim()
        }
        fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
            self.calls.set(self.calls.get() + 1);
            self.inner.eval(y, dy)
        }
    }

    fn linear(lambda: f64) -> FnField<impl Fn(&[f64], &mut [f64])> {
        FnField::new(1, move |y: &[f64], dy: &mut [f64]| dy[0] = lambda * y[0])
    }

    #[test]
    fn zero_field_is_identity() {
        let zero = FnField::new(3, |_: &[f64], dy: &mut [f64]| dy.fill(0.0));
        let y = vec![1.0, -2.0, 3.5];
        assert_eq!(explicit_rk_step(&zero, &y, 0.3, &rk4()).unwrap(), y);
        let g = gauss_step(&zero, &y, 0.3, &gauss2(), 1e-14, 5).unwrap();
        assert_eq!(g.state, y);
        assert_eq!(g.iterations, 1);
        let out = adaptive_embedded_step(&zero, &y, 0.3, 1e-6, 1e-6, &dopri54()).unwrap();
        assert_eq!(out.error, Some(0.0));
        assert!(out.accepted);
        assert_eq!(out.next_tau, Some(0.3 * 5.0));
    }

    #[test]
    fn rk4_matches_taylor_polynomial_for_linear_growth() {
        let tau: f64 = 0.1;
        let y = explicit_rk_step(&linear(1.0), &[1.0], tau, &rk4()).unwrap();
        let expect = 1.0 + tau + tau.powi(2) / 2.0 + tau.powi(3) / 6.0 + tau.powi(4) / 24.0;
        assert!((y[0] - expect).abs() < 1e-15);
        assert!((y[0] - 1.105_170_833_333_333_3).abs() < 1e-15);
    }

    #[test]
    fn explicit_step_evaluates_rhs_once_per_stage() {
        let f = Counting {
            inner: linear(-0.5),
            calls: Cell::new(0),
        };
        explicit_rk_step(&f, &[1.0], 0.1, &rk4()).unwrap();
        assert_eq!(f.calls.get(), 4);
        f.calls.set(0);
        adaptive_embedded_step(&f, &[1.0], 0.1, 1e-6, 1e-6, &dopri54()).unwrap();
        assert_eq!(f.calls.get(), 7);
    }

    #[test]
    fn non_finite_stage_is_reported() {
        let blowup = FnField::new(1, |y: &[f64], dy: &mut [f64]| {
            dy[0] = if y[0] > 1.0 { f64::NAN } else { 1.0 }
        });
        let err = explicit_rk_step(&blowup, &[0.9], 1.0, &rk4()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { stage: 2 }), "{err:?}");
    }

    #[test]
    fn rk4_global_order_on_time_dependent_growth() {
        // y' = cos(t) y, carried autonomously as (y, t)
        let f = FnField::new(2, |y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1].cos() * y[0];
            dy[1] = 1.0;
        });
        let exact = 1f64.sin().exp();
        let err = |m: usize| {
            let tau = 1.0 / m as f64;
            let mut y = vec![1.0, 0.0];
            for _ in 0..m {
                y = explicit_rk_step(&f, &y, tau, &rk4()).unwrap();
            }
            (y[0] - exact).abs()
        };
        let errs: Vec<f64> = [10, 20, 40, 80].iter().map(|&m| err(m)).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn deterministic_steps() {
        let f = linear(-1.3);
        let a = explicit_rk_step(&f, &[0.7], 0.01, &rk4()).unwrap();
        let b = explicit_rk_step(&f, &[0.7], 0.01, &rk4()).unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    fn run_adaptive(lambda: f64, tol: f64) -> (f64, AdaptiveStats) {
        let opts = AdaptiveOptions {
            atol: tol,
            rtol: tol,
            initial_step: 1e-3,
            ..Default::default()
        };
        let (y, stats) =
            integrate_adaptive(&linear(lambda), &[1.0], 0.0, 1.0, &dopri54(), &opts, |_| Ok(()))
                .unwrap();
        (y[0], stats)
    }

    #[test]
    fn tighter_tolerance_takes_smaller_steps() {
        let (_, loose) = run_adaptive(1.0, 1e-3);
        let (_, tight) = run_adaptive(1.0, 1e-9);
        assert!(tight.accepted > loose.accepted);
    }

    #[test]
    fn adaptive_decay_error_within_tolerance() {
        for tol in [1e-4, 1e-6, 1e-8] {
            let (y, _) = run_adaptive(-50.0, tol);
            assert!((y - (-50f64).exp()).abs() <= 10.0 * tol, "tol {tol}: {y:e}");
        }
    }

    #[test]
    fn adaptive_lands_on_end_time() {
        let mut last_t = 0.0;
        let f = linear(0.3);
        integrate_adaptive(
            &f,
            &[1.0],
            0.0,
            2.5,
            &dopri54(),
            &AdaptiveOptions::default(),
            |s| {
                assert!(s.t > last_t);
                last_t = s.t;
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(last_t, 2.5);
    }

    #[test]
    fn adaptive_reports_step_underflow() {
        // finite-time blowup at t = 1
        let f = FnField::new(1, |y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0]);
        let opts = AdaptiveOptions {
            atol: 1e-8,
            rtol: 1e-8,
            initial_step: 1e-2,
            max_steps: 100_000,
        };
        let err = integrate_adaptive(&f, &[1.0], 0.0, 2.0, &dopri54(), &opts, |_| Ok(()));
        assert!(matches!(
            err,
            Err(Error::StiffnessFailure { .. }) | Err(Error::NonFiniteState { .. })
        ));
    }

    #[test]
    fn gauss_stages_match_direct_linear_solve() {
        let lambda = -2.0;
        let tau = 0.1;
        let tab = gauss2();
        let y0 = 1.3;
        let out = gauss_step(&linear(lambda), &[y0], tau, &tab, 1e-15, 200).unwrap();
        // (I − τλA) k = λ y0 (1, 1)
        let m = |i: usize, j: usize| (i == j) as u8 as f64 - tau * lambda * tab.a[i][j];
        let det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        let rhs = lambda * y0;
        let k1 = (rhs * m(1, 1) - m(0, 1) * rhs) / det;
        let k2 = (m(0, 0) * rhs - rhs * m(1, 0)) / det;
        let expect = y0 + tau * (tab.b[0] * k1 + tab.b[1] * k2);
        assert!((out.state[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn gauss_conserves_quadratic_invariant_of_skew_system() {
        // y' = S y with S skew-symmetric
        let s = [[0.0, 1.0, -0.5], [-1.0, 0.0, 2.0], [0.5, -2.0, 0.0]];
        let f = FnField::new(3, move |y: &[f64], dy: &mut [f64]| {
            for i in 0..3 {
                dy[i] = (0..3).map(|j| s[i][j] * y[j]).sum();
            }
        });
        let fp_tol = 1e-14;
        let mut y = vec![1.0, 0.2, -0.7];
        let q = |y: &[f64]| 0.5 * y.iter().map(|v| v * v).sum::<f64>();
        let q0 = q(&y);
        for _ in 0..50 {
            let prev = q(&y);
            y = gauss_step(&f, &y, 0.05, &gauss2(), fp_tol, 200).unwrap().state;
            assert!((q(&y) - prev).abs() <= 10.0 * fp_tol);
        }
        assert!((q(&y) - q0).abs() < 1e-12);
    }

    #[test]
    fn gauss_reports_divergence() {
        let out = gauss_step(&linear(-1000.0), &[1.0], 1.0, &gauss2(), 1e-14, 30);
        assert!(matches!(out, Err(Error::FixedPointDivergence { .. })));
    }
}
