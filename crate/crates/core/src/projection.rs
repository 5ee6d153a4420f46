//! Explicit projection post-steps that restore a quadratic invariant after an
//! explicit Runge-Kutta step, and the projected-step driver.
//!
//! Two invariants are supported:
//!
//! * the pure norm `½‖Φ‖²`, restored by rescaling the predictor;
//! * a general quadratic energy `½⟨Φ, LΦ⟩` with `L` self-adjoint and positive
//!   semidefinite, restored by `Φ = (I + λL) Φ̃` where `λ` is the root of
//!   `αλ² + 2βλ + δ = 0` that vanishes with `δ`.
//!
//! The reference value is always taken from the initial state `Φ⁰`, so
//! round-off cannot accumulate in the invariant from step to step.

use std::sync::Arc;

use crate::error::{Error, RejectReason, Result};
use crate::integrator::{explicit_rk_step, VectorField};
use crate::spectral::{weighted_dot, Laplacian};
use crate::tableaux::ExplicitTableau;

/// Default number of step halvings tried before giving up on a step.
pub const DEFAULT_MAX_HALVINGS: u32 = 20;

/// One diagonal block of an [`EnergyOperator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorBlock {
    Identity,
    /// `−Δ_h`.
    NegLaplacian,
}

/// Block-diagonal, self-adjoint, positive semidefinite operator `L` acting
/// componentwise on a flat state.
#[derive(Debug, Clone)]
pub struct EnergyOperator {
    blocks: Vec<OperatorBlock>,
    block_len: usize,
    weight: f64,
    laplacian: Option<Arc<Laplacian>>,
}

impl EnergyOperator {
    /// `L = I` on states of length `len` with inner-product weight `weight`.
    pub fn identity(len: usize, weight: f64) -> Self {
        EnergyOperator {
            blocks: vec![OperatorBlock::Identity],
            block_len: len,
            weight,
            laplacian: None,
        }
    }

    /// Block-diagonal operator on the grid of `laplacian`, one block per
    /// state component.
    pub fn diagonal(blocks: Vec<OperatorBlock>, laplacian: Arc<Laplacian>) -> Self {
        let grid = laplacian.grid();
        EnergyOperator {
            block_len: grid.len(),
            weight: grid.cell_measure(),
            blocks,
            laplacian: Some(laplacian),
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len() * self.block_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn blocks(&self) -> &[OperatorBlock] {
        &self.blocks
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.len(), "state length does not match operator");
        for (i, block) in self.blocks.iter().enumerate() {
            let r = i * self.block_len..(i + 1) * self.block_len;
            match block {
                OperatorBlock::Identity => out[r.clone()].copy_from_slice(&x[r]),
                OperatorBlock::NegLaplacian => {
                    let lap = self
                        .laplacian
                        .as_ref()
                        .expect("Laplacian block requires a grid");
                    lap.apply(&x[r.clone()], &mut out[r.clone()]);
                    out[r].iter_mut().for_each(|v| *v = -*v);
                }
            }
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply(x, &mut out);
        out
    }

    /// Discrete inner product of whole states.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        weighted_dot(self.weight, u, v)
    }

    /// `⟨x, Lx⟩_h`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.inner(x, &self.apply_vec(x))
    }
}

/// Output of [`norm_project`].
#[derive(Debug, Clone)]
pub struct NormProjection {
    pub state: Vec<f64>,
    pub scale: f64,
}

/// Rescales `tilde` onto the sphere `‖Φ‖_h = ref_norm`.
pub fn norm_project(tilde: &[f64], ref_norm: f64, weight: f64) -> Result<NormProjection> {
    let norm = weighted_dot(weight, tilde, tilde).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::RejectStep(RejectReason::ZeroNorm));
    }
    let scale = ref_norm / norm;
    let state = if scale == 1.0 {
        tilde.to_vec()
    } else {
        tilde.iter().map(|v| v * scale).collect()
    };
    Ok(NormProjection { state, scale })
}

/// Output of [`modified_project`], with the coefficients of
/// `αλ² + 2βλ + δ = 0`.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub state: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

/// Small root of `αλ² + 2βλ + δ = 0` in rationalized form,
/// `λ = −δ / (β + √(β² − αδ))`.
pub fn small_root(alpha: f64, beta: f64, delta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::RejectStep(RejectReason::NonPositiveBeta));
    }
    let disc = beta * beta - alpha * delta;
    if !(disc > 0.0) {
        return Err(Error::RejectStep(RejectReason::NegativeDiscriminant));
    }
    Ok(-delta / (beta + disc.sqrt()))
}

/// Modified projection against a cached reference energy `⟨Φ⁰, LΦ⁰⟩_h`.
#[derive(Debug, Clone)]
pub struct ModifiedProjector {
    operator: EnergyOperator,
    reference: f64,
}

impl ModifiedProjector {
    /// Fails with [`Error::DegenerateReference`] if `⟨Φ⁰, LΦ⁰⟩_h` is not
    /// positive.
    pub fn new(operator: EnergyOperator, phi0: &[f64]) -> Result<Self> {
        let reference = operator.quadratic_form(phi0);
        if !(reference > 0.0) {
            return Err(Error::DegenerateReference(reference));
        }
        Ok(ModifiedProjector {
            operator,
            reference,
        })
    }

    pub fn operator(&self) -> &EnergyOperator {
        &self.operator
    }

    /// `⟨Φ⁰, LΦ⁰⟩_h`.
    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn project(&self, tilde: &[f64]) -> Result<ProjectionResult> {
        let op = &self.operator;
        let w = op.apply_vec(tilde);
        let lw = op.apply_vec(&w);
        let alpha = op.inner(&w, &lw);
        let beta = op.inner(&w, &w);
        let delta = op.inner(tilde, &w) - self.reference;
        let lambda = small_root(alpha, beta, delta)?;
        let state = if lambda == 0.0 {
            tilde.to_vec()
        } else {
            tilde.iter().zip(&w).map(|(x, wi)| x + lambda * wi).collect()
        };
        Ok(ProjectionResult {
            state,
            lambda,
            alpha,
            beta,
            delta,
        })
    }
}

/// `Φ = (I + λL) Φ̃` with `λ` chosen so that `⟨Φ, LΦ⟩_h = ⟨Φ⁰, LΦ⁰⟩_h`.
pub fn modified_project(
    tilde: &[f64],
    operator: &EnergyOperator,
    phi0: &[f64],
) -> Result<ProjectionResult> {
    ModifiedProjector::new(operator.clone(), phi0)?.project(tilde)
}

/// Post-step applied after each explicit step.
#[derive(Debug, Clone)]
pub enum Projector {
    /// Restores `‖Φ‖_h = ‖Φ⁰‖_h`.
    Norm { reference_norm: f64, weight: f64 },
    /// Restores `⟨Φ, LΦ⟩_h = ⟨Φ⁰, LΦ⁰⟩_h`.
    Modified(ModifiedProjector),
}

/// A projected state and the multiplier that produced it: the scale factor
/// for norm projection, `λ` for modified projection.
#[derive(Debug, Clone)]
pub struct Projected {
    pub state: Vec<f64>,
    pub multiplier: f64,
}

impl Projector {
    pub fn norm(phi0: &[f64], weight: f64) -> Result<Self> {
        let reference_norm = weighted_dot(weight, phi0, phi0).sqrt();
        if !(reference_norm > 0.0) {
            return Err(Error::DegenerateReference(reference_norm));
        }
        Ok(Projector::Norm {
            reference_norm,
            weight,
        })
    }

    pub fn modified(operator: EnergyOperator, phi0: &[f64]) -> Result<Self> {
        Ok(Projector::Modified(ModifiedProjector::new(operator, phi0)?))
    }

    pub fn project(&self, tilde: &[f64]) -> Result<Projected> {
        match self {
            Projector::Norm {
                reference_norm,
                weight,
            } => norm_project(tilde, *reference_norm, *weight).map(|p| Projected {
                state: p.state,
                multiplier: p.scale,
            }),
            Projector::Modified(m) => m.project(tilde).map(|p| Projected {
                state: p.state,
                multiplier: p.lambda,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// Multiplier of the last projection performed (scale or `λ`).
    pub multiplier: f64,
    /// Largest `|λ|` (or `|scale − 1|`) over the sub-steps.
    pub max_deviation: f64,
    pub halvings: u32,
}

/// Explicit Runge-Kutta step followed by `projector`.
///
/// If the projection rejects the predictor, the interval `τ` is covered by
/// `2^k` projected sub-steps of size `τ / 2^k`, for `k = 1..=max_halvings`.
pub fn projected_step<F: VectorField + ?Sized>(
    f: &F,
    y: &[f64],
    tau: f64,
    tab: &ExplicitTableau,
    projector: &Projector,
    max_halvings: u32,
) -> Result<(Vec<f64>, StepDiagnostics)> {
    let mut last_reason = RejectReason::ZeroNorm;
    for halvings in 0..=max_halvings {
        let substeps = 1usize << halvings;
        let h = tau / substeps as f64;
        match projected_substeps(f, y, h, substeps, tab, projector) {
            Ok((state, multiplier, max_deviation)) => {
                return Ok((
                    state,
                    StepDiagnostics {
                        multiplier,
                        max_deviation,
                        halvings,
                    },
                ))
            }
            Err(Error::RejectStep(reason)) => last_reason = reason,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ProjectionFailure {
        reason: last_reason,
        halvings: max_halvings,
    })
}

fn projected_substeps<F: VectorField + ?Sized>(
    f: &F,
    y: &[f64],
    h: f64,
    count: usize,
    tab: &ExplicitTableau,
    projector: &Projector,
) -> Result<(Vec<f64>, f64, f64)> {
    let mut state = y.to_vec();
    let mut multiplier = 0.0;
    let mut max_deviation: f64 = 0.0;
    for _ in 0..count {
        let tilde = explicit_rk_step(f, &state, h, tab)?;
        let p = projector.project(&tilde)?;
        multiplier = p.multiplier;
        let deviation = match projector {
            Projector::Norm { .. } => (p.multiplier - 1.0).abs(),
            Projector::Modified(_) => p.multiplier.abs(),
        };
        max_deviation = max_deviation.max(deviation);
        state = p.state;
    }
    Ok((state, multiplier, max_deviation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::FnField;
    use crate::spectral::Grid;
    use crate::tableaux::rk4;
    use proptest::prelude::*;

    #[test]
    fn norm_projection_examples() {
        let p = norm_project(&[3.0, 4.0], 1.0, 1.0).unwrap();
        assert!((p.state[0] - 0.6).abs() < 1e-15);
        assert!((p.state[1] - 0.8).abs() < 1e-15);

        let x = vec![0.6, 0.8];
        let p = norm_project(&x, 1.0, 1.0).unwrap();
        assert_eq!(p.scale, 1.0);
        assert_eq!(p.state, x);

        assert!(matches!(
            norm_project(&[0.0, 0.0], 1.0, 1.0),
            Err(Error::RejectStep(RejectReason::ZeroNorm))
        ));
    }

    #[test]
    fn modified_projection_hand_example() {
        let op = EnergyOperator::identity(2, 1.0);
        let r = modified_project(&[2.0, 0.0], &op, &[1.0, 0.0]).unwrap();
        assert_eq!((r.alpha, r.beta, r.delta), (4.0, 4.0, 3.0));
        assert!((r.lambda + 0.5).abs() < 1e-16);
        assert_eq!(r.state, vec![1.0, 0.0]);
        let residual = r.alpha * r.lambda.powi(2) + 2.0 * r.beta * r.lambda + r.delta;
        assert!(residual.abs() < 1e-15);
    }

    #[test]
    fn modified_projection_leaves_matched_energy_alone() {
        let op = EnergyOperator::identity(3, 0.5);
        let x = [0.3, -1.2, 2.0];
        let r = modified_project(&x, &op, &x).unwrap();
        assert_eq!(r.delta, 0.0);
        assert_eq!(r.lambda, 0.0);
        assert_eq!(r.state, x.to_vec());
    }

    #[test]
    fn degenerate_reference_rejected() {
        let op = EnergyOperator::identity(2, 1.0);
        assert!(matches!(
            ModifiedProjector::new(op, &[0.0, 0.0]),
            Err(Error::DegenerateReference(_))
        ));
        // constants are in the kernel of −Δ
        let grid = Grid::line(0.0, 1.0, 8).unwrap();
        let op = EnergyOperator::diagonal(
            vec![OperatorBlock::NegLaplacian],
            Arc::new(Laplacian::new(&grid)),
        );
        assert!(ModifiedProjector::new(op, &[2.0; 8]).is_err());
        assert!(Projector::norm(&[0.0; 4], 1.0).is_err());
    }

    #[test]
    fn small_root_rejections() {
        assert!(matches!(
            small_root(1.0, 0.0, 1.0),
            Err(Error::RejectStep(RejectReason::NonPositiveBeta))
        ));
        assert!(matches!(
            small_root(4.0, 1.0, 1.0),
            Err(Error::RejectStep(RejectReason::NegativeDiscriminant))
        ));
    }

    // Bisection for the root of αλ² + 2βλ + δ nearest zero (α ≥ 0, β > 0).
    fn bisect_small_root(alpha: f64, beta: f64, delta: f64) -> f64 {
        let q = |l: f64| alpha * l * l + 2.0 * beta * l + delta;
        let (mut lo, mut hi) = if delta >= 0.0 {
            let vertex = if alpha > 0.0 { -beta / alpha } else { -delta / beta };
            (vertex, 0.0)
        } else {
            (0.0, -delta / (2.0 * beta))
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambda_matches_bisection_oracle_on_spectral_operator() {
        use rand::{Rng, SeedableRng};
        let grid = Grid::line(0.0, 2.0 * std::f64::consts::PI, 16).unwrap();
        let op = EnergyOperator::diagonal(
            vec![OperatorBlock::NegLaplacian, OperatorBlock::Identity],
            Arc::new(Laplacian::new(&grid)),
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let phi0: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let tilde: Vec<f64> = phi0.iter().map(|v| v + rng.gen_range(-0.05..0.05)).collect();
            let r = modified_project(&tilde, &op, &phi0).unwrap();
            let oracle = bisect_small_root(r.alpha, r.beta, r.delta);
            assert!(
                (r.lambda - oracle).abs() <= 1e-12 * oracle.abs().max(1e-300),
                "{} vs {}",
                r.lambda,
                oracle
            );
        }
    }

    #[test]
    fn projected_step_with_zero_field() {
        let zero = FnField::new(2, |_: &[f64], dy: &mut [f64]| dy.fill(0.0));
        let phi0 = [0.5, -0.25];
        let proj = Projector::modified(EnergyOperator::identity(2, 1.0), &phi0).unwrap();
        let (y, d) = projected_step(&zero, &phi0, 0.1, &rk4(), &proj, 3).unwrap();
        assert_eq!(y, phi0.to_vec());
        assert_eq!(d.multiplier, 0.0);
        assert_eq!(d.halvings, 0);
    }

    #[test]
    fn projected_step_halves_until_projection_succeeds() {
        struct Collapse;
        impl VectorField for Collapse {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
                dy[0] = -y[0];
                Ok(())
            }
        }
        let tab = ExplicitTableau {
            name: "euler",
            a: vec![vec![0.0]],
            b: vec![1.0],
            c: vec![0.0],
            order: 1,
        };
        let proj = Projector::norm(&[1.0], 1.0).unwrap();
        // Euler with τ = 1 maps y to 0 and must be retried with τ/2
        let (y, d) = projected_step(&Collapse, &[1.0], 1.0, &tab, &proj, 4).unwrap();
        assert_eq!(d.halvings, 1);
        assert!((y[0] - 1.0).abs() < 1e-15);

        let err = projected_step(&Collapse, &[1.0], 1.0, &tab, &proj, 0).unwrap_err();
        assert!(matches!(
            err,
            Error::ProjectionFailure {
                reason: RejectReason::ZeroNorm,
                halvings: 0
            }
        ));
    }

    fn spectral_operator() -> EnergyOperator {
        let grid = Grid::line(0.0, 2.0 * std::f64::consts::PI, 16).unwrap();
        EnergyOperator::diagonal(
            vec![
                OperatorBlock::NegLaplacian,
                OperatorBlock::Identity,
                OperatorBlock::Identity,
            ],
            Arc::new(Laplacian::new(&grid)),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn norm_projection_hits_reference(
            x in prop::collection::vec(-10.0f64..10.0, 1..64),
            r in 1e-3f64..1e3,
            w in 1e-3f64..10.0,
        ) {
            prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
            let p = norm_project(&x, r, w).unwrap();
            let n = weighted_dot(w, &p.state, &p.state).sqrt();
            prop_assert!((n - r).abs() <= 1e-13 * r);
        }

        #[test]
        fn modified_projection_restores_energy_and_solves_quadratic(
            phi0 in prop::collection::vec(-1.0f64..1.0, 48),
            noise in prop::collection::vec(-1.0f64..1.0, 48),
            eps in 0.0f64..0.1,
        ) {
            let op = spectral_operator();
            let tilde: Vec<f64> = phi0.iter().zip(&noise).map(|(a, b)| a + eps * b).collect();
            let proj = ModifiedProjector::new(op.clone(), &phi0).unwrap();
            let r = proj.project(&tilde).unwrap();
            let after = op.quadratic_form(&r.state);
            prop_assert!((after - proj.reference()).abs() <= 1e-12 * proj.reference());
            let res = r.alpha * r.lambda * r.lambda + 2.0 * r.beta * r.lambda + r.delta;
            let scale = r.alpha.abs() + r.beta.abs() + r.delta.abs();
            prop_assert!(res.abs() <= 1e-10 * scale);
            if r.alpha != 0.0 {
                let other = (-r.beta - (r.beta * r.beta - r.alpha * r.delta).sqrt()) / r.alpha;
                prop_assert!(r.lambda.abs() <= other.abs());
            }
        }
    }
}
