//! Experiment drivers: evolution with invariant tracking, convergence
//! studies and scheme comparisons.

use std::time::Instant;

use super::config::{steps_for, ExperimentConfig, ModelKind, Scenario, Scheme};
use crate::error::{Error, Result};
use crate::integrator::{explicit_rk_step, gauss_step, integrate_adaptive, AdaptiveOptions};
use crate::models::nls::{plane_wave_2d, soliton_1d, two_soliton_init};
use crate::models::sg::{exact_1d, exact_1d_velocity, ring_init};
use crate::models::{Model, Nls, NlsState, SineGordon};
use crate::projection::{projected_step, Projector};
use crate::spectral::Grid;
use crate::tableaux::{dopri54, gauss2, rk4};

type ExactFn = Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>;

/// A discretized model with its initial state and, when known, its exact
/// solution.
pub struct Problem {
    pub model: Box<dyn Model>,
    pub phi0: Vec<f64>,
    exact: Option<ExactFn>,
}

impl Problem {
    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact(&self, t: f64) -> Option<Result<Vec<f64>>> {
        self.exact.as_ref().map(|f| f(t))
    }
}

pub fn build_grid(cfg: &ExperimentConfig) -> Result<Grid> {
    Grid::new(&cfg.bounds, &cfg.nodes)
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let grid = build_grid(cfg)?;
    let p = cfg.params;
    match (cfg.model, cfg.scenario) {
        (ModelKind::Nls1d, Scenario::Soliton) => {
            let nls = Nls::new(&grid, p.beta);
            let sample = move |g: &Grid, t: f64| {
                NlsState::sample(g, |x, _| soliton_1d(x, t, p.alpha, p.beta, p.c)).to_flat()
            };
            let phi0 = sample(&grid, 0.0);
            let g = grid.clone();
            Ok(Problem {
                model: Box::new(nls),
                phi0,
                exact: Some(Box::new(move |t| Ok(sample(&g, t)))),
            })
        }
        (ModelKind::Nls1d, Scenario::TwoSoliton) => {
            let nls = Nls::new(&grid, p.beta);
            let phi0 = NlsState::sample(&grid, |x, _| {
                two_soliton_init(x, p.alpha, p.beta, p.c1, p.c2, p.delta)
            })
            .to_flat();
            Ok(Problem {
                model: Box::new(nls),
                phi0,
                exact: None,
            })
        }
        (ModelKind::Nls2d, Scenario::PlaneWave) => {
            let nls = Nls::new(&grid, p.beta);
            let sample = move |g: &Grid, t: f64| {
                NlsState::sample(g, |x, y| {
                    plane_wave_2d(x, y, t, p.amplitude, p.k1, p.k2, p.beta)
                })
                .to_flat()
            };
            let phi0 = sample(&grid, 0.0);
            let g = grid.clone();
            Ok(Problem {
                model: Box::new(nls),
                phi0,
                exact: Some(Box::new(move |t| Ok(sample(&g, t)))),
            })
        }
        (ModelKind::Sg1d, Scenario::Arctan) => {
            let sg = SineGordon::new(&grid, p.c0)?;
            let sample = {
                let sg = sg.clone();
                let g = grid.clone();
                move |t: f64| -> Result<Vec<f64>> {
                    let u = g.sample(|x, _| exact_1d(x, t));
                    let v = g.sample(|x, _| exact_1d_velocity(x, t));
                    Ok(sg.init(&u, &v)?.to_flat())
                }
            };
            let phi0 = sample(0.0)?;
            Ok(Problem {
                model: Box::new(sg),
                phi0,
                exact: Some(Box::new(sample)),
            })
        }
        (ModelKind::Sg2d, Scenario::Ring) => {
            let sg = SineGordon::new(&grid, p.c0)?;
            let u0 = grid.sample(|x, y| ring_init(x, y).0);
            let v0 = grid.sample(|x, y| ring_init(x, y).1);
            let phi0 = sg.init(&u0, &v0)?.to_flat();
            Ok(Problem {
                model: Box::new(sg),
                phi0,
                exact: None,
            })
        }
        (m, s) => Err(Error::Config(format!(
            "scenario '{s}' is not available for model '{m}'"
        ))),
    }
}

/// One recorded time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub n: usize,
    pub t: f64,
    pub h: f64,
    pub rm: f64,
    /// Projection multiplier: scale factor (norm projection) or `λ`
    /// (modified projection); 0 for unprojected schemes.
    pub lambda: f64,
    pub tau: f64,
    pub halvings: u32,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub state: Vec<f64>,
}

/// Time series of an evolution run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub rows: Vec<Row>,
    /// Original-variable energy history, for models where it differs from
    /// the conserved invariant.
    pub original: Option<Vec<Row>>,
    /// True when `|H⁰| < 1e-14` forced absolute residuals.
    pub absolute_residual: bool,
    pub final_state: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// Number of time steps taken.
    pub steps: usize,
    /// Largest `|λ|` (modified projection) or `|scale − 1|` (norm projection).
    pub max_projection_deviation: f64,
}

impl RunRecord {
    pub fn max_rm(&self) -> f64 {
        self.rows.iter().map(|r| r.rm).fold(0.0, f64::max)
    }

    /// `max_n |Hⁿ − H⁰|` of the original-variable energy.
    pub fn max_original_drift(&self) -> Option<f64> {
        self.original.as_ref().map(|rows| {
            let h0 = rows[0].h;
            rows.iter().map(|r| (r.h - h0).abs()).fold(0.0, f64::max)
        })
    }
}

// Tracks a scalar invariant relative to its initial value.
struct Residual {
    h0: f64,
    absolute: bool,
}

impl Residual {
    fn new(h0: f64) -> Self {
        Residual {
            h0,
            absolute: h0.abs() < 1e-14,
        }
    }

    fn of(&self, h: f64) -> f64 {
        if self.absolute {
            (h - self.h0).abs()
        } else {
            ((h - self.h0) / self.h0).abs()
        }
    }
}

/// Accepted step reported by [`advance`].
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub t: f64,
    pub tau: f64,
    pub multiplier: f64,
    pub deviation: f64,
    pub halvings: u32,
}

/// Steps `y` from `t0` to `t1` with the configured scheme, calling `on_step`
/// after every accepted step.
pub fn advance<F>(
    cfg: &ExperimentConfig,
    model: &dyn Model,
    projector: Option<&Projector>,
    y: Vec<f64>,
    t0: f64,
    t1: f64,
    mut on_step: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&StepInfo, &[f64]) -> Result<()>,
{
    if t1 <= t0 {
        return Ok(y);
    }
    match cfg.scheme {
        Scheme::Rk4Proj | Scheme::Rk4Raw | Scheme::Gauss2 => {
            let first = steps_for(t0, cfg.tau).ok_or_else(|| bad_time(t0, cfg.tau))?;
            let last = steps_for(t1, cfg.tau).ok_or_else(|| bad_time(t1, cfg.tau))?;
            let tab = rk4();
            let gauss = gauss2();
            let mut y = y;
            for n in first + 1..=last {
                let (next, multiplier, deviation, halvings) = match cfg.scheme {
                    Scheme::Rk4Proj => {
                        let proj = projector.expect("projected scheme requires a projector");
                        let (s, d) =
                            projected_step(model, &y, cfg.tau, &tab, proj, cfg.max_halvings)?;
                        (s, d.multiplier, d.max_deviation, d.halvings)
                    }
                    Scheme::Rk4Raw => (explicit_rk_step(model, &y, cfg.tau, &tab)?, 0.0, 0.0, 0),
                    Scheme::Gauss2 => {
                        let out = gauss_step(model, &y, cfg.tau, &gauss, cfg.fp_tol, cfg.max_iter)?;
                        (out.state, 0.0, 0.0, 0)
                    }
                    _ => unreachable!(),
                };
                y = next;
                let t = if n == last { t1 } else { n as f64 * cfg.tau };
                on_step(
                    &StepInfo {
                        t,
                        tau: cfg.tau,
                        multiplier,
                        deviation,
                        halvings,
                    },
                    &y,
                )?;
            }
            Ok(y)
        }
        Scheme::Dopri54 | Scheme::Dopri54Proj => {
            let opts = AdaptiveOptions {
                atol: cfg.tol,
                rtol: cfg.tol,
                initial_step: cfg.tau,
                ..Default::default()
            };
            let project = cfg.scheme == Scheme::Dopri54Proj;
            let (y, _) = integrate_adaptive(model, &y, t0, t1, &dopri54(), &opts, |step| {
                let (mut multiplier, mut deviation) = (0.0, 0.0);
                if project {
                    let proj = projector.expect("projected scheme requires a projector");
                    let p = proj.project(step.state).map_err(|e| match e {
                        Error::RejectStep(reason) => Error::ProjectionFailure {
                            reason,
                            halvings: 0,
                        },
                        other => other,
                    })?;
                    multiplier = p.multiplier;
                    deviation = match proj {
                        Projector::Norm { .. } => (p.multiplier - 1.0).abs(),
                        Projector::Modified(_) => p.multiplier.abs(),
                    };
                    *step.state = p.state;
                }
                on_step(
                    &StepInfo {
                        t: step.t,
                        tau: step.tau,
                        multiplier,
                        deviation,
                        halvings: 0,
                    },
                    step.state,
                )
            })?;
            Ok(y)
        }
    }
}

fn bad_time(t: f64, tau: f64) -> Error {
    Error::Config(format!("time {t} is not a multiple of tau = {tau}"))
}

fn needs_projector(scheme: Scheme) -> bool {
    matches!(scheme, Scheme::Rk4Proj | Scheme::Dopri54Proj)
}

/// Runs `cfg` from its initial data to `t_end`, recording the invariant every
/// `stride` steps and the state at every configured snapshot time.
pub fn run_evolution(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let problem = build_problem(cfg)?;
    evolve_problem(cfg, &problem)
}

pub fn evolve_problem(cfg: &ExperimentConfig, problem: &Problem) -> Result<RunRecord> {
    cfg.validate()?;
    let model = problem.model.as_ref();
    let projector = if needs_projector(cfg.scheme) {
        Some(model.projector(&problem.phi0)?)
    } else {
        None
    };
    let h0 = model.invariant(&problem.phi0);
    let res = Residual::new(h0);
    let original0 = model.original_invariant(&problem.phi0);
    let res_orig = original0.map(Residual::new);

    let row0 = Row {
        n: 0,
        t: 0.0,
        h: h0,
        rm: 0.0,
        lambda: 0.0,
        tau: 0.0,
        halvings: 0,
    };
    let mut rows = vec![row0];
    let mut original = original0.map(|h| vec![Row { h, ..row0 }]);
    let mut snapshots = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut n = 0usize;

    let mut times: Vec<f64> = cfg.snapshot_times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.first() == Some(&0.0) {
        snapshots.push(Snapshot {
            t: 0.0,
            state: problem.phi0.clone(),
        });
    }
    let mut segments: Vec<f64> = times.into_iter().filter(|&t| t > 0.0).collect();
    if segments.last() != Some(&cfg.t_end) {
        segments.push(cfg.t_end);
    }

    let mut y = problem.phi0.clone();
    let mut t_prev = 0.0;
    for &t_seg in &segments {
        let is_final = t_seg == cfg.t_end;
        y = advance(cfg, model, projector.as_ref(), y, t_prev, t_seg, |info, state| {
            n += 1;
            max_dev = max_dev.max(info.deviation);
            let at_end = is_final && info.t == cfg.t_end;
            if n.is_multiple_of(cfg.stride) || at_end {
                let h = model.invariant(state);
                let row = Row {
                    n,
                    t: info.t,
                    h,
                    rm: res.of(h),
                    lambda: info.multiplier,
                    tau: info.tau,
                    halvings: info.halvings,
                };
                rows.push(row);
                if let (Some(orig), Some(r)) = (original.as_mut(), res_orig.as_ref()) {
                    let h = model.original_invariant(state).unwrap_or(f64::NAN);
                    orig.push(Row { h, rm: r.of(h), ..row });
                }
            }
            Ok(())
        })
        .map_err(|e| at_step(e, n + 1))?;
        if cfg.snapshot_times.contains(&t_seg) {
            snapshots.push(Snapshot {
                t: t_seg,
                state: y.clone(),
            });
        }
        t_prev = t_seg;
    }

    Ok(RunRecord {
        rows,
        original,
        absolute_residual: res.absolute,
        final_state: y,
        snapshots,
        steps: n,
        max_projection_deviation: max_dev,
    })
}

fn at_step(e: Error, step: usize) -> Error {
    if e.is_config() {
        e
    } else {
        Error::AtStep {
            step,
            source: Box::new(e),
        }
    }
}

/// One row of a convergence table. `order` is `NaN` for the first row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub tau: f64,
    pub l2: f64,
    pub linf: f64,
    pub order: f64,
}

/// Observed order between two runs: `log(e₁/e₂) / log(τ₁/τ₂)`.
pub fn observed_order(tau1: f64, err1: f64, tau2: f64, err2: f64) -> f64 {
    (err1 / err2).ln() / (tau1 / tau2).ln()
}

fn final_error(cfg: &ExperimentConfig, problem: &Problem) -> Result<(f64, f64, RunRecord)> {
    let mut cfg = cfg.clone();
    cfg.snapshot_times.clear();
    cfg.stride = usize::MAX;
    let record = evolve_problem(&cfg, problem)?;
    let exact = problem
        .exact(cfg.t_end)
        .ok_or_else(|| Error::Config("scenario has no exact solution".into()))??;
    let (l2, linf) = problem.model.solution_error(&record.final_state, &exact);
    Ok((l2, linf, record))
}

/// Integrates to `t_end` for each step size and measures the error against
/// the exact solution. Orders are computed from the L² errors.
pub fn run_convergence(cfg: &ExperimentConfig, taus: &[f64]) -> Result<Vec<ConvergenceRow>> {
    let problem = build_problem(cfg)?;
    if !problem.has_exact() {
        return Err(Error::Config(format!(
            "scenario '{}' has no exact solution",
            cfg.scenario
        )));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut c = cfg.clone();
        c.tau = tau;
        let (l2, linf, _) = final_error(&c, &problem)?;
        let order = match rows.last() {
            Some(prev) => observed_order(prev.tau, prev.l2, tau, l2),
            None => f64::NAN,
        };
        rows.push(ConvergenceRow {
            tau,
            l2,
            linf,
            order,
        });
    }
    Ok(rows)
}

/// One `(scheme, τ)` cell of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub scheme: Scheme,
    pub tau: f64,
    pub l2: f64,
    pub linf: f64,
    pub order: f64,
    pub rm_final: f64,
    pub wall_seconds: f64,
    pub steps: usize,
    /// `ok`, or the failure message of this cell.
    pub status: String,
}

/// Runs every `(scheme, τ)` pair. Failing cells are recorded and the
/// comparison carries on.
pub fn compare_schemes(
    cfg: &ExperimentConfig,
    schemes: &[Scheme],
    taus: &[f64],
) -> Result<Vec<CompareRow>> {
    let problem = build_problem(cfg)?;
    let mut out = Vec::new();
    for &scheme in schemes {
        let mut prev: Option<(f64, f64)> = None;
        for &tau in taus {
            let mut c = cfg.clone();
            c.scheme = scheme;
            c.tau = tau;
            let start = Instant::now();
            let result = if problem.has_exact() {
                final_error(&c, &problem)
            } else {
                let mut c2 = c.clone();
                c2.snapshot_times.clear();
                c2.stride = usize::MAX;
                evolve_problem(&c2, &problem).map(|r| (f64::NAN, f64::NAN, r))
            };
            let wall_seconds = start.elapsed().as_secs_f64();
            let row = match result {
                Ok((l2, linf, record)) => {
                    let order = match prev {
                        Some((pt, pe)) => observed_order(pt, pe, tau, l2),
                        None => f64::NAN,
                    };
                    prev = Some((tau, l2));
                    CompareRow {
                        scheme,
                        tau,
                        l2,
                        linf,
                        order,
                        rm_final: record.rows.last().map_or(f64::NAN, |r| r.rm),
                        wall_seconds,
                        steps: record.steps,
                        status: "ok".into(),
                    }
                }
                Err(e) => {
                    prev = None;
                    CompareRow {
                        scheme,
                        tau,
                        l2: f64::NAN,
                        linf: f64::NAN,
                        order: f64::NAN,
                        rm_final: f64::NAN,
                        wall_seconds,
                        steps: 0,
                        status: e.to_string().replace(',', ";"),
                    }
                }
            };
            out.push(row);
        }
    }
    Ok(out)
}
