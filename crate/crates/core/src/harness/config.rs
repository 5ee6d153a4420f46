//! Experiment configuration in flat `key = value` form.
//!
//! ```text
//! # NLS soliton, fourth-order projected scheme
//! model = nls1d
//! scenario = soliton
//! scheme = rk4_proj
//! tau = 0.0025
//! t_end = 1
//! ```
//!
//! Unspecified keys fall back to the defaults of the chosen scenario.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::projection::DEFAULT_MAX_HALVINGS;
use crate::integrator::{GAUSS_FP_TOL, GAUSS_MAX_ITER};
use crate::quadratization::DEFAULT_C0;

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($name), " '{}' (expected one of: {})"),
                        other,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(ModelKind {
    Nls1d => "nls1d",
    Nls2d => "nls2d",
    Sg1d => "sg1d",
    Sg2d => "sg2d",
});

keyword_enum!(Scenario {
    Soliton => "soliton",
    TwoSoliton => "two_soliton",
    PlaneWave => "plane_wave",
    Arctan => "arctan",
    Ring => "ring",
});

keyword_enum!(
    /// Time discretization. `rk4_proj` is the projected explicit scheme (norm
    /// projection for NLS, modified projection for sine-Gordon).
    Scheme {
        Rk4Proj => "rk4_proj",
        Rk4Raw => "rk4_raw",
        Dopri54 => "dopri54",
        Dopri54Proj => "dopri54_proj",
        Gauss2 => "gauss2",
    }
);

impl Scheme {
    pub fn is_adaptive(&self) -> bool {
        matches!(self, Scheme::Dopri54 | Scheme::Dopri54Proj)
    }
}

impl ModelKind {
    pub fn default_scenario(&self) -> Scenario {
        match self {
            ModelKind::Nls1d => Scenario::Soliton,
            ModelKind::Nls2d => Scenario::PlaneWave,
            ModelKind::Sg1d => Scenario::Arctan,
            ModelKind::Sg2d => Scenario::Ring,
        }
    }

    fn supports(&self, s: Scenario) -> bool {
        matches!(
            (self, s),
            (ModelKind::Nls1d, Scenario::Soliton | Scenario::TwoSoliton)
                | (ModelKind::Nls2d, Scenario::PlaneWave)
                | (ModelKind::Sg1d, Scenario::Arctan)
                | (ModelKind::Sg2d, Scenario::Ring)
        )
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelKind::Nls1d | ModelKind::Sg1d => 1,
            ModelKind::Nls2d | ModelKind::Sg2d => 2,
        }
    }
}

/// Physical parameters of the scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
    pub amplitude: f64,
    pub k1: f64,
    pub k2: f64,
    pub c0: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            alpha: 1.0,
            beta: 2.0,
            c: 4.0,
            c1: 1.0,
            c2: 0.1,
            delta: 25.0,
            amplitude: 1.0,
            k1: 1.0,
            k2: 1.0,
            c0: DEFAULT_C0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelKind,
    pub scenario: Scenario,
    pub scheme: Scheme,
    pub bounds: Vec<(f64, f64)>,
    pub nodes: Vec<usize>,
    /// Fixed step, or initial step for adaptive schemes.
    pub tau: f64,
    /// Absolute and relative tolerance for adaptive schemes.
    pub tol: f64,
    pub t_end: f64,
    /// Record every `stride` steps (the first and last step are always kept).
    pub stride: usize,
    pub params: Params,
    pub max_halvings: u32,
    pub fp_tol: f64,
    pub max_iter: usize,
    pub snapshot_times: Vec<f64>,
}

impl ExperimentConfig {
    /// Reference-experiment defaults for a model/scenario pair.
    pub fn defaults(model: ModelKind, scenario: Scenario) -> Result<Self> {
        if !model.supports(scenario) {
            return Err(Error::Config(format!(
                "scenario '{scenario}' is not available for model '{model}'"
            )));
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut params = Params::default();
        let (bounds, nodes, tau, t_end, snapshot_times) = match scenario {
            Scenario::Soliton => (vec![(-40.0, 40.0)], vec![800], 0.0025, 1.0, vec![]),
            Scenario::TwoSoliton => {
                params.alpha = 0.5;
                params.beta = 1.0;
                (vec![(-20.0, 80.0)], vec![1024], 0.001, 44.0, vec![0.0, 23.0, 44.0])
            }
            Scenario::PlaneWave => {
                params.beta = -2.0;
                (vec![(0.0, two_pi); 2], vec![16, 16], 0.005, 5.0, vec![])
            }
            Scenario::Arctan => (vec![(-50.0, 50.0)], vec![1024], 0.01, 10.0, vec![]),
            Scenario::Ring => (
                vec![(-30.0, 10.0); 2],
                vec![200, 200],
                0.1,
                10.0,
                vec![0.0, 2.5, 5.0, 7.5, 10.0],
            ),
        };
        Ok(ExperimentConfig {
            name: format!("{model}_{scenario}"),
            model,
            scenario,
            scheme: Scheme::Rk4Proj,
            bounds,
            nodes,
            tau,
            tol: 1e-10,
            t_end,
            stride: 1,
            params,
            max_halvings: DEFAULT_MAX_HALVINGS,
            fp_tol: GAUSS_FP_TOL,
            max_iter: GAUSS_MAX_ITER,
            snapshot_times,
        })
    }

    /// Parses config text, then applies `overrides` (later entries win).
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = parse_pairs(text)?;
        pairs.extend(overrides.iter().cloned());
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let last = |key: &str| {
            pairs
                .iter()
                .rev()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        let model: ModelKind = last("model")
            .ok_or_else(|| Error::Config("missing required key 'model'".into()))?
            .parse()?;
        let scenario = match last("scenario") {
            Some(s) => s.parse()?,
            None => model.default_scenario(),
        };
        let mut cfg = Self::defaults(model, scenario)?;
        for (key, value) in pairs {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. `model` and `scenario` are accepted but only take
    /// effect through [`from_pairs`](Self::from_pairs).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.params;
        match key {
            "model" | "scenario" => {}
            "name" => self.name = value.trim().to_string(),
            "scheme" => self.scheme = value.parse()?,
            "x_min" => self.bounds[0].0 = num(key, value)?,
            "x_max" => self.bounds[0].1 = num(key, value)?,
            "y_min" => *self.axis_mut(key)?.0 = num(key, value)?,
            "y_max" => *self.axis_mut(key)?.1 = num(key, value)?,
            "nx" => self.nodes[0] = count(key, value)?,
            "ny" => {
                if self.nodes.len() < 2 {
                    return Err(Error::Config("'ny' given for a 1D model".into()));
                }
                self.nodes[1] = count(key, value)?
            }
            "tau" => self.tau = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "stride" => self.stride = count(key, value)?,
            "alpha" => p.alpha = num(key, value)?,
            "beta" => p.beta = num(key, value)?,
            "c" => p.c = num(key, value)?,
            "c1" => p.c1 = num(key, value)?,
            "c2" => p.c2 = num(key, value)?,
            "delta" => p.delta = num(key, value)?,
            "amplitude" => p.amplitude = num(key, value)?,
            "k1" => p.k1 = num(key, value)?,
            "k2" => p.k2 = num(key, value)?,
            "c0" => p.c0 = num(key, value)?,
            "max_halvings" => {
                self.max_halvings = count(key, value)?
                    .try_into()
                    .map_err(|_| Error::Config("max_halvings too large".into()))?
            }
            "fp_tol" => self.fp_tol = num(key, value)?,
            "max_iter" => self.max_iter = count(key, value)?,
            "snapshot_times" => self.snapshot_times = parse_list(value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    fn axis_mut(&mut self, key: &str) -> Result<(&mut f64, &mut f64)> {
        match self.bounds.get_mut(1) {
            Some((a, b)) => Ok((a, b)),
            None => Err(Error::Config(format!("'{key}' given for a 1D model"))),
        }
    }

    /// Checks ranges and, for fixed-step schemes, that `τ` divides `t_end`
    /// and every snapshot time.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("'{name}' must be positive, got {v}")))
            }
        };
        positive("tau", self.tau)?;
        positive("t_end", self.t_end)?;
        positive("tol", self.tol)?;
        positive("fp_tol", self.fp_tol)?;
        if self.stride == 0 || self.max_iter == 0 {
            return Err(Error::Config("'stride' and 'max_iter' must be >= 1".into()));
        }
        for (d, &(a, b)) in self.bounds.iter().enumerate() {
            if !(b > a) {
                return Err(Error::Config(format!(
                    "axis {d}: need max > min, got [{a}, {b}]"
                )));
            }
        }
        for &n in &self.nodes {
            if n < 4 || n % 2 != 0 {
                return Err(Error::Config(format!(
                    "node counts must be even and >= 4, got {n}"
                )));
            }
        }
        match self.model {
            ModelKind::Nls1d | ModelKind::Nls2d => {
                if self.scenario != Scenario::PlaneWave
                    && !(self.params.alpha > 0.0 && self.params.beta > 0.0)
                {
                    return Err(Error::Config(
                        "soliton scenarios need alpha > 0 and beta > 0".into(),
                    ));
                }
            }
            ModelKind::Sg1d | ModelKind::Sg2d => {
                if !(self.params.c0 >= 0.0) {
                    return Err(Error::Config("'c0' must be >= 0".into()));
                }
            }
        }
        if !self.scheme.is_adaptive() {
            self.step_count()?;
        }
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_end).contains(&t) {
                return Err(Error::Config(format!(
                    "snapshot time {t} outside [0, {}]",
                    self.t_end
                )));
            }
            if !self.scheme.is_adaptive() {
                steps_for(t, self.tau).ok_or_else(|| {
                    Error::Config(format!(
                        "snapshot time {t} is not a multiple of tau = {}",
                        self.tau
                    ))
                })?;
            }
        }
        Ok(())
    }

    /// `M` with `M τ = t_end`.
    pub fn step_count(&self) -> Result<usize> {
        steps_for(self.t_end, self.tau).ok_or_else(|| {
            Error::Config(format!(
                "t_end = {} is not an integer multiple of tau = {}",
                self.t_end, self.tau
            ))
        })
    }
}

/// Number of steps of size `tau` that land on `t`, if it is an integer up to
/// a relative 1e-9.
pub fn steps_for(t: f64, tau: f64) -> Option<usize> {
    let m = (t / tau).round();
    if m >= 0.0 && (m * tau - t).abs() <= 1e-9 * t.abs().max(tau) {
        Some(m as usize)
    } else {
        None
    }
}

fn num(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("'{key}': cannot parse '{value}' as a number")))
}

fn count(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("'{key}': cannot parse '{value}' as a count")))
}

/// Comma-separated list of numbers.
pub fn parse_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num("list", s))
        .collect()
}

/// Splits `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parses a `key=value` command-line override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Error::Config(format!("override '{s}' is not of the form key=value")))
}
