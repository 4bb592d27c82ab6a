//! Flat `key=value` experiment configuration with dotted namespaces.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default, so an empty file is a complete configuration; unknown or
//! repeated keys are errors.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use nse3dvar_core::continuous::{ContinuousFilterParams, LimitMode, OuTable, SplitOrder};
use nse3dvar_core::dynamics::{ForcingSpec, SolverParams};
use nse3dvar_core::filter::{validate_tracked, GainOperator};
use nse3dvar_core::grid::{Cutoff, Normalization, WavenumberGrid};
use nse3dvar_core::observations::{InitialSpectrum, NoiseModel};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Eta,
    Alpha,
    Lambda,
    Omega,
    Sigma0,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::Alpha => "alpha",
            SweepParam::Lambda => "lambda",
            SweepParam::Omega => "omega",
            SweepParam::Sigma0 => "sigma0",
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "eta" => SweepParam::Eta,
            "alpha" => SweepParam::Alpha,
            "lambda" => SweepParam::Lambda,
            "omega" => SweepParam::Omega,
            "sigma0" => SweepParam::Sigma0,
            _ => return Err("expected one of eta, alpha, lambda, omega, sigma0".into()),
        })
    }
}

/// Stable/marginal/diverged thresholds for sweep summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    /// First record of the "stays below the bound" window.
    pub stable_start: usize,
    /// Fraction of that window that must lie below the upper bound.
    pub stable_fraction: f64,
    /// First record of the median window.
    pub window_start: usize,
    /// Number of trailing records averaged for the final-window mean.
    pub final_window: usize,
    /// Median squared relative error at or above which a run has diverged.
    pub diverged_rel: f64,
    /// Continuous runs: median relative error below which a run is stable.
    pub rel_stable: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n: usize,
    pub length: f64,
    pub nu: f64,
    pub dt: f64,
    pub forcing_mode: (i64, i64),
    pub forcing_amplitude: f64,
    pub t_spin: f64,
    pub init: InitialSpectrum,
    pub sigma: f64,
    pub beta: f64,
    /// Observation cutoff as a multiple of `λ₁`; infinite for complete
    /// observations.
    pub lambda: f64,
    pub h: f64,
    pub steps: usize,
    pub mode: FilterMode,
    pub eta: f64,
    pub alpha: f64,
    pub ell: Normalization,
    pub omega: f64,
    pub sigma0: f64,
    pub c_beta: f64,
    pub c_alpha: f64,
    pub limit: LimitMode,
    pub horizon: f64,
    pub record_interval: f64,
    pub order: SplitOrder,
    pub seed_truth: u64,
    pub seed_init: u64,
    pub seed_noise: u64,
    pub seed_filter: u64,
    pub tracked: Vec<(i64, i64)>,
    pub sweep_param: SweepParam,
    pub sweep_values: Vec<f64>,
    pub classify: Classifier,
}

impl Default for Config {
    fn default() -> Self {
        let c = ContinuousFilterParams::default();
        Self {
            n: 32,
            length: 2.0,
            nu: 0.01,
            dt: 0.005,
            forcing_mode: (5, 5),
            forcing_amplitude: 1.0,
            t_spin: 100.0,
            init: InitialSpectrum::default(),
            sigma: 0.04,
            beta: 0.0,
            lambda: f64::INFINITY,
            h: 0.5,
            steps: 400,
            mode: FilterMode::Discrete,
            eta: 0.04,
            alpha: 1.0,
            ell: Normalization::InverseLambda1,
            omega: c.omega,
            sigma0: c.sigma0,
            c_beta: c.beta,
            c_alpha: c.alpha,
            limit: c.mode,
            horizon: 100.0,
            record_interval: 0.5,
            order: SplitOrder::NavierStokesFirst,
            seed_truth: 1,
            seed_init: 2,
            seed_noise: 3,
            seed_filter: 4,
            tracked: vec![(1, 1), (5, 5), (7, 7)],
            sweep_param: SweepParam::Eta,
            sweep_values: Vec::new(),
            classify: Classifier {
                stable_start: 50,
                stable_fraction: 0.9,
                window_start: 100,
                final_window: 50,
                diverged_rel: 0.5,
                rel_stable: 0.1,
            },
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_mode(key: &str, value: &str) -> Result<(i64, i64), ConfigError> {
    let (a, b) = value
        .split_once(':')
        .ok_or_else(|| invalid(key, value, "expected a mode as k1:k2"))?;
    Ok((parse(key, a.trim())?, parse(key, b.trim())?))
}

fn parse_list<T>(value: &str, item: impl Fn(&str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn fmt_mode((a, b): (i64, i64)) -> String {
    format!("{a}:{b}")
}

impl Config {
    /// Every recognised key, in echo order.
    pub const KEYS: &'static [&'static str] = &[
        "grid.n",
        "grid.length",
        "solver.nu",
        "solver.dt",
        "solver.forcing_mode",
        "solver.forcing_amplitude",
        "solver.t_spin",
        "init.amplitude",
        "init.max_k_squared",
        "observation.sigma",
        "observation.beta",
        "observation.lambda",
        "observation.h",
        "observation.steps",
        "filter.mode",
        "filter.eta",
        "filter.alpha",
        "filter.ell",
        "continuous.omega",
        "continuous.sigma0",
        "continuous.beta",
        "continuous.alpha",
        "continuous.limit",
        "continuous.horizon",
        "continuous.record_interval",
        "continuous.order",
        "seed.truth",
        "seed.init",
        "seed.noise",
        "seed.filter",
        "output.tracked",
        "sweep.parameter",
        "sweep.values",
        "classify.stable_start",
        "classify.stable_fraction",
        "classify.window_start",
        "classify.final_window",
        "classify.diverged_rel",
        "classify.rel_stable",
    ];

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse_str(&text)
    }

    /// Parses and validates configuration text.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: lineno + 1,
                text: raw.to_string(),
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey(key.to_string()));
            }
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "grid.n" => self.n = parse(key, v)?,
            "grid.length" => self.length = parse(key, v)?,
            "solver.nu" => self.nu = parse(key, v)?,
            "solver.dt" => self.dt = parse(key, v)?,
            "solver.forcing_mode" => self.forcing_mode = parse_mode(key, v)?,
            "solver.forcing_amplitude" => self.forcing_amplitude = parse(key, v)?,
            "solver.t_spin" => self.t_spin = parse(key, v)?,
            "init.amplitude" => self.init.amplitude = parse(key, v)?,
            "init.max_k_squared" => self.init.max_k_squared = parse(key, v)?,
            "observation.sigma" => self.sigma = parse(key, v)?,
            "observation.beta" => self.beta = parse(key, v)?,
            "observation.lambda" => self.lambda = parse(key, v)?,
            "observation.h" => self.h = parse(key, v)?,
            "observation.steps" => self.steps = parse(key, v)?,
            "filter.mode" => {
                self.mode = match v {
                    "discrete" => FilterMode::Discrete,
                    "continuous" => FilterMode::Continuous,
                    _ => return Err(invalid(key, v, "expected discrete or continuous")),
                }
            }
            "filter.eta" => self.eta = parse(key, v)?,
            "filter.alpha" => self.alpha = parse(key, v)?,
            "filter.ell" => {
                self.ell = match v {
                    "inv_lambda1" => Normalization::InverseLambda1,
                    _ => Normalization::Value(parse(key, v)?),
                }
            }
            "continuous.omega" => self.omega = parse(key, v)?,
            "continuous.sigma0" => self.sigma0 = parse(key, v)?,
            "continuous.beta" => self.c_beta = parse(key, v)?,
            "continuous.alpha" => self.c_alpha = parse(key, v)?,
            "continuous.limit" => {
                self.limit = LimitMode::parse(v).ok_or_else(|| invalid(key, v, "expected spde or pde"))?
            }
            "continuous.horizon" => self.horizon = parse(key, v)?,
            "continuous.record_interval" => self.record_interval = parse(key, v)?,
            "continuous.order" => {
                self.order = match v {
                    "ns_first" => SplitOrder::NavierStokesFirst,
                    "ou_first" => SplitOrder::RelaxationFirst,
                    _ => return Err(invalid(key, v, "expected ns_first or ou_first")),
                }
            }
            "seed.truth" => self.seed_truth = parse(key, v)?,
            "seed.init" => self.seed_init = parse(key, v)?,
            "seed.noise" => self.seed_noise = parse(key, v)?,
            "seed.filter" => self.seed_filter = parse(key, v)?,
            "output.tracked" => self.tracked = parse_list(v, |s| parse_mode(key, s))?,
            "sweep.parameter" => self.sweep_param = parse(key, v)?,
            "sweep.values" => self.sweep_values = parse_list(v, |s| parse(key, s))?,
            "classify.stable_start" => self.classify.stable_start = parse(key, v)?,
            "classify.stable_fraction" => self.classify.stable_fraction = parse(key, v)?,
            "classify.window_start" => self.classify.window_start = parse(key, v)?,
            "classify.final_window" => self.classify.final_window = parse(key, v)?,
            "classify.diverged_rel" => self.classify.diverged_rel = parse(key, v)?,
            "classify.rel_stable" => self.classify.rel_stable = parse(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// `--seed N` sets the truth, initial-mean, noise and filter seeds to
    /// `N, N+1, N+2, N+3`.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed_truth = seed;
        self.seed_init = seed.wrapping_add(1);
        self.seed_noise = seed.wrapping_add(2);
        self.seed_filter = seed.wrapping_add(3);
    }

    /// The fully resolved configuration as `(key, value)` pairs, in the
    /// order of [`Config::KEYS`].
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let ell = match self.ell {
            Normalization::InverseLambda1 => "inv_lambda1".to_string(),
            Normalization::Value(v) => v.to_string(),
        };
        let list = |v: Vec<String>| v.join(",");
        let values = vec![
            self.n.to_string(),
            self.length.to_string(),
            self.nu.to_string(),
            self.dt.to_string(),
            fmt_mode(self.forcing_mode),
            self.forcing_amplitude.to_string(),
            self.t_spin.to_string(),
            self.init.amplitude.to_string(),
            self.init.max_k_squared.to_string(),
            self.sigma.to_string(),
            self.beta.to_string(),
            self.lambda.to_string(),
            self.h.to_string(),
            self.steps.to_string(),
            match self.mode {
                FilterMode::Discrete => "discrete",
                FilterMode::Continuous => "continuous",
            }
            .to_string(),
            self.eta.to_string(),
            self.alpha.to_string(),
            ell,
            self.omega.to_string(),
            self.sigma0.to_string(),
            self.c_beta.to_string(),
            self.c_alpha.to_string(),
            self.limit.as_str().to_string(),
            self.horizon.to_string(),
            self.record_interval.to_string(),
            match self.order {
                SplitOrder::NavierStokesFirst => "ns_first",
                SplitOrder::RelaxationFirst => "ou_first",
            }
            .to_string(),
            self.seed_truth.to_string(),
            self.seed_init.to_string(),
            self.seed_noise.to_string(),
            self.seed_filter.to_string(),
            list(self.tracked.iter().map(|&m| fmt_mode(m)).collect()),
            self.sweep_param.as_str().to_string(),
            list(self.sweep_values.iter().map(f64::to_string).collect()),
            self.classify.stable_start.to_string(),
            self.classify.stable_fraction.to_string(),
            self.classify.window_start.to_string(),
            self.classify.final_window.to_string(),
            self.classify.diverged_rel.to_string(),
            self.classify.rel_stable.to_string(),
        ];
        Self::KEYS.iter().copied().zip(values).collect()
    }

    pub fn grid(&self) -> Result<Arc<WavenumberGrid>, ConfigError> {
        Ok(Arc::new(WavenumberGrid::new(self.n, self.length)?))
    }

    pub fn cutoff(&self) -> Cutoff {
        if self.lambda.is_infinite() {
            Cutoff::Complete
        } else {
            Cutoff::Lambda1Multiple(self.lambda)
        }
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            nu: self.nu,
            dt: self.dt,
            forcing: Some(ForcingSpec {
                mode: self.forcing_mode,
                amplitude: self.forcing_amplitude,
            }),
        }
    }

    pub fn noise(&self) -> Result<NoiseModel, ConfigError> {
        let mut m = NoiseModel::new(self.sigma, self.beta, self.cutoff())?;
        m.ell = self.ell;
        Ok(m)
    }

    pub fn gain(&self, grid: &Arc<WavenumberGrid>) -> Result<GainOperator, ConfigError> {
        Ok(GainOperator::new(grid.clone(), self.eta, self.alpha, self.cutoff(), self.ell)?)
    }

    pub fn continuous_params(&self) -> ContinuousFilterParams {
        ContinuousFilterParams {
            omega: self.omega,
            sigma0: self.sigma0,
            beta: self.c_beta,
            alpha: self.c_alpha,
            mode: self.limit,
            ell: self.ell,
        }
    }

    /// Checks every cross-field invariant by building the objects the
    /// commands will use.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let grid = self.grid()?;
        let sp = self.solver_params();
        sp.validate()?;
        nse3dvar_core::dynamics::curl_forcing(&grid, sp.forcing.unwrap())?;
        sp.steps_for(self.h)?;
        sp.steps_for(self.t_spin)?;
        if !(self.lambda > 0.0) {
            return Err(invalid("observation.lambda", &self.lambda.to_string(), "must be positive or inf"));
        }
        self.noise()?;
        self.gain(&grid)?;
        if let Normalization::Value(v) = self.ell {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid("filter.ell", &v.to_string(), "must be positive"));
            }
        }
        OuTable::new(&grid, &self.continuous_params(), self.dt)?;
        sp.steps_for(self.horizon)?;
        if sp.steps_for(self.record_interval)? == 0 {
            return Err(invalid("continuous.record_interval", &self.record_interval.to_string(), "must be positive"));
        }
        validate_tracked(&grid, &self.tracked)?;
        let c = &self.classify;
        if !(0.0..=1.0).contains(&c.stable_fraction) {
            return Err(invalid("classify.stable_fraction", &c.stable_fraction.to_string(), "must be in [0, 1]"));
        }
        if c.final_window == 0 {
            return Err(invalid("classify.final_window", "0", "must be at least 1"));
        }
        Ok(())
    }
}
