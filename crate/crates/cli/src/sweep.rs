//! One-parameter sweeps with a per-value summary and regime classification.

use std::path::PathBuf;

use nse3dvar_core::filter::StepRecord;
use rayon::prelude::*;

use crate::commands::{self, Context};
use crate::config::{Classifier, Config, FilterMode, SweepParam};
use crate::error::CliError;
use crate::io::{self, num, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Stable,
    Marginal,
    Diverged,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Stable => "stable",
            Regime::Marginal => "marginal",
            Regime::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub median_err_sq: f64,
    pub final_mean_err_sq: f64,
    pub median_lower: Option<f64>,
    pub median_upper: Option<f64>,
    pub final_mean_upper: Option<f64>,
    /// Fraction of records from `stable_start` on with the error at or
    /// below the upper bound (discrete runs only).
    pub frac_below_upper: Option<f64>,
    /// Median of `|m - u|² / |u|²` over the median window.
    pub median_rel_sq: f64,
    pub regime: Regime,
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Summarizes a run; `rel_sq[j]` is the squared relative error of
/// record `j`.
pub fn summarize(records: &[StepRecord], rel_sq: &[f64], c: &Classifier) -> Summary {
    let len = records.len();
    let from = c.window_start.min(len.saturating_sub(1));
    let window = &records[from..];
    let tail = &records[len - c.final_window.min(len)..];
    let err = |rs: &[StepRecord]| rs.iter().map(|r| r.err_sq_h0).collect::<Vec<_>>();
    let col = |rs: &[StepRecord], f: fn(&StepRecord) -> Option<f64>| rs.iter().map(f).collect::<Option<Vec<f64>>>();
    let lower = col(window, |r| r.lower_bound);
    let upper = col(window, |r| r.upper_bound);
    let upper_tail = col(tail, |r| r.upper_bound);
    let median_rel_sq = median(&rel_sq[from..]);

    let stable_from = c.stable_start.min(len.saturating_sub(1));
    let frac_below_upper = col(&records[stable_from..], |r| r.upper_bound).map(|ub| {
        let below = records[stable_from..]
            .iter()
            .zip(&ub)
            .filter(|(r, u)| r.err_sq_h0 <= **u)
            .count();
        below as f64 / ub.len() as f64
    });
    let stable = match frac_below_upper {
        Some(f) => f >= c.stable_fraction,
        None => median_rel_sq.sqrt() <= c.rel_stable,
    };
    let regime = if stable {
        Regime::Stable
    } else if median_rel_sq >= c.diverged_rel {
        Regime::Diverged
    } else {
        Regime::Marginal
    };
    Summary {
        median_err_sq: median(&err(window)),
        final_mean_err_sq: mean(&err(tail)),
        median_lower: lower.map(|v| median(&v)),
        median_upper: upper.map(|v| median(&v)),
        final_mean_upper: upper_tail.map(|v| mean(&v)),
        frac_below_upper,
        median_rel_sq,
        regime,
    }
}

/// `cfg` with the swept parameter set to `value`.
pub fn apply(cfg: &Config, param: SweepParam, value: f64) -> Result<Config, CliError> {
    let mut c = cfg.clone();
    let continuous = c.mode == FilterMode::Continuous;
    match param {
        SweepParam::Eta => c.eta = value,
        SweepParam::Lambda => c.lambda = value,
        SweepParam::Alpha if continuous => c.c_alpha = value,
        SweepParam::Alpha => c.alpha = value,
        SweepParam::Omega => c.omega = value,
        SweepParam::Sigma0 => c.sigma0 = value,
    }
    let applies = match param {
        SweepParam::Eta | SweepParam::Lambda => !continuous,
        SweepParam::Omega | SweepParam::Sigma0 => continuous,
        SweepParam::Alpha => true,
    };
    if !applies {
        return Err(crate::error::ConfigError::InvalidValue {
            key: "sweep.parameter".into(),
            value: param.as_str().into(),
            reason: "does not apply to the configured filter.mode".into(),
        }
        .into());
    }
    c.validate()?;
    Ok(c)
}

/// Records of one run and the squared relative error of each.
type RunOutput = (Vec<StepRecord>, Vec<f64>);

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "value",
    "regime",
    "median_err_sq_H0",
    "final_mean_err_sq_H0",
    "median_lower_bound",
    "median_upper_bound",
    "final_mean_upper_bound",
    "frac_below_upper",
    "median_rel_err_sq",
    "run_file",
];

/// Runs the configured filter once per value and writes the per-run CSVs
/// and a summary table.
pub fn run(ctx: &Context, param: SweepParam, values: &[f64]) -> Result<Vec<PathBuf>, CliError> {
    let base = &ctx.cfg;
    let configs = values
        .iter()
        .map(|&v| apply(base, param, v))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = base.grid()?;
    let mut written = Vec::new();
    let mut rows = Vec::new();
    if !configs.is_empty() {
        ctx.log(format!("sweeping {} over {} values", param.as_str(), values.len()));
        let continuous = base.mode == FilterMode::Continuous;
        // truth and initial mean do not depend on the swept parameters
        let truth = if continuous {
            vec![commands::attractor_state(base, &grid, base.seed_truth)?]
        } else {
            commands::make_truth(base, &grid)?
        };
        let m0 = commands::attractor_state(base, &grid, base.seed_init)?;
        let results: Vec<Result<RunOutput, CliError>> = configs
            .par_iter()
            .map(|cfg| {
                if continuous {
                    let recs = commands::continuous_records(cfg, &grid, truth[0].clone(), m0.clone())?;
                    let rel = recs.iter().map(|r| r.rel_err_l2.unwrap_or(f64::NAN).powi(2)).collect();
                    Ok((recs, rel))
                } else {
                    let obs = commands::make_observations(cfg, &truth)?;
                    let recs = commands::discrete_records(cfg, &grid, &truth, &obs, m0.clone())?;
                    let rel = recs
                        .iter()
                        .zip(&truth)
                        .map(|(r, u)| r.err_sq_h0 / u.norm_sq())
                        .collect();
                    Ok((recs, rel))
                }
            })
            .collect();
        for (i, (cfg, res)) in configs.iter().zip(results).enumerate() {
            let (recs, rel) = res?;
            let name = format!("sweep_{}_{i}.csv", param.as_str());
            let p = io::write_records(&ctx.path(&name), cfg, "sweep", &recs, continuous)?;
            written.push(p);
            rows.push((values[i], summarize(&recs, &rel, &base.classify), name));
        }
    }
    let summary_path = ctx.path(&format!("sweep_{}_summary.csv", param.as_str()));
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut out = Output::create(&summary_path, "sweep", base, &[])?;
    out.row(SUMMARY_COLUMNS)?;
    for (v, s, name) in &rows {
        out.row([
            num(*v),
            s.regime.as_str().to_string(),
            num(s.median_err_sq),
            num(s.final_mean_err_sq),
            opt(s.median_lower),
            opt(s.median_upper),
            opt(s.final_mean_upper),
            opt(s.frac_below_upper),
            num(s.median_rel_sq),
            name.clone(),
        ])?;
    }
    written.insert(0, out.finish()?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nse3dvar_core::filter::StepRecord;

    fn rec(step: usize, err: f64, ub: Option<f64>) -> StepRecord {
        StepRecord {
            step,
            time: step as f64,
            err_sq_h0: err,
            err_h1: err.sqrt(),
            lower_bound: ub.map(|u| u / 2.0),
            upper_bound: ub,
            rel_err_l2: None,
            modes: vec![],
        }
    }

    fn classifier() -> Classifier {
        Config::default().classify
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn regimes() {
        let c = classifier();
        let below: Vec<_> = (0..=400).map(|j| rec(j, if j < 10 { 100.0 } else { 1.0 }, Some(1.5))).collect();
        let rel = vec![1e-3; 401];
        assert_eq!(summarize(&below, &rel, &c).regime, Regime::Stable);
        let above: Vec<_> = (0..=400).map(|j| rec(j, 10.0, Some(1.5))).collect();
        assert_eq!(summarize(&above, &rel, &c).regime, Regime::Marginal);
        assert_eq!(summarize(&above, &vec![1.5; 401], &c).regime, Regime::Diverged);
        let s = summarize(&above, &rel, &c);
        assert_eq!(s.median_err_sq, 10.0);
        assert_eq!(s.median_upper, Some(1.5));
        assert_eq!(s.median_lower, Some(0.75));
        assert_eq!(s.frac_below_upper, Some(0.0));
    }

    #[test]
    fn continuous_runs_use_the_relative_error() {
        let c = classifier();
        let recs: Vec<_> = (0..=200).map(|j| rec(j, 1.0, None)).collect();
        let s = summarize(&recs, &vec![0.0004; 201], &c);
        assert_eq!(s.regime, Regime::Stable);
        assert!(s.median_upper.is_none() && s.frac_below_upper.is_none());
        assert_eq!(summarize(&recs, &vec![0.04; 201], &c).regime, Regime::Marginal);
    }

    #[test]
    fn parameters_must_fit_the_mode() {
        let mut cfg = Config::default();
        assert!(apply(&cfg, SweepParam::Omega, 10.0).is_err());
        assert_eq!(apply(&cfg, SweepParam::Lambda, 100.0).unwrap().lambda, 100.0);
        cfg.mode = FilterMode::Continuous;
        assert!(apply(&cfg, SweepParam::Eta, 0.4).is_err());
        assert_eq!(apply(&cfg, SweepParam::Alpha, 1.0).unwrap().c_alpha, 1.0);
    }
}
