//! Discrete-time 3DVAR.
//!
//! The filter mean is updated by the operator-convex combination
//!
//! ```text
//! m̂_{j+1} = B Ψ(m̂_j, h) + (I - B) y_{j+1}
//! ```
//!
//! with a static gain `B` that is diagonal in the Fourier basis. On observed
//! modes `b_k = η²μ_k^{2α} / (1 + η²μ_k^{2α})`; unobserved modes have
//! `b_k = 1`, so they are pure forecast. No covariance is propagated.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::dynamics::Solver;
use crate::field::{FieldKind, SpectralField};
use crate::grid::{Cutoff, Normalization, WavenumberGrid};
use crate::math;
use crate::observations::{NoiseModel, Observation};
use crate::transform::Fft2d;
use crate::{Error, Result};

/// Diagonal gain `B`, with the complement `I - B` stored alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct GainOperator {
    grid: Arc<WavenumberGrid>,
    cutoff: Cutoff,
    eta: f64,
    alpha: f64,
    ell: Normalization,
    b: Vec<f64>,
    complement: Vec<f64>,
}

impl GainOperator {
    /// 3DVAR gain `B₀(η) = (I + η²A₀^{2α})⁻¹ η²A₀^{2α}` on `W_λ`, identity
    /// on its complement.
    ///
    /// `eta = 0` trusts the observations completely and `eta = ∞` ignores
    /// them.
    pub fn new(
        grid: Arc<WavenumberGrid>,
        eta: f64,
        alpha: f64,
        cutoff: Cutoff,
        ell: Normalization,
    ) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::param("eta", "must be >= 0"));
        }
        if !alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        if let Normalization::Value(l) = ell {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::param("ell", "must be positive"));
            }
        }
        cutoff.validate()?;
        let len = grid.len();
        let mut b = vec![1.0; len];
        for (i, bk) in b.iter_mut().enumerate() {
            if grid.is_active(i) && cutoff.observes(&grid, i) {
                let mu = grid.a0_eigenvalue(i, ell);
                let x = eta * eta * math::powf(mu, 2.0 * alpha);
                *bk = if x.is_infinite() { 1.0 } else { x / (1.0 + x) };
            }
        }
        let complement = b.iter().map(|bk| 1.0 - bk).collect();
        Ok(Self {
            grid,
            cutoff,
            eta,
            alpha,
            ell,
            b,
            complement,
        })
    }

    /// `B = 0` on `W_λ`: the filter that copies the observations.
    pub fn trust_data(grid: Arc<WavenumberGrid>, cutoff: Cutoff) -> Result<Self> {
        Self::new(grid, 0.0, 0.0, cutoff, Normalization::InverseLambda1)
    }

    /// `B = I`: pure forecast.
    pub fn trust_model(grid: Arc<WavenumberGrid>) -> Self {
        Self::new(grid, f64::INFINITY, 0.0, Cutoff::Complete, Normalization::InverseLambda1)
            .expect("valid parameters")
    }

    pub fn grid(&self) -> &Arc<WavenumberGrid> {
        &self.grid
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ell(&self) -> Normalization {
        self.ell
    }

    /// Per-mode gain `b_k`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Per-mode `1 - b_k`.
    pub fn complement(&self) -> &[f64] {
        &self.complement
    }

    pub fn b_at(&self, k1: i64, k2: i64) -> Option<f64> {
        self.grid.index_of(k1, k2).map(|i| self.b[i])
    }

    /// `B f`.
    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        scale_modes(f, &self.b)
    }

    /// `(I - B) f`.
    pub fn apply_complement(&self, f: &SpectralField) -> SpectralField {
        scale_modes(f, &self.complement)
    }

    /// `B forecast + (I - B) y`, evaluated as `y + B(forecast - y)` so that
    /// agreeing inputs come back bit-for-bit.
    pub fn blend(&self, forecast: &SpectralField, y: &SpectralField) -> SpectralField {
        let mut out = forecast.clone().with_kind(FieldKind::Vorticity);
        for (i, o) in out.coeffs_mut().iter_mut().enumerate() {
            let b = self.b[i];
            let yk = y.coeffs()[i];
            if b == 0.0 {
                *o = yk;
            } else if b < 1.0 {
                *o = yk + (*o - yk) * b;
            }
        }
        out
    }
}

fn scale_modes(f: &SpectralField, w: &[f64]) -> SpectralField {
    let mut out = f.clone();
    for (c, s) in out.coeffs_mut().iter_mut().zip(w) {
        *c *= *s;
    }
    out
}

/// `E|(I - B)ξ|² = tr((I - B)Γ(I - B)*) = Σ_k (1 - b_k)² g_k`.
pub fn lower_bound(gain: &GainOperator, noise: &NoiseModel) -> f64 {
    let g = gain.grid();
    (0..g.len())
        .map(|i| {
            let c = gain.complement[i];
            c * c * noise.variance(g, i)
        })
        .sum()
}

/// Error of the trivial filter `B = 0`: `tr(Γ)` for complete observations,
/// `tr(Γ) + |Q_λ u|²` otherwise.
pub fn upper_bound(noise: &NoiseModel, u: &SpectralField) -> f64 {
    let tr = noise.trace(u.grid());
    if noise.cutoff.is_complete() {
        tr
    } else {
        tr + u.q_lambda(noise.cutoff).norm_sq()
    }
}

/// Filter mean after `step` assimilation cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub step: usize,
    pub mean: SpectralField,
}

/// The forecast and analysis of one assimilation cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub forecast: SpectralField,
    pub state: FilterState,
}

/// 3DVAR filter: forward model, observation interval and gain.
pub struct Filter<F: Fft2d> {
    solver: Solver<F>,
    gain: GainOperator,
    h: f64,
    inner_steps: usize,
}

impl<F: Fft2d> Filter<F> {
    pub fn new(solver: Solver<F>, gain: GainOperator, h: f64) -> Result<Self> {
        let inner_steps = solver.params().steps_for(h)?;
        if **gain.grid() != **solver.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            solver,
            gain,
            h,
            inner_steps,
        })
    }

    pub fn gain(&self) -> &GainOperator {
        &self.gain
    }

    pub fn solver(&mut self) -> &mut Solver<F> {
        &mut self.solver
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `Ψ(m, h)`.
    pub fn forecast(&mut self, m: &SpectralField) -> Result<SpectralField> {
        self.solver.advance(m, self.inner_steps)
    }

    /// One assimilation cycle; `obs.step` must be `state.step + 1`.
    pub fn step(&mut self, state: &FilterState, obs: &Observation) -> Result<Cycle> {
        if obs.step != state.step + 1 {
            return Err(Error::StepMismatch {
                current: state.step,
                found: obs.step,
            });
        }
        let forecast = self
            .forecast(&state.mean)
            .map_err(|_| Error::NonFinite { step: obs.step })?;
        let mean = self.gain.blend(&forecast, &obs.y);
        Ok(Cycle {
            forecast,
            state: FilterState {
                step: obs.step,
                mean,
            },
        })
    }
}

/// Value of one tracked mode at an assimilation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSample {
    pub k: (i64, i64),
    pub truth: Complex64,
    pub estimate: Complex64,
    /// `None` before the first observation or for continuous runs.
    pub observation: Option<Complex64>,
}

/// Per-step diagnostics of a filter run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// `|m̂_j - u_j|²`.
    pub err_sq_h0: f64,
    /// `‖m̂_j - u_j‖`.
    pub err_h1: f64,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    /// `|m̂ - u| / |u|`, reported by continuous runs.
    pub rel_err_l2: Option<f64>,
    pub modes: Vec<ModeSample>,
}

impl StepRecord {
    pub fn is_finite(&self) -> bool {
        self.err_sq_h0.is_finite()
            && self.err_h1.is_finite()
            && self.lower_bound.is_none_or(f64::is_finite)
            && self.upper_bound.is_none_or(f64::is_finite)
            && self.rel_err_l2.is_none_or(f64::is_finite)
    }
}

pub(crate) fn sample_modes(
    tracked: &[(i64, i64)],
    truth: &SpectralField,
    estimate: &SpectralField,
    obs: Option<&SpectralField>,
) -> Vec<ModeSample> {
    tracked
        .iter()
        .map(|&(k1, k2)| ModeSample {
            k: (k1, k2),
            truth: truth.mode(k1, k2),
            estimate: estimate.mode(k1, k2),
            observation: obs.map(|y| y.mode(k1, k2)),
        })
        .collect()
}

/// Checks that every tracked mode is an active lattice mode.
pub fn validate_tracked(grid: &WavenumberGrid, tracked: &[(i64, i64)]) -> Result<()> {
    for &(k1, k2) in tracked {
        match grid.index_of(k1, k2) {
            Some(i) if grid.is_active(i) => {}
            _ => return Err(Error::ModeOutOfBand(k1, k2)),
        }
    }
    Ok(())
}

/// Inputs of a discrete run against a precomputed truth.
pub struct DiscreteRun<'a> {
    /// `u_0 ..= u_J` at the observation times.
    pub truth: &'a [SpectralField],
    /// `y_1 ..= y_J`.
    pub observations: &'a [Observation],
    pub initial_mean: SpectralField,
    pub noise: NoiseModel,
    pub tracked: &'a [(i64, i64)],
}

/// Runs the filter over every observation and returns one record per
/// assimilation time `j = 0..=J`.
pub fn run_filter<F: Fft2d>(filter: &mut Filter<F>, run: DiscreteRun<'_>) -> Result<Vec<StepRecord>> {
    run_filter_with(filter, run, |_, _, _| Ok(()))
}

/// [`run_filter`] with a hook called after every cycle with the previous
/// state, the observation and the new cycle.
pub fn run_filter_with<F: Fft2d>(
    filter: &mut Filter<F>,
    run: DiscreteRun<'_>,
    mut hook: impl FnMut(&FilterState, &Observation, &Cycle) -> Result<()>,
) -> Result<Vec<StepRecord>> {
    let DiscreteRun {
        truth,
        observations,
        initial_mean,
        noise,
        tracked,
    } = run;
    if observations.len() + 1 != truth.len() {
        return Err(Error::SizeMismatch {
            expected: truth.len().saturating_sub(1),
            found: observations.len(),
        });
    }
    validate_tracked(filter.gain.grid(), tracked)?;
    initial_mean.ensure_same_grid(&truth[0])?;
    let lower = lower_bound(&filter.gain, &noise);
    let h = filter.h;
    let record = |j: usize, m: &SpectralField, y: Option<&SpectralField>| {
        let e = m - &truth[j];
        StepRecord {
            step: j,
            time: j as f64 * h,
            err_sq_h0: e.norm_sq(),
            err_h1: e.sobolev_norm(1.0),
            lower_bound: Some(lower),
            upper_bound: Some(upper_bound(&noise, &truth[j])),
            rel_err_l2: None,
            modes: sample_modes(tracked, &truth[j], m, y),
        }
    };

    let mut state = FilterState {
        step: 0,
        mean: initial_mean,
    };
    let mut records = Vec::with_capacity(truth.len());
    records.push(record(0, &state.mean, None));
    for obs in observations {
        let cycle = filter.step(&state, obs)?;
        hook(&state, obs, &cycle)?;
        records.push(record(obs.step, &cycle.state.mean, Some(&obs.y)));
        state = cycle.state;
    }
    Ok(records)
}

/// Largest per-mode mismatch of the error-propagation identity
///
/// ```text
/// m̂_{j+1} - u_{j+1} = B(Ψ(m̂_j) - Ψ(u_j)) + (I - B)ξ_{j+1}
/// ```
///
/// relative to the size of the operands entering each mode.
pub fn error_identity_residual(
    gain: &GainOperator,
    next_mean: &SpectralField,
    next_truth: &SpectralField,
    forecast_mean: &SpectralField,
    forecast_truth: &SpectralField,
    xi: &SpectralField,
) -> f64 {
    let b = gain.b();
    let c = gain.complement();
    let mut worst: f64 = 0.0;
    for i in 0..b.len() {
        let lhs = next_mean.coeffs()[i] - next_truth.coeffs()[i];
        let model = (forecast_mean.coeffs()[i] - forecast_truth.coeffs()[i]) * b[i];
        let noise = xi.coeffs()[i] * c[i];
        let rhs = model + noise;
        let scale = next_mean.coeffs()[i].norm()
            + next_truth.coeffs()[i].norm()
            + (forecast_mean.coeffs()[i] * b[i]).norm()
            + (forecast_truth.coeffs()[i] * b[i]).norm()
            + noise.norm();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).norm() / scale);
        }
    }
    worst
}
