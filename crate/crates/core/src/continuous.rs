//! Continuous-observation limit of 3DVAR.
//!
//! The filter mean solves Navier-Stokes plus a relaxation toward the truth,
//!
//! ```text
//! dm̂/dt + νAm̂ + B(m̂, m̂) + ωA₀^{-2α}(m̂ - u) = f + ωσ₀A₀^{-2α-β} dW/dt,
//! ```
//!
//! with the noise term dropped in the deterministic (`r < 1`) limit. It is
//! integrated by Lie splitting: one ETD4RK step of the Navier-Stokes part,
//! then an exact Ornstein-Uhlenbeck step per mode with the truth frozen at
//! the end of the substep. The truth is advanced in lockstep with the same
//! solver.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::dynamics::{steps_for, Solver};
use crate::field::SpectralField;
use crate::filter::{sample_modes, validate_tracked, StepRecord};
use crate::grid::{Normalization, WavenumberGrid};
use crate::math;
use crate::rng;
use crate::transform::Fft2d;
use crate::{Error, Result};

/// Which limit equation is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitMode {
    /// `r = 1`: stochastically forced relaxation.
    Spde,
    /// `r < 1`: deterministic relaxation, `σ₀` ignored.
    Pde,
}

impl LimitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LimitMode::Spde => "spde",
            LimitMode::Pde => "pde",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spde" => Some(LimitMode::Spde),
            "pde" => Some(LimitMode::Pde),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousFilterParams {
    /// Relaxation strength `ω`.
    pub omega: f64,
    /// Noise amplitude `σ₀`.
    pub sigma0: f64,
    pub beta: f64,
    pub alpha: f64,
    pub mode: LimitMode,
    pub ell: Normalization,
}

impl Default for ContinuousFilterParams {
    fn default() -> Self {
        Self {
            omega: 100.0,
            sigma0: 0.005,
            beta: 0.0,
            alpha: 0.5,
            mode: LimitMode::Spde,
            ell: Normalization::InverseLambda1,
        }
    }
}

impl ContinuousFilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::param("omega", "must be finite and >= 0"));
        }
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) {
            return Err(Error::param("sigma0", "must be finite and >= 0"));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::param("alpha", "exponents must be finite"));
        }
        Ok(())
    }

    /// Relaxation rate `r_k = ω μ_k^{-2α}`.
    pub fn rate(&self, grid: &WavenumberGrid, idx: usize) -> f64 {
        let mu = grid.a0_eigenvalue(idx, self.ell);
        self.omega * math::powf(mu, -2.0 * self.alpha)
    }

    /// Noise amplitude `s_k = ω σ₀ μ_k^{-2α-β}`; zero in the PDE limit.
    pub fn noise_amplitude(&self, grid: &WavenumberGrid, idx: usize) -> f64 {
        if self.mode == LimitMode::Pde {
            return 0.0;
        }
        let mu = grid.a0_eigenvalue(idx, self.ell);
        self.omega * self.sigma0 * math::powf(mu, -2.0 * self.alpha - self.beta)
    }
}

/// Exact one-step law of the per-mode Ornstein-Uhlenbeck relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct OuTable {
    dt: f64,
    /// `e^{-r_k dt}`.
    pub decay: Vec<f64>,
    /// `1 - e^{-r_k dt}`, computed without cancellation.
    pub pull: Vec<f64>,
    /// Standard deviation of the complex increment, `E|η_k|² = std_k²`.
    pub std: Vec<f64>,
}

impl OuTable {
    pub fn new(grid: &WavenumberGrid, params: &ContinuousFilterParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "time step must be positive"));
        }
        let len = grid.len();
        let mut decay = vec![1.0; len];
        let mut pull = vec![0.0; len];
        let mut std = vec![0.0; len];
        for i in grid.active_indices() {
            let r = params.rate(grid, i);
            let s = params.noise_amplitude(grid, i);
            decay[i] = math::exp(-r * dt);
            pull[i] = -math::exp_m1(-r * dt);
            std[i] = if r == 0.0 {
                s * math::sqrt(dt)
            } else {
                // (1 - e^{-2r dt}) / (2r), written to keep precision for small r dt
                let x = -2.0 * r * dt;
                let one_minus = -x * crate::dynamics::phi(1, x);
                s * math::sqrt(one_minus / (2.0 * r))
            };
        }
        Ok(Self { dt, decay, pull, std })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// One exact relaxation step toward the frozen truth `u`:
/// `m_k ← u_k + e^{-r_k dt}(m_k - u_k) + η_k`.
pub fn ou_step<R: RngCore + ?Sized>(
    m: &SpectralField,
    u: &SpectralField,
    table: &OuTable,
    rng: &mut R,
) -> Result<SpectralField> {
    m.ensure_same_grid(u)?;
    let grid = m.grid().clone();
    let mut out = m.clone();
    for i in grid.half_lattice() {
        let j = grid.conjugate_index(i).expect("active modes pair up");
        // m + (1 - e^{-r dt})(u - m) leaves m bit-for-bit unchanged when r = 0
        let mk = m.coeffs()[i];
        let mut v = mk + (u.coeffs()[i] - mk) * table.pull[i];
        let sd = table.std[i];
        if sd > 0.0 {
            v += rng::complex_normal(rng, sd * sd);
        }
        out.coeffs_mut()[i] = v;
        out.coeffs_mut()[j] = v.conj();
    }
    Ok(out)
}

/// Order of the two substeps within one split step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitOrder {
    #[default]
    NavierStokesFirst,
    RelaxationFirst,
}

/// Inputs of a continuous-observation run.
pub struct ContinuousRun<'a> {
    pub truth0: SpectralField,
    pub initial_mean: SpectralField,
    pub params: ContinuousFilterParams,
    /// Total integration time; a multiple of the solver step.
    pub horizon: f64,
    /// Spacing of the records; a multiple of the solver step.
    pub record_interval: f64,
    pub tracked: &'a [(i64, i64)],
    /// Seed of the continuous-filter noise stream.
    pub seed: u64,
    pub order: SplitOrder,
}

/// Integrates the truth and the continuous-time filter in lockstep and
/// records the error every `record_interval`.
pub fn split_step_run<F: Fft2d>(solver: &mut Solver<F>, run: ContinuousRun<'_>) -> Result<Vec<StepRecord>> {
    let ContinuousRun {
        truth0,
        initial_mean,
        params,
        horizon,
        record_interval,
        tracked,
        seed,
        order,
    } = run;
    let dt = solver.params().dt;
    let total = steps_for(horizon, dt)?;
    let every = steps_for(record_interval, dt)?;
    if every == 0 {
        return Err(Error::param("record_interval", "must be at least one step"));
    }
    validate_tracked(solver.grid(), tracked)?;
    initial_mean.ensure_same_grid(&truth0)?;
    let table = OuTable::new(solver.grid(), &params, dt)?;
    let mut rng = rng::stream(seed, rng::Stream::Continuous);

    let record = |s: usize, m: &SpectralField, u: &SpectralField| {
        let e = m - u;
        let un = u.norm();
        StepRecord {
            step: s,
            time: s as f64 * dt,
            err_sq_h0: e.norm_sq(),
            err_h1: e.sobolev_norm(1.0),
            lower_bound: None,
            upper_bound: None,
            rel_err_l2: Some(if un > 0.0 { e.norm() / un } else { e.norm() }),
            modes: sample_modes(tracked, u, m, None),
        }
    };

    let mut u = truth0;
    let mut m = initial_mean;
    let mut records = Vec::with_capacity(total / every + 1);
    records.push(record(0, &m, &u));
    for s in 1..=total {
        let u_next = solver.step(&u);
        m = match order {
            SplitOrder::NavierStokesFirst => {
                let m_ns = solver.step(&m);
                ou_step(&m_ns, &u_next, &table, &mut rng)?
            }
            SplitOrder::RelaxationFirst => {
                let m_ou = ou_step(&m, &u, &table, &mut rng)?;
                solver.step(&m_ou)
            }
        };
        u = u_next;
        if !(m.is_finite() && u.is_finite()) {
            return Err(Error::NonFinite { step: s });
        }
        if s % every == 0 {
            records.push(record(s, &m, &u));
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldKind;
    use alloc::sync::Arc;
    use num_complex::Complex64;

    fn grid() -> Arc<WavenumberGrid> {
        Arc::new(WavenumberGrid::new(32, 2.0).unwrap())
    }

    #[test]
    fn half_alpha_rate_is_omega_over_k_squared() {
        let g = grid();
        let p = ContinuousFilterParams { omega: 100.0, ..Default::default() };
        for i in g.active_indices() {
            let expected = 100.0 / g.k_squared(i) as f64;
            assert!((p.rate(&g, i) - expected).abs() <= 1e-13 * expected);
        }
    }

    #[test]
    fn table_is_finite_and_contracting() {
        let g = grid();
        let p = ContinuousFilterParams::default();
        let t = OuTable::new(&g, &p, 0.005).unwrap();
        for i in g.active_indices() {
            assert!(t.decay[i] > 0.0 && t.decay[i] < 1.0);
            assert!(t.std[i].is_finite() && t.std[i] > 0.0);
        }
        let pde = OuTable::new(&g, &ContinuousFilterParams { mode: LimitMode::Pde, ..p }, 0.005).unwrap();
        assert!(pde.std.iter().all(|&s| s == 0.0));
        assert!(OuTable::new(&g, &p, 0.0).is_err());
        assert!(OuTable::new(&g, &ContinuousFilterParams { omega: -1.0, ..p }, 0.005).is_err());
    }

    #[test]
    fn deterministic_relaxation_contracts_exactly() {
        let g = grid();
        let p = ContinuousFilterParams { sigma0: 0.0, ..Default::default() };
        let t = OuTable::new(&g, &p, 0.005).unwrap();
        let mut rng = rng::stream(0, rng::Stream::Continuous);
        let mut u = SpectralField::zeros(g.clone(), FieldKind::Vorticity);
        u.set_mode_pair(2, 1, Complex64::new(1.0, 2.0)).unwrap();
        assert_eq!(ou_step(&u, &u, &t, &mut rng).unwrap(), u);

        let mut m = u.clone();
        m.set_mode_pair(2, 1, Complex64::new(3.0, -1.0)).unwrap();
        m.set_mode_pair(7, -4, Complex64::new(0.5, 0.0)).unwrap();
        let out = ou_step(&m, &u, &t, &mut rng).unwrap();
        for (k1, k2) in [(2, 1), (7, -4), (-2, -1)] {
            let i = g.index_of(k1, k2).unwrap();
            let before = m.coeffs()[i] - u.coeffs()[i];
            let after = out.coeffs()[i] - u.coeffs()[i];
            assert!((after - before * t.decay[i]).norm() < 1e-15);
            let expected = (-p.rate(&g, i) * 0.005).exp();
            assert!((t.decay[i] - expected).abs() < 1e-15);
        }
        out.check_invariants(0.0).unwrap();
    }

    #[test]
    fn noisy_step_keeps_field_real() {
        let g = grid();
        let t = OuTable::new(&g, &ContinuousFilterParams::default(), 0.005).unwrap();
        let mut rng = rng::stream(3, rng::Stream::Continuous);
        let z = SpectralField::zeros(g.clone(), FieldKind::Vorticity);
        let out = ou_step(&z, &z, &t, &mut rng).unwrap();
        assert!(out.norm_sq() > 0.0);
        out.check_invariants(0.0).unwrap();
    }
}
