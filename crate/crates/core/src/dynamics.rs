//! The forward model `Ψ(·, t)`: dealiased pseudo-spectral vorticity
//! dynamics
//!
//! ```text
//! ∂_t w_k = -ν a_k w_k + N(w)_k + g_k,    N(w) = -u·∇w,  u = ∇⊥Δ⁻¹w
//! ```
//!
//! integrated with the Cox-Matthews fourth-order exponential time
//! differencing Runge-Kutta scheme, which treats the Stokes part exactly.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::field::{FieldKind, SpectralField};
use crate::grid::WavenumberGrid;
use crate::math;
use crate::transform::{Fft2d, Transformer};
use crate::{Error, Result};

/// Below this `|z|` the φ-functions are summed as Taylor series.
const PHI_SERIES_THRESHOLD: f64 = 1.0;

/// `φ_k(z)` for `k = 0..=3`, where `φ_0 = e^z` and
/// `φ_{k+1}(z) = (φ_k(z) - 1/k!) / z`.
pub fn phi(k: usize, z: f64) -> f64 {
    assert!(k <= 3, "only φ_0..φ_3 are tabulated");
    if k == 0 {
        return math::exp(z);
    }
    if z.abs() < PHI_SERIES_THRESHOLD {
        // Σ_j z^j / (j + k)!; 30 terms reach double precision for |z| < 1
        let mut term = 1.0;
        for j in 1..=k {
            term /= j as f64;
        }
        let mut sum = 0.0;
        for j in 0..30 {
            sum += term;
            term *= z / (j + k + 1) as f64;
        }
        sum
    } else {
        let e = math::exp(z);
        match k {
            1 => (e - 1.0) / z,
            2 => (e - 1.0 - z) / (z * z),
            _ => (e - 1.0 - z - 0.5 * z * z) / (z * z * z),
        }
    }
}

/// Fixed forcing of the vorticity equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingSpec {
    /// Wavenumber `k_f` of `ψ = cos(2π k_f·x / L)`.
    pub mode: (i64, i64),
    /// Multiplier on `ψ`; `1.0` is the unscaled forcing.
    pub amplitude: f64,
}

impl Default for ForcingSpec {
    fn default() -> Self {
        Self {
            mode: (5, 5),
            amplitude: 1.0,
        }
    }
}

/// Vorticity forcing `g = -Δψ` for `f = ∇⊥ψ`, `ψ = A cos(2π k_f·x/L)`.
///
/// `g` lives on the conjugate pair `±k_f` with coefficient `A a_{k_f} / 2`.
pub fn curl_forcing(grid: &Arc<WavenumberGrid>, spec: ForcingSpec) -> Result<SpectralField> {
    let (k1, k2) = spec.mode;
    let idx = grid
        .index_of(k1, k2)
        .filter(|&i| grid.is_active(i))
        .ok_or(Error::ModeOutOfBand(k1, k2))?;
    let mut g = SpectralField::zeros(grid.clone(), FieldKind::Vorticity);
    let amp = 0.5 * spec.amplitude * grid.stokes_eigenvalue(idx);
    g.set_mode_pair(k1, k2, Complex64::new(amp, 0.0))?;
    Ok(g)
}

/// Parameters of the forward model.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub nu: f64,
    pub dt: f64,
    /// `None` runs the unforced equation.
    pub forcing: Option<ForcingSpec>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            nu: 0.01,
            dt: 0.005,
            forcing: Some(ForcingSpec::default()),
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::param("nu", "viscosity must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "time step must be positive"));
        }
        Ok(())
    }

    /// Number of steps covering `t`, which must be a non-negative integer
    /// multiple of `dt`.
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        steps_for(t, self.dt)
    }
}

pub(crate) fn steps_for(t: f64, dt: f64) -> Result<usize> {
    let err = Error::NotStepMultiple { time: t, dt };
    if !(t >= 0.0 && t.is_finite()) {
        return Err(err);
    }
    let k = math::round(t / dt);
    if (k * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(err);
    }
    Ok(k as usize)
}

/// Per-mode coefficients of one exponential Runge-Kutta step of size `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct EtdTableau {
    dt: f64,
    /// `e^{z}` with `z = -ν a_k dt`.
    pub decay: Vec<f64>,
    /// `e^{z/2}`.
    pub decay_half: Vec<f64>,
    /// `dt/2 φ₁(z/2)`, weight of the nonlinear term in the half steps.
    pub half: Vec<f64>,
    /// `dt (φ₁ - 3φ₂ + 4φ₃)(z)`.
    pub f1: Vec<f64>,
    /// `dt (φ₂ - 2φ₃)(z)`, applied to each of the two midpoint stages.
    pub f2: Vec<f64>,
    /// `dt (4φ₃ - φ₂)(z)`.
    pub f3: Vec<f64>,
}

impl EtdTableau {
    pub fn new(grid: &WavenumberGrid, nu: f64, dt: f64) -> Self {
        let len = grid.len();
        let mut t = Self {
            dt,
            decay: vec![0.0; len],
            decay_half: vec![0.0; len],
            half: vec![0.0; len],
            f1: vec![0.0; len],
            f2: vec![0.0; len],
            f3: vec![0.0; len],
        };
        for i in 0..len {
            let z = -nu * grid.stokes_eigenvalue(i) * dt;
            let (p1, p2, p3) = (phi(1, z), phi(2, z), phi(3, z));
            t.decay[i] = phi(0, z);
            t.decay_half[i] = phi(0, 0.5 * z);
            t.half[i] = 0.5 * dt * phi(1, 0.5 * z);
            t.f1[i] = dt * (p1 - 3.0 * p2 + 4.0 * p3);
            t.f2[i] = dt * (p2 - 2.0 * p3);
            t.f3[i] = dt * (4.0 * p3 - p2);
        }
        t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn is_finite(&self) -> bool {
        [
            &self.decay,
            &self.decay_half,
            &self.half,
            &self.f1,
            &self.f2,
            &self.f3,
        ]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Pseudo-spectral Navier-Stokes solver.
///
/// Owns its tableau, transform plans and scratch buffers; not reentrant.
pub struct Solver<F: Fft2d> {
    grid: Arc<WavenumberGrid>,
    params: SolverParams,
    tableau: EtdTableau,
    forcing: SpectralField,
    transform: Transformer<F>,
    /// `i 2π k_j / L` per retained mode for each axis.
    deriv: [Vec<f64>; 2],
    inv_stokes: Vec<f64>,
    buf_u: Vec<Complex64>,
    buf_dw: Vec<Complex64>,
}

#[cfg(feature = "std")]
impl Solver<crate::transform::RustFft2d> {
    pub fn with_rustfft(grid: Arc<WavenumberGrid>, params: SolverParams) -> Result<Self> {
        let t = Transformer::with_rustfft(grid.clone());
        Self::new(grid, params, t)
    }
}

impl<F: Fft2d> Solver<F> {
    pub fn new(
        grid: Arc<WavenumberGrid>,
        params: SolverParams,
        transform: Transformer<F>,
    ) -> Result<Self> {
        params.validate()?;
        if **transform.grid() != *grid {
            return Err(Error::GridMismatch);
        }
        let forcing = match params.forcing {
            Some(spec) => curl_forcing(&grid, spec)?,
            None => SpectralField::zeros(grid.clone(), FieldKind::Vorticity),
        };
        let tableau = EtdTableau::new(&grid, params.nu, params.dt);
        let kappa = 2.0 * PI / grid.length();
        let len = grid.len();
        let mut deriv = [vec![0.0; len], vec![0.0; len]];
        let mut inv_stokes = vec![0.0; len];
        for i in 0..len {
            let (k1, k2) = grid.wavenumber(i);
            deriv[0][i] = kappa * k1 as f64;
            deriv[1][i] = kappa * k2 as f64;
            if grid.is_active(i) {
                inv_stokes[i] = 1.0 / grid.stokes_eigenvalue(i);
            }
        }
        let m = grid.padded_n();
        Ok(Self {
            grid,
            params,
            tableau,
            forcing,
            transform,
            deriv,
            inv_stokes,
            buf_u: vec![Complex64::new(0.0, 0.0); m * m],
            buf_dw: vec![Complex64::new(0.0, 0.0); m * m],
        })
    }

    pub fn grid(&self) -> &Arc<WavenumberGrid> {
        &self.grid
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn tableau(&self) -> &EtdTableau {
        &self.tableau
    }

    pub fn forcing(&self) -> &SpectralField {
        &self.forcing
    }

    pub fn transformer(&mut self) -> &mut Transformer<F> {
        &mut self.transform
    }

    /// Dealiased advection term `N(w) = -u·∇w`, written into `out`.
    pub fn nonlinear_into(&mut self, w: &SpectralField, out: &mut SpectralField) {
        let c = w.coeffs();
        let i_unit = Complex64::new(0.0, 1.0);
        let (d1, d2) = (&self.deriv[0], &self.deriv[1]);
        let inv = &self.inv_stokes;
        // u = (-∂₂ζ, ∂₁ζ) with ζ = -w/a
        self.transform.inverse_padded_pair(
            |i| i_unit * d2[i] * inv[i] * c[i],
            |i| -i_unit * d1[i] * inv[i] * c[i],
            &mut self.buf_u,
        );
        self.transform.inverse_padded_pair(
            |i| i_unit * d1[i] * c[i],
            |i| i_unit * d2[i] * c[i],
            &mut self.buf_dw,
        );
        let (bu, bw) = (&self.buf_u, &self.buf_dw);
        self.transform.forward_padded_truncate(
            |j| -(bu[j].re * bw[j].re + bu[j].im * bw[j].im),
            out,
        );
        // exact conjugate symmetry keeps every later per-mode update real
        out.symmetrize();
    }

    pub fn nonlinear(&mut self, w: &SpectralField) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid.clone(), FieldKind::Vorticity);
        self.nonlinear_into(w, &mut out);
        out
    }

    // N(w) + g
    fn rhs(&mut self, w: &SpectralField, out: &mut SpectralField) {
        self.nonlinear_into(w, out);
        for (o, g) in out.coeffs_mut().iter_mut().zip(self.forcing.coeffs()) {
            *o += g;
        }
    }

    /// One ETD4RK step of size `dt`.
    pub fn step(&mut self, w: &SpectralField) -> SpectralField {
        let grid = self.grid.clone();
        let zero = || SpectralField::zeros(grid.clone(), FieldKind::Vorticity);
        let (mut nu, mut na, mut nb, mut nc) = (zero(), zero(), zero(), zero());
        let mut a = zero();
        let mut b = zero();
        let mut c = zero();

        self.rhs(w, &mut nu);
        {
            let t = &self.tableau;
            for i in 0..grid.len() {
                a.coeffs_mut()[i] = w.coeffs()[i] * t.decay_half[i] + nu.coeffs()[i] * t.half[i];
            }
        }
        self.rhs(&a, &mut na);
        {
            let t = &self.tableau;
            for i in 0..grid.len() {
                b.coeffs_mut()[i] = w.coeffs()[i] * t.decay_half[i] + na.coeffs()[i] * t.half[i];
            }
        }
        self.rhs(&b, &mut nb);
        {
            let t = &self.tableau;
            for i in 0..grid.len() {
                c.coeffs_mut()[i] = a.coeffs()[i] * t.decay_half[i]
                    + (nb.coeffs()[i] * 2.0 - nu.coeffs()[i]) * t.half[i];
            }
        }
        self.rhs(&c, &mut nc);

        let t = &self.tableau;
        let mut out = zero();
        for (i, o) in out.coeffs_mut().iter_mut().enumerate() {
            *o = w.coeffs()[i] * t.decay[i]
                + nu.coeffs()[i] * t.f1[i]
                + (na.coeffs()[i] + nb.coeffs()[i]) * (2.0 * t.f2[i])
                + nc.coeffs()[i] * t.f3[i];
        }
        out.zero_inactive();
        out
    }

    /// Applies `steps` ETD4RK steps, failing on the first non-finite state.
    pub fn advance(&mut self, w: &SpectralField, steps: usize) -> Result<SpectralField> {
        w.ensure_same_grid_as(&self.grid)?;
        let mut cur = w.clone().with_kind(FieldKind::Vorticity);
        for s in 0..steps {
            cur = self.step(&cur);
            if !cur.is_finite() {
                return Err(Error::NonFinite { step: s + 1 });
            }
        }
        Ok(cur)
    }

    /// `Ψ(w0, t)`; `t` must be an integer multiple of `dt`.
    pub fn psi_flow(&mut self, w0: &SpectralField, t: f64) -> Result<SpectralField> {
        let steps = self.params.steps_for(t)?;
        self.advance(w0, steps)
    }
}
