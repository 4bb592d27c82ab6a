//! Spectral fields, projections onto `W_λ` and Sobolev norms.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::grid::{Cutoff, WavenumberGrid};
use crate::math;
use crate::{Error, Result};

/// What a field represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Vorticity,
    Stream,
    Velocity1,
    Velocity2,
    Generic,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Vorticity => "vorticity",
            FieldKind::Stream => "stream",
            FieldKind::Velocity1 => "velocity1",
            FieldKind::Velocity2 => "velocity2",
            FieldKind::Generic => "generic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "vorticity" => FieldKind::Vorticity,
            "stream" => FieldKind::Stream,
            "velocity1" => FieldKind::Velocity1,
            "velocity2" => FieldKind::Velocity2,
            "generic" => FieldKind::Generic,
            _ => return None,
        })
    }
}

/// Fourier coefficients of a real scalar field on a truncated lattice.
///
/// Valid fields satisfy `c(-k) = conj(c(k))`, have a zero mean coefficient
/// and vanish on the Nyquist rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Arc<WavenumberGrid>,
    coeffs: Vec<Complex64>,
    kind: FieldKind,
}

impl SpectralField {
    pub fn zeros(grid: Arc<WavenumberGrid>, kind: FieldKind) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self {
            grid,
            coeffs,
            kind,
        }
    }

    /// Wraps raw coefficients without symmetrizing them.
    pub fn from_coeffs(
        grid: Arc<WavenumberGrid>,
        coeffs: Vec<Complex64>,
        kind: FieldKind,
    ) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            grid,
            coeffs,
            kind,
        })
    }

    /// Builds a valid field from values on the independent half-lattice;
    /// the conjugate half is filled in by symmetry.
    pub fn from_half_lattice(
        grid: Arc<WavenumberGrid>,
        kind: FieldKind,
        mut value: impl FnMut(i64, i64) -> Complex64,
    ) -> Self {
        let mut f = Self::zeros(grid, kind);
        let reps: Vec<usize> = f.grid.half_lattice().collect();
        for i in reps {
            let (k1, k2) = f.grid.wavenumber(i);
            let c = value(k1, k2);
            let j = f.grid.conjugate_index(i).expect("active modes pair up");
            f.coeffs[i] = c;
            f.coeffs[j] = c.conj();
        }
        f
    }

    pub fn grid(&self) -> &Arc<WavenumberGrid> {
        &self.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at wavenumber `(k1, k2)`; zero outside the lattice.
    pub fn mode(&self, k1: i64, k2: i64) -> Complex64 {
        self.grid
            .index_of(k1, k2)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// Sets the coefficient at `k` and its conjugate at `-k`.
    pub fn set_mode_pair(&mut self, k1: i64, k2: i64, value: Complex64) -> Result<()> {
        let i = self
            .grid
            .index_of(k1, k2)
            .filter(|&i| self.grid.is_active(i))
            .ok_or(Error::ModeOutOfBand(k1, k2))?;
        let j = self.grid.conjugate_index(i).expect("active modes pair up");
        self.coeffs[i] = value;
        self.coeffs[j] = value.conj();
        Ok(())
    }

    pub fn same_grid(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn ensure_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Projects onto valid fields: averages each conjugate pair, zeroes the
    /// mean and the Nyquist rows.
    pub fn symmetrize(&mut self) {
        let g = self.grid.clone();
        for i in g.half_lattice() {
            let j = g.conjugate_index(i).expect("active modes pair up");
            let c = (self.coeffs[i] + self.coeffs[j].conj()) * 0.5;
            self.coeffs[i] = c;
            self.coeffs[j] = c.conj();
        }
        self.zero_inactive();
    }

    pub(crate) fn zero_inactive(&mut self) {
        let zero = Complex64::new(0.0, 0.0);
        self.coeffs[0] = zero;
        let n = self.grid.n();
        let h = n / 2;
        // the k = -n/2 row and column sit at storage position n/2
        for c in 0..n {
            self.coeffs[h * n + c] = zero;
            self.coeffs[c * n + h] = zero;
        }
    }

    /// Checks the reality, mean-zero and Nyquist invariants; `tol` bounds
    /// the conjugate-pair mismatch relative to the largest coefficient.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        use alloc::format;
        let g = &self.grid;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        if self.coeffs[0] != Complex64::new(0.0, 0.0) {
            return Err(Error::Invariant(format!(
                "nonzero mean coefficient {}",
                self.coeffs[0]
            )));
        }
        for i in 0..g.len() {
            if g.is_nyquist(i) {
                if self.coeffs[i] != Complex64::new(0.0, 0.0) {
                    let (k1, k2) = g.wavenumber(i);
                    return Err(Error::Invariant(format!(
                        "nonzero Nyquist coefficient at ({k1}, {k2})"
                    )));
                }
            } else if i != 0 {
                let j = g.conjugate_index(i).expect("active modes pair up");
                let d = (self.coeffs[i] - self.coeffs[j].conj()).norm();
                if !(d <= tol * scale) {
                    let (k1, k2) = g.wavenumber(i);
                    return Err(Error::Invariant(format!(
                        "reality violated at ({k1}, {k2}): mismatch {d:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Real `L²`-type inner product `Σ_k Re(f_k conj(g_k))` over the lattice.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert!(self.same_grid(other));
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// `|f|² = Σ_k |f_k|²`, the squared `H⁰` norm.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `|f|`, the `H⁰` norm.
    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    /// `‖f‖_s = (Σ_k (4π²|k|²)^s |f_k|²)^{1/2}`, without any factor of `L`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let m = c.norm_sqr();
            if m == 0.0 {
                continue;
            }
            let k2 = g.k_squared(i) as f64;
            let w = if s == 0.0 {
                1.0
            } else {
                math::powf(4.0 * PI * PI * k2, s)
            };
            acc += w * m;
        }
        math::sqrt(acc)
    }

    /// `P_λ f`: keeps the modes with `4π²|k|² < λL²`.
    pub fn p_lambda(&self, cutoff: Cutoff) -> SpectralField {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if !cutoff.observes(&self.grid, i) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// `Q_λ f = f - P_λ f`.
    pub fn q_lambda(&self, cutoff: Cutoff) -> SpectralField {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if cutoff.observes(&self.grid, i) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn scale(mut self, a: f64) -> SpectralField {
        for c in &mut self.coeffs {
            *c *= a;
        }
        self
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        debug_assert!(self.same_grid(other));
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o * a;
        }
    }

    /// Stream function `ζ` with `Δζ = w`: `ζ_k = -w_k L² / (4π²|k|²)`.
    pub fn stream_from_vorticity(&self) -> SpectralField {
        let g = self.grid.clone();
        let mut out = SpectralField::zeros(g.clone(), FieldKind::Stream);
        for i in g.active_indices() {
            out.coeffs[i] = -self.coeffs[i] / g.stokes_eigenvalue(i);
        }
        out
    }

    /// `w = Δζ`.
    pub fn vorticity_from_stream(&self) -> SpectralField {
        let g = self.grid.clone();
        let mut out = SpectralField::zeros(g.clone(), FieldKind::Vorticity);
        for i in g.active_indices() {
            out.coeffs[i] = -self.coeffs[i] * g.stokes_eigenvalue(i);
        }
        out
    }

    /// `u = ∇⊥ζ = (-∂₂ζ, ∂₁ζ)` for the stream function of this vorticity.
    pub fn velocity_from_vorticity(&self) -> VelocityField {
        let g = self.grid.clone();
        let zeta = self.stream_from_vorticity();
        let two_pi_l = 2.0 * PI / g.length();
        let mut u1 = SpectralField::zeros(g.clone(), FieldKind::Velocity1);
        let mut u2 = SpectralField::zeros(g.clone(), FieldKind::Velocity2);
        for i in g.active_indices() {
            let (k1, k2) = g.wavenumber(i);
            let z = zeta.coeffs[i];
            // ∂_j ↦ i 2π k_j / L
            u1.coeffs[i] = -Complex64::new(0.0, two_pi_l * k2 as f64) * z;
            u2.coeffs[i] = Complex64::new(0.0, two_pi_l * k1 as f64) * z;
        }
        VelocityField { u1, u2 }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<&SpectralField> for f64 {
    type Output = SpectralField;
    fn mul(self, rhs: &SpectralField) -> SpectralField {
        rhs.clone().scale(self)
    }
}

/// Divergence-free velocity `u = ∇⊥ζ`, one spectral field per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VelocityField {
    /// `w = ∂₁u₂ - ∂₂u₁`.
    pub fn vorticity(&self) -> SpectralField {
        let g = self.u1.grid.clone();
        let two_pi_l = 2.0 * PI / g.length();
        let mut w = SpectralField::zeros(g.clone(), FieldKind::Vorticity);
        for i in g.active_indices() {
            let (k1, k2) = g.wavenumber(i);
            let d = self.u2.coeffs[i] * (k1 as f64) - self.u1.coeffs[i] * (k2 as f64);
            w.coeffs[i] = Complex64::new(0.0, two_pi_l) * d;
        }
        w
    }

    /// Largest `|k·u_k|` relative to the largest `|k||u_k|`; zero for a
    /// solenoidal field.
    pub fn divergence_ratio(&self) -> f64 {
        let g = &self.u1.grid;
        let mut div: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..g.len() {
            let (k1, k2) = g.wavenumber(i);
            let (a, b) = (self.u1.coeffs[i], self.u2.coeffs[i]);
            let d = a * (k1 as f64) + b * (k2 as f64);
            div = div.max(d.norm());
            let kk = math::sqrt((k1 * k1 + k2 * k2) as f64);
            scale = scale.max(kk * math::sqrt(a.norm_sqr() + b.norm_sqr()));
        }
        if scale == 0.0 {
            0.0
        } else {
            div / scale
        }
    }

    /// Squared kinetic energy norm `|u|² = |u₁|² + |u₂|²`.
    pub fn norm_sq(&self) -> f64 {
        self.u1.norm_sq() + self.u2.norm_sq()
    }
}
