//! The truncated wavenumber lattice.
//!
//! Coefficients are stored row-major in the usual discrete Fourier layout:
//! storage index `i` along an axis holds wavenumber `i` for `i < n/2` and
//! `i - n` otherwise, so each axis covers `-n/2 ..= n/2 - 1`. The first
//! axis is `k1` (the `x1` direction).

use core::f64::consts::PI;

use crate::{Error, Result};

/// Index lattice of an `n x n` truncated Fourier basis on a square of side
/// `length`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberGrid {
    n: usize,
    length: f64,
}

impl WavenumberGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGridSize(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidLength(length));
        }
        Ok(Self { n, length })
    }

    /// Modes per dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Side length of the periodic domain.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of lattice points, `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Side of the zero-padded grid used for products.
    pub fn padded_n(&self) -> usize {
        2 * self.n
    }

    /// Smallest Stokes eigenvalue, `4π²/L²`.
    pub fn lambda1(&self) -> f64 {
        4.0 * PI * PI / (self.length * self.length)
    }

    /// Signed wavenumber held at storage position `i` of one axis.
    #[inline]
    pub fn axis_wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Storage position of wavenumber `k` along one axis, if it is in range.
    #[inline]
    pub fn axis_index(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    #[inline]
    pub fn wavenumber(&self, idx: usize) -> (i64, i64) {
        (
            self.axis_wavenumber(idx / self.n),
            self.axis_wavenumber(idx % self.n),
        )
    }

    pub fn index_of(&self, k1: i64, k2: i64) -> Option<usize> {
        Some(self.axis_index(k1)? * self.n + self.axis_index(k2)?)
    }

    /// Storage index of `-k`, or `None` when `-k` is not representable
    /// (a Nyquist row or column).
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> Option<usize> {
        let (k1, k2) = self.wavenumber(idx);
        self.index_of(-k1, -k2)
    }

    /// `|k|²` of the mode at `idx`.
    #[inline]
    pub fn k_squared(&self, idx: usize) -> i64 {
        let (k1, k2) = self.wavenumber(idx);
        k1 * k1 + k2 * k2
    }

    /// True on the rows `k1 = -n/2` or `k2 = -n/2`, whose conjugate partner
    /// falls outside the lattice.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let half = -((self.n / 2) as i64);
        let (k1, k2) = self.wavenumber(idx);
        k1 == half || k2 == half
    }

    /// True for the modes that carry state: not the mean, not Nyquist.
    #[inline]
    pub fn is_active(&self, idx: usize) -> bool {
        idx != 0 && !self.is_nyquist(idx)
    }

    /// Stokes eigenvalue `a_k = 4π²|k|²/L²`.
    #[inline]
    pub fn stokes_eigenvalue(&self, idx: usize) -> f64 {
        self.lambda1() * self.k_squared(idx) as f64
    }

    /// Eigenvalue of the normalized operator `A₀ = ℓA`.
    ///
    /// With `ℓ = 1/λ₁` this is `|k|²` exactly.
    #[inline]
    pub fn a0_eigenvalue(&self, idx: usize, ell: Normalization) -> f64 {
        match ell {
            Normalization::InverseLambda1 => self.k_squared(idx) as f64,
            Normalization::Value(l) => l * self.stokes_eigenvalue(idx),
        }
    }

    /// Storage index on the padded `2n x 2n` grid of the retained mode `idx`.
    #[inline]
    pub fn padded_index(&self, idx: usize) -> usize {
        let m = self.padded_n() as i64;
        let (k1, k2) = self.wavenumber(idx);
        (k1.rem_euclid(m) * m + k2.rem_euclid(m)) as usize
    }

    /// Number of active modes; equals the number of independent real
    /// degrees of freedom of a real mean-zero field.
    pub fn active_count(&self) -> usize {
        (self.n - 1) * (self.n - 1) - 1
    }

    /// Iterator over the storage indices of the active modes.
    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_active(i))
    }

    /// Representatives of the independent half-lattice: one index per
    /// conjugate pair of active modes (`k1 > 0`, or `k1 = 0` and `k2 > 0`).
    pub fn half_lattice(&self) -> impl Iterator<Item = usize> + '_ {
        self.active_indices().filter(move |&i| {
            let (k1, k2) = self.wavenumber(i);
            k1 > 0 || (k1 == 0 && k2 > 0)
        })
    }
}

/// Normalization constant `ℓ` of `A₀ = ℓA`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Normalization {
    /// `ℓ = 1/λ₁`, giving `A₀` the eigenvalues `|k|²`.
    #[default]
    InverseLambda1,
    Value(f64),
}

impl Normalization {
    pub fn value(self, grid: &WavenumberGrid) -> f64 {
        match self {
            Normalization::InverseLambda1 => 1.0 / grid.lambda1(),
            Normalization::Value(l) => l,
        }
    }
}

/// Spectral cutoff `λ` of the observed subspace `W_λ`.
///
/// A mode is observed when `4π²|k|² < λL²`, i.e. when `a_k < λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    /// `λ = ∞`: every mode is observed.
    Complete,
    /// `λ = m λ₁`; observes `|k|² < m`.
    Lambda1Multiple(f64),
    /// Absolute spectral value of `λ`.
    Spectral(f64),
}

impl Cutoff {
    pub fn validate(self) -> Result<Self> {
        match self {
            Cutoff::Complete => Ok(self),
            Cutoff::Lambda1Multiple(v) | Cutoff::Spectral(v) => {
                if v > 0.0 && !v.is_nan() {
                    Ok(self)
                } else {
                    Err(Error::param("lambda", "cutoff must be positive"))
                }
            }
        }
    }

    #[inline]
    pub fn observes(self, grid: &WavenumberGrid, idx: usize) -> bool {
        match self {
            Cutoff::Complete => true,
            Cutoff::Lambda1Multiple(m) => (grid.k_squared(idx) as f64) < m,
            Cutoff::Spectral(lambda) => {
                (grid.k_squared(idx) as f64) < snap(lambda / grid.lambda1())
            }
        }
    }

    pub fn is_complete(self) -> bool {
        matches!(self, Cutoff::Complete)
    }
}

// Round a cutoff multiple to the nearest integer when it is within
// round-off of it, so `λ = 4λ₁` given in absolute units does not flip the
// strict inequality at the boundary shell.
fn snap(m: f64) -> f64 {
    let r = crate::math::round(m);
    if (m - r).abs() <= 1e-9 * m.abs().max(1.0) {
        r
    } else {
        m
    }
}
