//! Real-space/spectral transforms on the plain and zero-padded grids.
//!
//! The two-dimensional FFT itself sits behind [`Fft2d`] so that the crate
//! stays usable without `std`; with the `std` feature [`RustFft2d`] provides
//! a `rustfft`-backed implementation.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::field::{FieldKind, SpectralField};
use crate::grid::WavenumberGrid;
use crate::{Error, Result};

/// Unnormalized in-place 2D discrete Fourier transform on an `m x m`
/// row-major buffer.
///
/// `forward` computes `X[k] = Σ_j x[j] e^{-2πi k·j/m}` and `inverse` the
/// same sum with `+i`; neither divides by `m²`.
pub trait Fft2d {
    fn size(&self) -> usize;
    fn forward(&mut self, data: &mut [Complex64]);
    fn inverse(&mut self, data: &mut [Complex64]);
}

#[cfg(feature = "std")]
pub use self::rustfft_backend::RustFft2d;

#[cfg(feature = "std")]
mod rustfft_backend {
    use std::sync::Arc;

    use num_complex::Complex64;
    use rustfft::{Fft, FftPlanner};

    use super::Fft2d;

    /// Row-column 2D FFT built on `rustfft`.
    pub struct RustFft2d {
        m: usize,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        scratch: Vec<Complex64>,
    }

    impl RustFft2d {
        pub fn new(m: usize) -> Self {
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(m);
            let inverse = planner.plan_fft_inverse(m);
            let scratch_len = forward
                .get_inplace_scratch_len()
                .max(inverse.get_inplace_scratch_len());
            Self {
                m,
                forward,
                inverse,
                scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            }
        }

        fn run(&mut self, data: &mut [Complex64], inverse: bool) {
            assert_eq!(data.len(), self.m * self.m, "buffer is not m x m");
            let fft = if inverse { &self.inverse } else { &self.forward };
            fft.process_with_scratch(data, &mut self.scratch);
            transpose(data, self.m);
            fft.process_with_scratch(data, &mut self.scratch);
            transpose(data, self.m);
        }
    }

    fn transpose(data: &mut [Complex64], m: usize) {
        for r in 0..m {
            for c in (r + 1)..m {
                data.swap(r * m + c, c * m + r);
            }
        }
    }

    impl Fft2d for RustFft2d {
        fn size(&self) -> usize {
            self.m
        }

        fn forward(&mut self, data: &mut [Complex64]) {
            self.run(data, false);
        }

        fn inverse(&mut self, data: &mut [Complex64]) {
            self.run(data, true);
        }
    }
}

/// Samples of a real field on a uniform `m x m` grid; entry `(j1, j2)` is
/// the value at `x = (j1 L/m, j2 L/m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    m: usize,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != m * m {
            return Err(Error::SizeMismatch {
                expected: m * m,
                found: values.len(),
            });
        }
        Ok(Self { m, values })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j1: usize, j2: usize) -> f64 {
        self.values[j1 * self.m + j2]
    }
}

/// Transforms between [`SpectralField`]s on one grid and physical samples
/// on either the plain `n x n` grid or the padded `2n x 2n` grid.
///
/// Owns scratch buffers, so a single instance must not be shared between
/// concurrent callers.
pub struct Transformer<F: Fft2d> {
    grid: Arc<WavenumberGrid>,
    plain: F,
    padded: F,
    padded_map: Vec<usize>,
    buf: Vec<Complex64>,
}

#[cfg(feature = "std")]
impl Transformer<RustFft2d> {
    pub fn with_rustfft(grid: Arc<WavenumberGrid>) -> Self {
        let n = grid.n();
        Self::new(grid, RustFft2d::new(n), RustFft2d::new(2 * n))
            .expect("plans sized from the grid")
    }
}

impl<F: Fft2d> Transformer<F> {
    pub fn new(grid: Arc<WavenumberGrid>, plain: F, padded: F) -> Result<Self> {
        if plain.size() != grid.n() {
            return Err(Error::SizeMismatch {
                expected: grid.n(),
                found: plain.size(),
            });
        }
        if padded.size() != grid.padded_n() {
            return Err(Error::SizeMismatch {
                expected: grid.padded_n(),
                found: padded.size(),
            });
        }
        let padded_map = (0..grid.len()).map(|i| grid.padded_index(i)).collect();
        let m = grid.padded_n();
        Ok(Self {
            grid,
            plain,
            padded,
            padded_map,
            buf: vec![Complex64::new(0.0, 0.0); m * m],
        })
    }

    pub fn grid(&self) -> &Arc<WavenumberGrid> {
        &self.grid
    }

    /// Evaluates `f` on the plain grid, or on the `2n x 2n` grid when
    /// `padded` is set.
    pub fn to_physical(&mut self, f: &SpectralField, padded: bool) -> Result<PhysicalField> {
        f.ensure_same_grid_as(&self.grid)?;
        let n = self.grid.n();
        let m = if padded { 2 * n } else { n };
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
        if padded {
            for (i, c) in f.coeffs().iter().enumerate() {
                buf[self.padded_map[i]] = *c;
            }
            self.padded.inverse(&mut buf);
        } else {
            buf.copy_from_slice(f.coeffs());
            self.plain.inverse(&mut buf);
        }
        PhysicalField::new(m, buf.into_iter().map(|c| c.re).collect())
    }

    /// Inverse of [`Transformer::to_physical`]; the sample grid may be
    /// plain or padded. Modes outside the retained band, the mean and the
    /// Nyquist rows are discarded.
    pub fn from_physical(&mut self, samples: &PhysicalField, kind: FieldKind) -> Result<SpectralField> {
        let n = self.grid.n();
        let m = samples.size();
        let mut buf: Vec<Complex64> = samples
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let mut out = SpectralField::zeros(self.grid.clone(), kind);
        let scale = 1.0 / (m * m) as f64;
        if m == n {
            self.plain.forward(&mut buf);
            for (c, b) in out.coeffs_mut().iter_mut().zip(&buf) {
                *c = b * scale;
            }
        } else if m == 2 * n {
            self.padded.forward(&mut buf);
            for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
                *c = buf[self.padded_map[i]] * scale;
            }
        } else {
            return Err(Error::SizeMismatch {
                expected: n,
                found: m,
            });
        }
        out.zero_inactive();
        Ok(out)
    }

    /// Loads `a + i b` onto the padded grid and inverse transforms it. For
    /// coefficient sets of two real fields, the real and imaginary parts of
    /// the result are the two fields' padded samples.
    pub(crate) fn inverse_padded_pair(
        &mut self,
        mut a: impl FnMut(usize) -> Complex64,
        mut b: impl FnMut(usize) -> Complex64,
        out: &mut [Complex64],
    ) {
        out.fill(Complex64::new(0.0, 0.0));
        let i_unit = Complex64::new(0.0, 1.0);
        for (i, &p) in self.padded_map.iter().enumerate() {
            out[p] = a(i) + i_unit * b(i);
        }
        self.padded.inverse(out);
    }

    /// Forward transforms real padded samples held in `self`'s buffer and
    /// truncates to the retained band, writing into `out`.
    pub(crate) fn forward_padded_truncate(
        &mut self,
        samples: impl Fn(usize) -> f64,
        out: &mut SpectralField,
    ) {
        for (j, c) in self.buf.iter_mut().enumerate() {
            *c = Complex64::new(samples(j), 0.0);
        }
        self.padded.forward(&mut self.buf);
        let m = self.grid.padded_n();
        let scale = 1.0 / (m * m) as f64;
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            *c = self.buf[self.padded_map[i]] * scale;
        }
        out.zero_inactive();
    }
}

impl SpectralField {
    pub(crate) fn ensure_same_grid_as(&self, grid: &Arc<WavenumberGrid>) -> Result<()> {
        if Arc::ptr_eq(self.grid(), grid) || **self.grid() == **grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(all(test, feature = "std"))]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn setup(n: usize) -> (Arc<WavenumberGrid>, Transformer<RustFft2d>) {
        let g = Arc::new(WavenumberGrid::new(n, 2.0).unwrap());
        let t = Transformer::with_rustfft(g.clone());
        (g, t)
    }

    fn random_field(g: &Arc<WavenumberGrid>, seed: u64) -> SpectralField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        SpectralField::from_half_lattice(g.clone(), FieldKind::Vorticity, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn round_trips_plain_and_padded() {
        let (g, mut t) = setup(16);
        let f = random_field(&g, 3);
        for padded in [false, true] {
            let x = t.to_physical(&f, padded).unwrap();
            let back = t.from_physical(&x, FieldKind::Vorticity).unwrap();
            let err = (&back - &f).norm();
            assert!(err <= 1e-14 * f.norm(), "padded={padded} err={err}");
        }
    }

    #[test]
    fn single_mode_traces_cosine() {
        let (g, mut t) = setup(8);
        let mut f = SpectralField::zeros(g.clone(), FieldKind::Generic);
        f.set_mode_pair(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        let x = t.to_physical(&f, false).unwrap();
        for j1 in 0..8 {
            for j2 in 0..8 {
                let x1 = j1 as f64 * g.length() / 8.0;
                let expected = 2.0 * (2.0 * PI * x1 / g.length()).cos();
                assert!((x.get(j1, j2) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn size_mismatch_is_reported() {
        let (_, mut t) = setup(8);
        let bad = PhysicalField::new(12, vec![0.0; 144]).unwrap();
        assert!(matches!(
            t.from_physical(&bad, FieldKind::Generic),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(PhysicalField::new(4, vec![0.0; 15]).is_err());
        let other = Arc::new(WavenumberGrid::new(16, 2.0).unwrap());
        let f = SpectralField::zeros(other, FieldKind::Generic);
        assert_eq!(t.to_physical(&f, false), Err(Error::GridMismatch));
    }

    /// Pointwise products on the padded grid reproduce the direct
    /// convolution `Σ_{p+q=k} a_p b_q` for every retained `k`.
    #[test]
    fn padded_product_matches_direct_convolution() {
        let (g, mut t) = setup(8);
        let a = random_field(&g, 11);
        let b = random_field(&g, 12);
        let xa = t.to_physical(&a, true).unwrap();
        let xb = t.to_physical(&b, true).unwrap();
        let prod: Vec<f64> = xa.values().iter().zip(xb.values()).map(|(p, q)| p * q).collect();
        let prod = PhysicalField::new(16, prod).unwrap();
        let c = t.from_physical(&prod, FieldKind::Generic).unwrap();

        for i in g.active_indices() {
            let (k1, k2) = g.wavenumber(i);
            let mut direct = Complex64::new(0.0, 0.0);
            for p in 0..g.len() {
                let (p1, p2) = g.wavenumber(p);
                direct += a.coeffs()[p] * b.mode(k1 - p1, k2 - p2);
            }
            let err = (direct - c.coeffs()[i]).norm();
            assert!(err <= 1e-12 * (1.0 + direct.norm()), "k=({k1},{k2})");
        }
    }
}
