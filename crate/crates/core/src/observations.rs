//! Truth generation and the observation model `y_j = P_λ u_j + ξ_j` with
//! `ξ_j ~ N(0, Γ)`, `Γ = σ² A₀^{-2β}` on `W_λ`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::dynamics::Solver;
use crate::field::{FieldKind, SpectralField};
use crate::grid::{Cutoff, Normalization, WavenumberGrid};
use crate::math;
use crate::rng::{self, Stream};
use crate::transform::Fft2d;
use crate::{Error, Result};

/// Gaussian observation noise, diagonal in the Fourier basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub beta: f64,
    pub cutoff: Cutoff,
    pub ell: Normalization,
}

impl NoiseModel {
    pub fn new(sigma: f64, beta: f64, cutoff: Cutoff) -> Result<Self> {
        let m = Self {
            sigma,
            beta,
            cutoff,
            ell: Normalization::InverseLambda1,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", "noise scale must be finite and >= 0"));
        }
        if !self.beta.is_finite() {
            return Err(Error::param("beta", "exponent must be finite"));
        }
        self.cutoff.validate()?;
        Ok(())
    }

    /// `g_k = E|ξ_k|² = σ² μ_k^{-2β}` on observed active modes, else 0.
    pub fn variance(&self, grid: &WavenumberGrid, idx: usize) -> f64 {
        if !grid.is_active(idx) || !self.cutoff.observes(grid, idx) {
            return 0.0;
        }
        let s2 = self.sigma * self.sigma;
        if self.beta == 0.0 {
            s2
        } else {
            s2 * math::powf(grid.a0_eigenvalue(idx, self.ell), -2.0 * self.beta)
        }
    }

    /// `tr(Γ) = E|ξ|²`, summed over every lattice mode (both members of each
    /// conjugate pair).
    pub fn trace(&self, grid: &WavenumberGrid) -> f64 {
        (0..grid.len()).map(|i| self.variance(grid, i)).sum()
    }

    /// One draw of `ξ ~ N(0, Γ)`: independent complex Gaussians on the
    /// half-lattice, mirrored to keep the field real.
    pub fn draw<R: RngCore + ?Sized>(&self, grid: &Arc<WavenumberGrid>, rng: &mut R) -> SpectralField {
        let mut xi = SpectralField::zeros(grid.clone(), FieldKind::Vorticity);
        if self.sigma == 0.0 {
            return xi;
        }
        for i in grid.half_lattice() {
            let v = self.variance(grid, i);
            if v == 0.0 {
                continue;
            }
            let z = rng::complex_normal(rng, v);
            let j = grid.conjugate_index(i).expect("active modes pair up");
            xi.coeffs_mut()[i] = z;
            xi.coeffs_mut()[j] = z.conj();
        }
        xi
    }
}

/// A noisy observation of the truth at step `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub step: usize,
    pub y: SpectralField,
    /// The noise realization added to `P_λ u`.
    pub xi: SpectralField,
}

/// `y = P_λ u + ξ` with `ξ` drawn from `model`.
pub fn observe<R: RngCore + ?Sized>(
    u: &SpectralField,
    step: usize,
    model: &NoiseModel,
    rng: &mut R,
) -> Observation {
    let xi = model.draw(u.grid(), rng);
    let mut y = u.p_lambda(model.cutoff);
    y.axpy(1.0, &xi);
    Observation { step, y, xi }
}

/// Observations of `truth[1..]` (`truth[0]` is the unobserved initial
/// state), drawn from the observation stream of `seed`.
pub fn observation_sequence(truth: &[SpectralField], model: &NoiseModel, seed: u64) -> Vec<Observation> {
    let mut rng = rng::stream(seed, Stream::Observation);
    truth
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, u)| observe(u, j, model, &mut rng))
        .collect()
}

/// Spectrum of the random state the spin-up starts from: independent
/// complex Gaussians with `E|w_k|² = amplitude²` on `1 <= |k|² <= max_k_squared`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSpectrum {
    pub amplitude: f64,
    pub max_k_squared: i64,
}

impl Default for InitialSpectrum {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            max_k_squared: 16,
        }
    }
}

pub fn random_state<R: RngCore + ?Sized>(
    grid: &Arc<WavenumberGrid>,
    spectrum: InitialSpectrum,
    rng: &mut R,
) -> SpectralField {
    let var = spectrum.amplitude * spectrum.amplitude;
    let mut w = SpectralField::zeros(grid.clone(), FieldKind::Vorticity);
    for i in grid.half_lattice() {
        if grid.k_squared(i) > spectrum.max_k_squared {
            continue;
        }
        let z = rng::complex_normal(rng, var);
        let j = grid.conjugate_index(i).expect("active modes pair up");
        w.coeffs_mut()[i] = z;
        w.coeffs_mut()[j] = z.conj();
    }
    w
}

/// Integrates a seeded random state for `t_spin` time units so that the
/// result lies (statistically) on the attractor.
pub fn spin_up<F: Fft2d>(
    solver: &mut Solver<F>,
    seed: u64,
    t_spin: f64,
    spectrum: InitialSpectrum,
) -> Result<SpectralField> {
    let steps = solver.params().steps_for(t_spin)?;
    let mut rng = rng::stream(seed, Stream::SpinUp);
    let w0 = random_state(solver.grid(), spectrum, &mut rng);
    solver.advance(&w0, steps)
}

/// States `u_0, Ψ(u_0, h), …, Ψ(u_0, Jh)`.
pub fn truth_trajectory<F: Fft2d>(
    solver: &mut Solver<F>,
    u0: &SpectralField,
    h: f64,
    steps: usize,
) -> Result<Vec<SpectralField>> {
    let inner = solver.params().steps_for(h)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(u0.clone());
    for j in 0..steps {
        let next = solver
            .advance(&out[j], inner)
            .map_err(|_| Error::NonFinite { step: j + 1 })?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(all(test, feature = "std"))]
mod tests {
    use super::*;
    use crate::dynamics::SolverParams;
    use num_complex::Complex64;

    fn grid() -> Arc<WavenumberGrid> {
        Arc::new(WavenumberGrid::new(32, 2.0).unwrap())
    }

    #[test]
    fn zero_sigma_gives_zero_noise_and_exact_projection() {
        let g = grid();
        let model = NoiseModel::new(0.0, 0.0, Cutoff::Lambda1Multiple(4.0)).unwrap();
        let mut r = rng::stream(1, Stream::Observation);
        assert_eq!(model.draw(&g, &mut r).norm_sq(), 0.0);
        let u = random_state(&g, InitialSpectrum { amplitude: 1.0, max_k_squared: 100 }, &mut r);
        let obs = observe(&u, 3, &model, &mut r);
        assert_eq!(obs.y, u.p_lambda(model.cutoff));
    }

    #[test]
    fn observation_support_and_stored_noise() {
        let g = grid();
        let model = NoiseModel::new(0.04, 0.0, Cutoff::Lambda1Multiple(4.0)).unwrap();
        let mut r = rng::stream(2, Stream::Observation);
        let u = random_state(&g, InitialSpectrum { amplitude: 1.0, max_k_squared: 100 }, &mut r);
        let obs = observe(&u, 1, &model, &mut r);
        let support = (0..g.len())
            .filter(|&i| obs.y.coeffs()[i] != Complex64::new(0.0, 0.0))
            .count();
        assert_eq!(support, 8);
        assert_eq!(obs.y.q_lambda(model.cutoff).norm_sq(), 0.0);
        assert_eq!(obs.xi.q_lambda(model.cutoff).norm_sq(), 0.0);
        assert_eq!(&obs.y - &obs.xi, u.p_lambda(model.cutoff));
        obs.y.check_invariants(0.0).unwrap();
    }

    #[test]
    fn trace_counts_real_degrees_of_freedom() {
        let g = grid();
        let model = NoiseModel::new(0.04, 0.0, Cutoff::Complete).unwrap();
        // 31 x 31 representable modes minus the mean
        let dof = 31 * 31 - 1;
        assert!((model.trace(&g) - 0.0016 * dof as f64).abs() < 1e-12);
    }

    #[test]
    fn white_noise_energy_matches_trace() {
        let g = grid();
        let model = NoiseModel::new(0.04, 0.0, Cutoff::Complete).unwrap();
        let mut r = rng::stream(3, Stream::Observation);
        let draws = 10_000;
        let mean = (0..draws).map(|_| model.draw(&g, &mut r).norm_sq()).sum::<f64>() / draws as f64;
        let tr = model.trace(&g);
        assert!((mean / tr - 1.0).abs() < 0.03, "mean={mean} tr={tr}");
    }

    #[test]
    fn beta_one_variance_ratio() {
        let g = grid();
        let model = NoiseModel::new(1.0, 1.0, Cutoff::Complete).unwrap();
        let mut r = rng::stream(4, Stream::Observation);
        let (mut s1, mut s4) = (0.0, 0.0);
        let draws = 10_000;
        for _ in 0..draws {
            let xi = model.draw(&g, &mut r);
            for i in g.active_indices() {
                match g.k_squared(i) {
                    1 => s1 += xi.coeffs()[i].norm_sqr(),
                    4 => s4 += xi.coeffs()[i].norm_sqr(),
                    _ => {}
                }
            }
        }
        // both shells hold four modes
        let ratio = s4 / s1;
        assert!((ratio / (1.0 / 16.0) - 1.0).abs() < 0.05, "ratio={ratio}");
    }

    #[test]
    fn spin_up_is_deterministic() {
        let g = Arc::new(WavenumberGrid::new(16, 2.0).unwrap());
        let mut s = Solver::with_rustfft(g.clone(), SolverParams::default()).unwrap();
        let spec = InitialSpectrum::default();
        let w0 = spin_up(&mut s, 11, 0.0, spec).unwrap();
        let mut r = rng::stream(11, Stream::SpinUp);
        assert_eq!(w0, random_state(&g, spec, &mut r));
        let a = spin_up(&mut s, 11, 0.5, spec).unwrap();
        let b = spin_up(&mut s, 11, 0.5, spec).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, spin_up(&mut s, 12, 0.5, spec).unwrap());
        assert!(spin_up(&mut s, 11, 0.0001, spec).is_err());
    }

    #[test]
    fn replayed_observations_are_identical() {
        let g = Arc::new(WavenumberGrid::new(16, 2.0).unwrap());
        let mut s = Solver::with_rustfft(g.clone(), SolverParams::default()).unwrap();
        let u0 = spin_up(&mut s, 1, 0.1, InitialSpectrum::default()).unwrap();
        let truth = truth_trajectory(&mut s, &u0, 0.05, 4).unwrap();
        assert_eq!(truth.len(), 5);
        let model = NoiseModel::new(0.04, 0.0, Cutoff::Complete).unwrap();
        let a = observation_sequence(&truth, &model, 9);
        let b = observation_sequence(&truth, &model, 9);
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!(a[0].step, 1);
    }
}
