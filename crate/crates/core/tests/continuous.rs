use std::sync::Arc;

use nse3dvar_core::continuous::*;
use nse3dvar_core::dynamics::{Solver, SolverParams};
use nse3dvar_core::field::{FieldKind, SpectralField};
use nse3dvar_core::grid::WavenumberGrid;
use nse3dvar_core::observations::{random_state, InitialSpectrum};
use nse3dvar_core::rng::{self, Stream};
use nse3dvar_core::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn grid(n: usize) -> Arc<WavenumberGrid> {
    Arc::new(WavenumberGrid::new(n, 2.0).unwrap())
}

fn state(g: &Arc<WavenumberGrid>, seed: u64) -> SpectralField {
    let mut r = rng::stream(seed, Stream::SpinUp);
    random_state(g, InitialSpectrum { amplitude: 3.0, max_k_squared: 40 }, &mut r)
}

fn shell(g: &WavenumberGrid, k2: i64) -> Vec<usize> {
    g.half_lattice().filter(|&i| g.k_squared(i) == k2).collect()
}

#[test]
fn stationary_variance_matches_ou_law() {
    let g = grid(32);
    let params = ContinuousFilterParams::default();
    let dt = 0.005;
    let table = OuTable::new(&g, &params, dt).unwrap();
    let u = SpectralField::zeros(g.clone(), FieldKind::Vorticity);
    let mut m = u.clone();
    let mut r = rng::stream(42, Stream::Continuous);
    let shells: Vec<(i64, Vec<usize>)> = [1, 4, 25].iter().map(|&k| (k, shell(&g, k))).collect();
    let mut acc = vec![0.0; shells.len()];
    let (burn, steps) = (1_000, 100_000);
    for s in 0..burn + steps {
        m = ou_step(&m, &u, &table, &mut r).unwrap();
        if s >= burn {
            for (a, (_, idx)) in acc.iter_mut().zip(&shells) {
                *a += idx.iter().map(|&i| m.coeffs()[i].norm_sqr()).sum::<f64>();
            }
        }
    }
    for (a, (k, idx)) in acc.iter().zip(&shells) {
        let i = idx[0];
        let (rk, sk) = (params.rate(&g, i), params.noise_amplitude(&g, i));
        let expected = sk * sk / (2.0 * rk);
        let got = a / (steps * idx.len()) as f64;
        assert!((got / expected - 1.0).abs() < 0.05, "|k|²={k}: {got} vs {expected}");
    }
}

#[test]
fn exact_step_matches_euler_maruyama_in_distribution() {
    let g = grid(32);
    let params = ContinuousFilterParams::default();
    let dt = 0.005;
    let table = OuTable::new(&g, &params, dt).unwrap();
    let u = state(&g, 1);
    let m0 = state(&g, 2);
    let samples = 20_000;
    let sub = 100;
    let h = dt / sub as f64;
    let mut r = rng::stream(7, Stream::Continuous);
    let mut em_rng = rand_chacha::ChaCha20Rng::seed_from_u64(8);
    for k2 in [1, 4, 25] {
        let i = shell(&g, k2)[0];
        let (rk, sk) = (params.rate(&g, i), params.noise_amplitude(&g, i));
        let (uk, mk) = (u.coeffs()[i], m0.coeffs()[i]);
        let mut exact = Vec::with_capacity(samples);
        let mut em = Vec::with_capacity(samples);
        for _ in 0..samples {
            exact.push(ou_step(&m0, &u, &table, &mut r).unwrap().coeffs()[i]);
            let mut x = mk;
            for _ in 0..sub {
                let re: f64 = StandardNormal.sample(&mut em_rng);
                let im: f64 = StandardNormal.sample(&mut em_rng);
                let dw = Complex64::new(re, im) * (h / 2.0).sqrt();
                x += -(x - uk) * rk * h + dw * sk;
            }
            em.push(x);
        }
        let stats = |v: &[Complex64]| {
            let mean = v.iter().sum::<Complex64>() / v.len() as f64;
            let var = v.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (v.len() - 1) as f64;
            (mean, var)
        };
        let (me, ve) = stats(&exact);
        let (mm, vm) = stats(&em);
        assert!((me - mm).norm() < 0.05 * mm.norm(), "|k|²={k2}: mean {me} vs {mm}");
        assert!((ve / vm - 1.0).abs() < 0.05, "|k|²={k2}: var {ve} vs {vm}");
    }
}

#[test]
fn split_orders_agree_to_first_order() {
    let g = grid(16);
    let params = ContinuousFilterParams { omega: 10.0, sigma0: 0.0, mode: LimitMode::Pde, ..Default::default() };
    let u = state(&g, 1);
    let m = state(&g, 2);
    let gap = |dt: f64| {
        let mut s = Solver::with_rustfft(g.clone(), SolverParams { dt, ..SolverParams::default() }).unwrap();
        let table = OuTable::new(&g, &params, dt).unwrap();
        let mut r = rng::stream(0, Stream::Continuous);
        let u1 = s.step(&u);
        let a = ou_step(&s.step(&m), &u1, &table, &mut r).unwrap();
        let b = s.step(&ou_step(&m, &u, &table, &mut r).unwrap());
        (&a - &b).norm() / (&m - &u).norm()
    };
    let (d1, d2) = (gap(0.005), gap(0.0025));
    assert!(d1 < 0.005, "gap {d1}");
    // the gap shrinks at least linearly with dt
    assert!(d2 < 0.6 * d1, "{d1} -> {d2}");
}

#[test]
fn zero_relaxation_is_the_forward_model() {
    let g = grid(16);
    let mut s = Solver::with_rustfft(g.clone(), SolverParams::default()).unwrap();
    let params = ContinuousFilterParams { omega: 0.0, sigma0: 0.0, mode: LimitMode::Pde, ..Default::default() };
    let tracked: Vec<(i64, i64)> = g.half_lattice().map(|i| g.wavenumber(i)).collect();
    let m0 = state(&g, 2);
    let recs = split_step_run(
        &mut s,
        ContinuousRun {
            truth0: state(&g, 1),
            initial_mean: m0.clone(),
            params,
            horizon: 1.0,
            record_interval: 0.25,
            tracked: &tracked,
            seed: 0,
            order: SplitOrder::NavierStokesFirst,
        },
    )
    .unwrap();
    assert_eq!(recs.len(), 5);
    let mut oracle = Solver::with_rustfft(g.clone(), SolverParams::default()).unwrap();
    for rec in &recs {
        let expected = oracle.psi_flow(&m0, rec.time).unwrap();
        for ms in &rec.modes {
            assert_eq!(ms.estimate, expected.mode(ms.k.0, ms.k.1), "t={} k={:?}", rec.time, ms.k);
        }
        assert!(rec.upper_bound.is_none() && rec.lower_bound.is_none());
        assert!(rec.rel_err_l2.is_some());
    }
}

#[test]
fn pde_limit_synchronizes_and_spde_stays_near() {
    let g = grid(16);
    let mut s = Solver::with_rustfft(g.clone(), SolverParams::default()).unwrap();
    let u0 = s.psi_flow(&state(&g, 1), 2.0).unwrap();
    let m0 = s.psi_flow(&state(&g, 2), 2.0).unwrap();
    let run = |s: &mut Solver<_>, params| {
        split_step_run(
            s,
            ContinuousRun {
                truth0: u0.clone(),
                initial_mean: m0.clone(),
                params,
                horizon: 5.0,
                record_interval: 0.5,
                tracked: &[],
                seed: 3,
                order: SplitOrder::NavierStokesFirst,
            },
        )
        .unwrap()
    };
    let pde = run(&mut s, ContinuousFilterParams { mode: LimitMode::Pde, sigma0: 0.0, ..Default::default() });
    assert!(pde.last().unwrap().rel_err_l2.unwrap() < 1e-8);
    let spde = run(&mut s, ContinuousFilterParams::default());
    let last = spde.last().unwrap().rel_err_l2.unwrap();
    assert!(last > 0.0 && last < 0.1, "{last}");
}
