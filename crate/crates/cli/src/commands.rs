//! The `truth`, `observe`, `filter` and `bounds` commands, and the
//! in-memory experiment runners they share with `sweep`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nse3dvar_core::continuous::{split_step_run, ContinuousRun};
use nse3dvar_core::dynamics::Solver;
use nse3dvar_core::field::SpectralField;
use nse3dvar_core::filter::{lower_bound, run_filter, upper_bound, DiscreteRun, Filter, StepRecord};
use nse3dvar_core::grid::WavenumberGrid;
use nse3dvar_core::observations::{observation_sequence, spin_up, truth_trajectory, Observation};
use nse3dvar_core::transform::RustFft2d;

use crate::config::{Config, FilterMode};
use crate::error::CliError;
use crate::io;

pub struct Context {
    pub cfg: Config,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Context {
    pub fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub type Backend = Solver<RustFft2d>;

pub fn solver(cfg: &Config, grid: &Arc<WavenumberGrid>) -> Result<Backend, CliError> {
    Ok(Solver::with_rustfft(grid.clone(), cfg.solver_params())?)
}

/// Attractor state seeded by `seed`.
pub fn attractor_state(cfg: &Config, grid: &Arc<WavenumberGrid>, seed: u64) -> Result<SpectralField, CliError> {
    let mut s = solver(cfg, grid)?;
    Ok(spin_up(&mut s, seed, cfg.t_spin, cfg.init)?)
}

/// `u_0 ..= u_J` at the observation times.
pub fn make_truth(cfg: &Config, grid: &Arc<WavenumberGrid>) -> Result<Vec<SpectralField>, CliError> {
    let mut s = solver(cfg, grid)?;
    let u0 = spin_up(&mut s, cfg.seed_truth, cfg.t_spin, cfg.init)?;
    Ok(truth_trajectory(&mut s, &u0, cfg.h, cfg.steps)?)
}

pub fn make_observations(cfg: &Config, truth: &[SpectralField]) -> Result<Vec<Observation>, CliError> {
    Ok(observation_sequence(truth, &cfg.noise()?, cfg.seed_noise))
}

pub fn discrete_records(
    cfg: &Config,
    grid: &Arc<WavenumberGrid>,
    truth: &[SpectralField],
    observations: &[Observation],
    initial_mean: SpectralField,
) -> Result<Vec<StepRecord>, CliError> {
    let mut f = Filter::new(solver(cfg, grid)?, cfg.gain(grid)?, cfg.h)?;
    Ok(run_filter(
        &mut f,
        DiscreteRun {
            truth,
            observations,
            initial_mean,
            noise: cfg.noise()?,
            tracked: &cfg.tracked,
        },
    )?)
}

pub fn continuous_records(
    cfg: &Config,
    grid: &Arc<WavenumberGrid>,
    truth0: SpectralField,
    initial_mean: SpectralField,
) -> Result<Vec<StepRecord>, CliError> {
    let mut s = solver(cfg, grid)?;
    Ok(split_step_run(
        &mut s,
        ContinuousRun {
            truth0,
            initial_mean,
            params: cfg.continuous_params(),
            horizon: cfg.horizon,
            record_interval: cfg.record_interval,
            tracked: &cfg.tracked,
            seed: cfg.seed_filter,
            order: cfg.order,
        },
    )?)
}

fn load_truth(ctx: &Context, grid: &Arc<WavenumberGrid>) -> Result<Vec<SpectralField>, CliError> {
    let path = ctx.path(io::TRUTH_FILE);
    let truth = io::read_trajectory(&path, grid)?;
    if ctx.cfg.mode == FilterMode::Discrete && truth.len() != ctx.cfg.steps + 1 {
        return Err(CliError::schema(
            &path,
            format!("holds {} states, config expects {}", truth.len(), ctx.cfg.steps + 1),
        ));
    }
    Ok(truth)
}

pub fn truth(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let grid = ctx.cfg.grid()?;
    ctx.log(format!("spinning up for t={} and integrating {} steps of h={}", ctx.cfg.t_spin, ctx.cfg.steps, ctx.cfg.h));
    let states = make_truth(&ctx.cfg, &grid)?;
    let p = io::write_trajectory(&ctx.path(io::TRUTH_FILE), &ctx.cfg, "truth", ctx.cfg.h, &states)?;
    Ok(vec![p])
}

pub fn observe(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let grid = ctx.cfg.grid()?;
    let truth = load_truth(ctx, &grid)?;
    let obs = make_observations(&ctx.cfg, &truth)?;
    let p = io::write_observations(&ctx.path(io::OBSERVATIONS_FILE), &ctx.cfg, ctx.cfg.h, &obs, &grid)?;
    Ok(vec![p])
}

pub fn filter(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &ctx.cfg;
    let grid = cfg.grid()?;
    let truth = load_truth(ctx, &grid)?;
    ctx.log("spinning up the initial mean");
    let m0 = attractor_state(cfg, &grid, cfg.seed_init)?;
    let path = ctx.path(io::FILTER_FILE);
    let p = match cfg.mode {
        FilterMode::Discrete => {
            let obs_path = ctx.path(io::OBSERVATIONS_FILE);
            let obs = io::read_observations(&obs_path, &grid)?;
            if obs.len() != cfg.steps {
                return Err(CliError::schema(
                    &obs_path,
                    format!("holds {} observations, config expects {}", obs.len(), cfg.steps),
                ));
            }
            ctx.log(format!("running {} assimilation cycles", cfg.steps));
            let recs = discrete_records(cfg, &grid, &truth, &obs, m0)?;
            io::write_records(&path, cfg, "filter", &recs, false)?
        }
        FilterMode::Continuous => {
            ctx.log(format!("integrating the continuous filter to t={}", cfg.horizon));
            let recs = continuous_records(cfg, &grid, truth[0].clone(), m0)?;
            io::write_records(&path, cfg, "filter", &recs, true)?
        }
    };
    Ok(vec![p])
}

pub fn bounds(ctx: &Context) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &ctx.cfg;
    let grid = cfg.grid()?;
    let truth = load_truth(ctx, &grid)?;
    let noise = cfg.noise()?;
    let lower = lower_bound(&cfg.gain(&grid)?, &noise);
    let upper: Vec<f64> = truth.iter().map(|u| upper_bound(&noise, u)).collect();
    let p = io::write_bounds(&ctx.path(io::BOUNDS_FILE), cfg, cfg.h, lower, &upper)?;
    Ok(vec![p])
}

pub fn ensure_exists(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}
