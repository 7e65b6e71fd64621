//! Path and ensemble integration.

use rayon::prelude::*;

use super::rng;
use super::{FastSlowSystem, SimConfig};
use crate::error::{Error, Result};

/// One recorded sample path on the slow time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub fast_dim: usize,
    pub slow_dim: usize,
    /// Recorded slow times.
    pub s: Vec<f64>,
    /// Slow states, `len = s.len() * slow_dim`, row-major.
    pub y: Vec<f64>,
    /// Fast states, `len = s.len() * fast_dim`; NaN past a blow-up.
    pub x: Vec<f64>,
    /// Steps on which at least one axis was clamped to the domain box.
    pub clamp_events: u64,
    /// Step index at which the state became non-finite, if any.
    pub blowup_step: Option<usize>,
    /// Sub-seed recorded for reproducibility.
    pub seed: u64,
}

impl Path {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.fast_dim..(i + 1) * self.fast_dim]
    }

    pub fn y_at(&self, i: usize) -> &[f64] {
        &self.y[i * self.slow_dim..(i + 1) * self.slow_dim]
    }
}

/// Ensemble of paths sharing one slow grid.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub fast_dim: usize,
    pub slow_dim: usize,
    pub n_paths: usize,
    pub s_grid: Vec<f64>,
    /// Shared slow states, `len = s_grid.len() * slow_dim`.
    pub y_grid: Vec<f64>,
    /// Fast states, `len = n_paths * s_grid.len() * fast_dim`.
    pub x: Vec<f64>,
    pub seeds: Vec<u64>,
    pub clamp_events: Vec<u64>,
    pub blowups: Vec<Option<usize>>,
    pub master_seed: u64,
}

impl PathEnsemble {
    pub fn grid_len(&self) -> usize {
        self.s_grid.len()
    }

    pub fn x_at(&self, path: usize, i: usize) -> &[f64] {
        let stride = self.grid_len() * self.fast_dim;
        let base = path * stride + i * self.fast_dim;
        &self.x[base..base + self.fast_dim]
    }

    pub fn y_at(&self, i: usize) -> &[f64] {
        &self.y_grid[i * self.slow_dim..(i + 1) * self.slow_dim]
    }

    /// Extracts one path (shares the ensemble slow grid).
    pub fn path(&self, r: usize) -> Path {
        let stride = self.grid_len() * self.fast_dim;
        Path {
            fast_dim: self.fast_dim,
            slow_dim: self.slow_dim,
            s: self.s_grid.clone(),
            y: self.y_grid.clone(),
            x: self.x[r * stride..(r + 1) * stride].to_vec(),
            clamp_events: self.clamp_events[r],
            blowup_step: self.blowups[r],
            seed: self.seeds[r],
        }
    }
}

struct StepBuffers {
    fx: Vec<f64>,
    gy: Vec<f64>,
    fdiff: Vec<f64>,
    xi: Vec<f64>,
}

impl StepBuffers {
    fn new(m: usize, n: usize, k: usize) -> Self {
        StepBuffers {
            fx: vec![0.0; m],
            gy: vec![0.0; n],
            fdiff: vec![0.0; m * k],
            xi: vec![0.0; k],
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn advance(
    system: &FastSlowSystem,
    bufs: &mut StepBuffers,
    x: &mut [f64],
    y: &mut [f64],
    dt: f64,
    noise_scale: f64,
    master_seed: u64,
    path_index: u64,
    step: usize,
    clamp_events: &mut u64,
) -> bool {
    let m = system.fast_dim;
    let k = system.noise_dim;
    (system.drift)(x, y, &mut bufs.fx);
    (system.slow_drift)(x, y, &mut bufs.gy);
    if noise_scale != 0.0 {
        (system.diffusion)(x, y, &mut bufs.fdiff);
        rng::fill_normals(master_seed, path_index, step as u64, &mut bufs.xi);
    }
    let dt_over_eps = dt / system.eps;
    for i in 0..m {
        let mut v = x[i] + dt_over_eps * bufs.fx[i];
        if noise_scale != 0.0 {
            let row = &bufs.fdiff[i * k..(i + 1) * k];
            let mut acc = 0.0;
            for (f, xi) in row.iter().zip(&bufs.xi) {
                acc += f * xi;
            }
            v += noise_scale * acc;
        }
        x[i] = v;
    }
    for (j, g) in bufs.gy.iter().enumerate() {
        y[j] += dt * g;
    }
    if let Some(domain) = &system.domain {
        let mut clamped = false;
        for i in 0..m {
            if domain.clamp[i] {
                if x[i] < domain.lo[i] {
                    x[i] = domain.lo[i];
                    clamped = true;
                } else if x[i] > domain.hi[i] {
                    x[i] = domain.hi[i];
                    clamped = true;
                }
            }
        }
        if clamped {
            *clamp_events += 1;
        }
    }
    x.iter().all(|v| v.is_finite())
}

/// Integrates a single path with the Euler–Maruyama scheme
/// `x ← x + (dt/ε) f + σ√(dt/ε) F ξ`, `y ← y + dt g`, recording every
/// `record_stride`-th state (the initial state included).
///
/// A non-finite fast state truncates the path: the blow-up step is recorded,
/// remaining fast records are NaN, and the slow state keeps advancing with
/// the last finite fast state as drift input.
pub fn euler_maruyama(
    system: &FastSlowSystem,
    config: &SimConfig,
    x0: &[f64],
    y0: &[f64],
    path_index: usize,
) -> Result<Path> {
    config.validate(system.eps)?;
    if x0.len() != system.fast_dim {
        return Err(Error::DimensionMismatch {
            expected: system.fast_dim,
            got: x0.len(),
        });
    }
    if y0.len() != system.slow_dim {
        return Err(Error::DimensionMismatch {
            expected: system.slow_dim,
            got: y0.len(),
        });
    }
    if let Some(domain) = &system.domain {
        if !domain.contains(x0) {
            return Err(Error::InvalidArgument(
                "initial fast state outside the domain box".into(),
            ));
        }
    }

    let n_steps = (config.s_end / config.dt).round() as usize;
    let noise_scale = system.sigma * (config.dt / system.eps).sqrt();
    let mut bufs = StepBuffers::new(system.fast_dim, system.slow_dim, system.noise_dim);

    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let capacity = n_steps / config.record_stride + 2;
    let mut path = Path {
        fast_dim: system.fast_dim,
        slow_dim: system.slow_dim,
        s: Vec::with_capacity(capacity),
        y: Vec::with_capacity(capacity * system.slow_dim),
        x: Vec::with_capacity(capacity * system.fast_dim),
        clamp_events: 0,
        blowup_step: None,
        seed: rng::path_seed(config.master_seed, path_index as u64),
    };
    path.s.push(0.0);
    path.y.extend_from_slice(&y);
    path.x.extend_from_slice(&x);

    let mut x_frozen: Vec<f64> = Vec::new();
    for step in 0..n_steps {
        if path.blowup_step.is_none() {
            let finite = advance(
                system,
                &mut bufs,
                &mut x,
                &mut y,
                config.dt,
                noise_scale,
                config.master_seed,
                path_index as u64,
                step,
                &mut path.clamp_events,
            );
            if !finite {
                path.blowup_step = Some(step);
                x_frozen = path.x[path.x.len() - system.fast_dim..].to_vec();
            }
        } else {
            // keep the slow variable moving so ensembles stay on one grid
            (system.slow_drift)(&x_frozen, &y, &mut bufs.gy);
            for (j, g) in bufs.gy.iter().enumerate() {
                y[j] += config.dt * g;
            }
        }
        if (step + 1) % config.record_stride == 0 {
            path.s.push((step + 1) as f64 * config.dt);
            path.y.extend_from_slice(&y);
            if path.blowup_step.is_none() {
                path.x.extend_from_slice(&x);
            } else {
                path.x.extend(std::iter::repeat_n(f64::NAN, system.fast_dim));
            }
        }
    }
    Ok(path)
}

/// Runs `config.n_paths` independent paths and stacks them on the shared
/// slow grid. Scheduling across threads cannot change the output: every
/// Gaussian increment is addressed by `(seed, path, step)`.
pub fn simulate_ensemble(
    system: &FastSlowSystem,
    config: &SimConfig,
    x0: &[f64],
    y0: &[f64],
) -> Result<PathEnsemble> {
    config.validate(system.eps)?;
    let paths: Vec<Result<Path>> = (0..config.n_paths)
        .into_par_iter()
        .map(|r| euler_maruyama(system, config, x0, y0, r))
        .collect();
    let mut collected = Vec::with_capacity(config.n_paths);
    for p in paths {
        collected.push(p?);
    }

    let first = &collected[0];
    let grid_len = first.len();
    let mut ensemble = PathEnsemble {
        fast_dim: system.fast_dim,
        slow_dim: system.slow_dim,
        n_paths: config.n_paths,
        s_grid: first.s.clone(),
        y_grid: first.y.clone(),
        x: Vec::with_capacity(config.n_paths * grid_len * system.fast_dim),
        seeds: Vec::with_capacity(config.n_paths),
        clamp_events: Vec::with_capacity(config.n_paths),
        blowups: Vec::with_capacity(config.n_paths),
        master_seed: config.master_seed,
    };
    for p in &collected {
        // the shared-grid contract: slow paths must agree bitwise
        if p.y.len() != ensemble.y_grid.len()
            || p.y
                .iter()
                .zip(&ensemble.y_grid)
                .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::InconsistentSlowPath);
        }
        ensemble.x.extend_from_slice(&p.x);
        ensemble.seeds.push(p.seed);
        ensemble.clamp_events.push(p.clamp_events);
        ensemble.blowups.push(p.blowup_step);
    }
    Ok(ensemble)
}

/// Integrates the frozen-slow fast subsystem `dx = f(x, y*) dt + σ F dW` on
/// the fast time scale for `t_end` with step `dt_fast`.
pub fn simulate_frozen_fast(
    system: &FastSlowSystem,
    y_fixed: &[f64],
    t_end: f64,
    dt_fast: f64,
    seed: u64,
) -> Result<Path> {
    // the fast subsystem has no time-scale separation left: reuse the
    // stepper with eps = 1 and a frozen slow drift
    let frozen = FastSlowSystem {
        fast_dim: system.fast_dim,
        slow_dim: system.slow_dim,
        noise_dim: system.noise_dim,
        eps: 1.0,
        sigma: system.sigma,
        drift: system.drift.clone(),
        slow_drift: std::sync::Arc::new(|_, _, out| out.fill(0.0)),
        diffusion: system.diffusion.clone(),
        domain: system.domain.clone(),
    };
    let config = SimConfig::new(dt_fast, t_end, 1, seed, 1);
    let x0 = equilibrium_guess(system, y_fixed)?;
    euler_maruyama(&frozen, &config, &x0, y_fixed, 0)
}

/// Deterministic relaxation toward the attracting state at frozen `y`,
/// used as the starting point of frozen-fast runs.
fn equilibrium_guess(system: &FastSlowSystem, y: &[f64]) -> Result<Vec<f64>> {
    let m = system.fast_dim;
    let mut x = vec![0.0; m];
    if let Some(domain) = &system.domain {
        for i in 0..m {
            x[i] = 0.5 * (domain.lo[i] + domain.hi[i]);
        }
    }
    let mut fx = vec![0.0; m];
    let dt = 1e-2;
    for _ in 0..200_000 {
        (system.drift)(&x, y, &mut fx);
        let mut norm = 0.0;
        for i in 0..m {
            x[i] += dt * fx[i];
            norm += fx[i] * fx[i];
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NoConvergence(
                "frozen-fast relaxation diverged; y may be on the repelling side".into(),
            ));
        }
        if norm.sqrt() < 1e-13 {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::DomainBox;
    use crate::stats::{mean, sample_variance};
    use std::sync::Arc;

    fn ou_system(eps: f64, sigma: f64) -> FastSlowSystem {
        FastSlowSystem::scalar_additive(eps, sigma, |x, _| -x, |_, _| 0.0).unwrap()
    }

    #[test]
    fn deterministic_linear_decay() {
        let system = ou_system(1.0, 0.0);
        let config = SimConfig::new(0.05, 10.0, 1, 1, 1);
        let mut cfg = config;
        cfg.allow_coarse_dt = true;
        let path = euler_maruyama(&system, &cfg, &[2.0], &[0.0], 0).unwrap();
        let x_end = path.x_at(path.len() - 1)[0];
        assert!(x_end.abs() <= 2.0 * (-0.9f64 * 10.0).exp(), "{x_end}");
    }

    #[test]
    fn brownian_motion_variance_grows_linearly() {
        // f = 0, F = 1, eps = 1, sigma = 1: x(s) ~ N(0, s)
        let system = FastSlowSystem::scalar_additive(1.0, 1.0, |_, _| 0.0, |_, _| 0.0).unwrap();
        let mut config = SimConfig::new(0.05, 2.0, 40, 99, 10_000);
        config.allow_coarse_dt = true;
        let ens = simulate_ensemble(&system, &config, &[0.0], &[0.0]).unwrap();
        let last = ens.grid_len() - 1;
        let terminal: Vec<f64> = (0..ens.n_paths).map(|r| ens.x_at(r, last)[0]).collect();
        let var = sample_variance(&terminal);
        assert!((var - 2.0).abs() / 2.0 < 0.05, "terminal variance {var}");
        assert!(mean(&terminal).abs() < 0.05);
    }

    #[test]
    fn fold_path_tracks_the_attracting_branch() {
        // x' = (-y - x^2)/eps, y' = 1, sigma = 0: the path stays O(eps) from √-y
        let eps = 0.01;
        let system =
            FastSlowSystem::scalar_additive(eps, 0.0, |x, y| -y - x * x, |_, _| 1.0).unwrap();
        let config = SimConfig::new(eps / 10.0, 0.8, 1, 7, 1);
        let y0 = -1.0;
        let path = euler_maruyama(&system, &config, &[1.0], &[y0], 0).unwrap();
        for i in 0..path.len() {
            let y = path.y_at(i)[0];
            if y > -0.2 {
                break;
            }
            if path.s[i] < 0.05 {
                continue; // initial transient onto the slow manifold
            }
            let h0 = (-y).sqrt();
            let dev = (path.x_at(i)[0] - h0).abs();
            // slow-manifold offset is eps/(4|y|) to leading order
            assert!(dev <= 5.0 * eps / (4.0 * y.abs()), "y={y} dev={dev}");
        }
    }

    #[test]
    fn ensembles_are_reproducible_and_schedule_independent() {
        let system = ou_system(0.5, 0.4);
        let config = SimConfig::new(0.05, 1.0, 2, 1234, 32);
        let a = simulate_ensemble(&system, &config, &[0.1], &[0.0]).unwrap();
        let b = simulate_ensemble(&system, &config, &[0.1], &[0.0]).unwrap();
        assert_eq!(a.x.len(), b.x.len());
        assert!(a
            .x
            .iter()
            .zip(&b.x)
            .all(|(u, v)| u.to_bits() == v.to_bits()));

        // single-threaded pool must give the identical ensemble
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| simulate_ensemble(&system, &config, &[0.1], &[0.0]).unwrap());
        assert!(a
            .x
            .iter()
            .zip(&c.x)
            .all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn single_path_ensemble_equals_path_zero() {
        let system = ou_system(0.5, 0.3);
        let config = SimConfig::new(0.05, 1.0, 1, 77, 1);
        let ens = simulate_ensemble(&system, &config, &[0.2], &[0.0]).unwrap();
        let solo = euler_maruyama(&system, &config, &[0.2], &[0.0], 0).unwrap();
        assert_eq!(ens.path(0), solo);
    }

    #[test]
    fn frozen_fast_ou_reaches_stationary_variance() {
        // fold fast subsystem at y = 0.25 in the gap orientation:
        // f = y - x^2, attracting branch x = 0.5, rate 2√y = 1
        let system =
            FastSlowSystem::scalar_additive(1.0, 0.1, |x, y| y - x * x, |_, _| 0.0).unwrap();
        let path = simulate_frozen_fast(&system, &[0.25], 4000.0, 0.02, 4242).unwrap();
        let burn = path.len() / 5;
        let xs: Vec<f64> = (burn..path.len()).map(|i| path.x_at(i)[0]).collect();
        let var = sample_variance(&xs);
        let expected = 0.1f64.powi(2) / (4.0 * 0.25f64.sqrt());
        assert!((var - expected).abs() / expected < 0.10, "var {var} vs {expected}");
    }

    #[test]
    fn frozen_fast_without_noise_settles_on_branch() {
        let mut system =
            FastSlowSystem::scalar_additive(1.0, 0.0, |x, y| y - x * x, |_, _| 0.0).unwrap();
        system.sigma = 0.0;
        let path = simulate_frozen_fast(&system, &[0.25], 200.0, 0.01, 1).unwrap();
        let x_end = path.x_at(path.len() - 1)[0];
        assert!((x_end - 0.5).abs() < 1e-6, "{x_end}");
    }

    #[test]
    fn clamping_projects_onto_the_box_and_counts() {
        let system = FastSlowSystem::new(
            1,
            1,
            1,
            1.0,
            0.0,
            Arc::new(|_, _, out| out[0] = -1.0), // constant downward drift
            Arc::new(|_, _, out| out[0] = 0.0),
            Arc::new(|_, _, out| out[0] = 0.0),
        )
        .unwrap()
        .with_domain(DomainBox::clamped(vec![0.0], vec![1.0]));
        let mut config = SimConfig::new(0.1, 1.0, 1, 5, 1);
        config.allow_coarse_dt = true;
        let path = euler_maruyama(&system, &config, &[0.05], &[0.0], 0).unwrap();
        assert!(path.clamp_events > 0);
        assert!(path.x.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn blowup_is_truncated_not_an_error() {
        // x' = x^2 escapes in finite time from x0 = 5
        let system =
            FastSlowSystem::scalar_additive(0.1, 0.0, |x, _| x * x, |_, _| 1.0).unwrap();
        let config = SimConfig::new(0.01, 2.0, 1, 3, 1);
        let path = euler_maruyama(&system, &config, &[5.0], &[0.0], 0).unwrap();
        assert!(path.blowup_step.is_some());
        assert!(path.x.iter().any(|v| v.is_nan()));
        // slow grid still complete
        assert_eq!(path.len(), 201);
        assert!((path.y_at(path.len() - 1)[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weak_error_shrinks_with_dt() {
        // OU terminal variance error is O(dt); halving dt must not grow it
        let system = ou_system(1.0, 1.0);
        let exact = 0.5 * (1.0 - (-2.0f64 * 3.0).exp());
        let mut errs = Vec::new();
        for dt in [0.2, 0.1, 0.05] {
            let mut config = SimConfig::new(dt, 3.0, usize::MAX, 2024, 40_000);
            config.record_stride = (3.0 / dt) as usize; // terminal only
            config.allow_coarse_dt = true;
            let ens = simulate_ensemble(&system, &config, &[0.0], &[0.0]).unwrap();
            let last = ens.grid_len() - 1;
            let xs: Vec<f64> = (0..ens.n_paths).map(|r| ens.x_at(r, last)[0]).collect();
            errs.push((sample_variance(&xs) - exact).abs());
        }
        // first-order weak error: err(dt) ~ C dt up to MC noise
        assert!(errs[2] < errs[0] + 0.01, "{errs:?}");
    }
}
