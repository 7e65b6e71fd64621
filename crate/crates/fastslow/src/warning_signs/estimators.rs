//! Covariance estimators M1–M4.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sde::rng;
use crate::sde::{simulate_frozen_fast, FastSlowSystem, Path, PathEnsemble};
use crate::series::{CovarianceSeries, SeriesSource};

/// Critical-manifold graph `y -> h0(y)` used for detrending.
pub type ManifoldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Trend removed inside each sliding window before taking the covariance.
#[derive(Clone)]
pub enum Detrend {
    /// Raw windowed covariance (M1).
    None,
    /// Per-window ordinary least-squares line, per coordinate (M2).
    Linear,
    /// Subtract the critical-manifold graph `x - h0(y)` pointwise (M2-CM).
    CriticalManifold(ManifoldFn),
}

impl std::fmt::Debug for Detrend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Detrend::None => f.write_str("None"),
            Detrend::Linear => f.write_str("Linear"),
            Detrend::CriticalManifold(_) => f.write_str("CriticalManifold"),
        }
    }
}

fn window_source(detrend: &Detrend) -> SeriesSource {
    match detrend {
        Detrend::None => SeriesSource::M1,
        Detrend::Linear => SeriesSource::M2Linear,
        Detrend::CriticalManifold(_) => SeriesSource::M2Cm,
    }
}

/// Sample covariance of the rows in `data` (rows = observations of length m),
/// unbiased (n-1) normalization.
///
/// Rows are shifted by the first observation before the two-pass sweep; this
/// trims cancellation and makes identical rows come out exactly zero.
fn covariance_of(data: &[Vec<f64>], m: usize) -> DMatrix<f64> {
    let n = data.len();
    let origin = &data[0];
    let mut mean = vec![0.0; m];
    for row in data {
        for ((mu, v), o) in mean.iter_mut().zip(row).zip(origin) {
            *mu += v - o;
        }
    }
    for mu in mean.iter_mut() {
        *mu /= n as f64;
    }
    let mut cov = DMatrix::zeros(m, m);
    for row in data {
        for i in 0..m {
            let di = row[i] - origin[i] - mean[i];
            for j in i..m {
                cov[(i, j)] += di * (row[j] - origin[j] - mean[j]);
            }
        }
    }
    for i in 0..m {
        for j in i..m {
            cov[(i, j)] /= (n - 1) as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

/// Sliding-window covariance of a single path, attributed to the mean slow
/// value of each window (the midpoint on a uniform grid). Windows of
/// `window + 1` consecutive samples slide one sample at a time; partial edge
/// windows are dropped, which produces the characteristic gap at the start
/// of the curve.
pub fn sliding_window_variance(
    path: &Path,
    window: usize,
    detrend: &Detrend,
) -> Result<CovarianceSeries> {
    if window < 2 {
        return Err(Error::InvalidArgument("window must be >= 2".into()));
    }
    let len = path.len();
    if len <= window {
        return Err(Error::WindowTooLarge { window, len });
    }
    let m = path.fast_dim;
    let n_windows = len - window;
    let mut y_grid = Vec::with_capacity(n_windows);
    let mut cov = Vec::with_capacity(n_windows);

    // manifold residuals depend only on the grid point; hoist them out of
    // the window loop
    let cm_resid: Option<Vec<f64>> = match detrend {
        Detrend::CriticalManifold(h0) => {
            let mut r = Vec::with_capacity(len * m);
            for i in 0..len {
                let h = h0(path.y_at(i));
                for c in 0..m {
                    r.push(path.x_at(i)[c] - h[c]);
                }
            }
            Some(r)
        }
        _ => None,
    };

    let mut resid: Vec<Vec<f64>> = vec![vec![0.0; m]; window + 1];
    for j in 0..n_windows {
        let idx = j..=j + window;
        let y_mid = idx.clone().map(|i| path.y_at(i)[0]).sum::<f64>() / (window + 1) as f64;

        match detrend {
            Detrend::None => {
                for (row, i) in resid.iter_mut().zip(idx.clone()) {
                    row.copy_from_slice(path.x_at(i));
                }
            }
            Detrend::Linear => {
                let ss: Vec<f64> = idx.clone().map(|i| path.s[i]).collect();
                for c in 0..m {
                    let xs: Vec<f64> = idx.clone().map(|i| path.x_at(i)[c]).collect();
                    let (slope, intercept) = crate::stats::ols_line(&ss, &xs);
                    for (row, (s, x)) in resid.iter_mut().zip(ss.iter().zip(&xs)) {
                        row[c] = x - (slope * s + intercept);
                    }
                }
            }
            Detrend::CriticalManifold(_) => {
                let all = cm_resid.as_ref().unwrap();
                for (row, i) in resid.iter_mut().zip(idx.clone()) {
                    row.copy_from_slice(&all[i * m..(i + 1) * m]);
                }
            }
        }
        if resid.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
            break; // window reached NaN padding past a blow-up
        }
        y_grid.push(y_mid);
        cov.push(covariance_of(&resid, m));
    }
    CovarianceSeries::new(y_grid, cov, window_source(detrend), Some(window), 1)
}

/// Sliding-window estimate per path, averaged across the ensemble.
///
/// This is the windowed counterpart of the pointwise estimator: every intact
/// path contributes one windowed covariance curve on the shared grid and the
/// curves are averaged entrywise.
pub fn ensemble_window_average(
    ens: &PathEnsemble,
    window: usize,
    detrend: &Detrend,
) -> Result<CovarianceSeries> {
    let alive: Vec<usize> = (0..ens.n_paths)
        .filter(|&r| ens.blowups[r].is_none())
        .collect();
    if alive.is_empty() {
        return Err(Error::InvalidArgument("no complete paths".into()));
    }
    // per-path estimates in parallel, order-preserving reduce
    let per_path: Vec<Result<CovarianceSeries>> = alive
        .par_iter()
        .map(|&r| sliding_window_variance(&ens.path(r), window, detrend))
        .collect();
    let mut acc: Option<CovarianceSeries> = None;
    for series in per_path {
        let series = series?;
        match &mut acc {
            None => acc = Some(series),
            Some(base) => {
                if base.y_grid.len() != series.y_grid.len() {
                    return Err(Error::InconsistentSlowPath);
                }
                for (a, b) in base.cov.iter_mut().zip(&series.cov) {
                    *a += b;
                }
            }
        }
    }
    let mut series = acc.unwrap();
    let scale = 1.0 / alive.len() as f64;
    for c in series.cov.iter_mut() {
        *c *= scale;
    }
    series.n_paths_used = alive.len();
    Ok(series)
}

/// Pointwise (per grid point) sample covariance across the ensemble (M3).
///
/// Paths that blew up are dropped entirely; the cross-path mean subtraction
/// removes the deterministic drift, so no detrending is involved.
pub fn ensemble_pointwise_moments(ens: &PathEnsemble) -> Result<CovarianceSeries> {
    let alive: Vec<usize> = (0..ens.n_paths)
        .filter(|&r| ens.blowups[r].is_none())
        .collect();
    if alive.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 complete paths for pointwise moments".into(),
        ));
    }
    let m = ens.fast_dim;
    let grid = ens.grid_len();
    let mut y_grid = Vec::with_capacity(grid);
    let mut cov = Vec::with_capacity(grid);
    let mut rows: Vec<Vec<f64>> = vec![vec![0.0; m]; alive.len()];
    for i in 0..grid {
        for (row, &r) in rows.iter_mut().zip(&alive) {
            row.copy_from_slice(ens.x_at(r, i));
        }
        y_grid.push(ens.y_at(i)[0]);
        cov.push(covariance_of(&rows, m));
    }
    CovarianceSeries::new(y_grid, cov, SeriesSource::M3, None, alive.len())
}

/// Frozen-slow-variable variance scan (M4): for each `y` the fast subsystem
/// runs for `t_end`, the first `burn_in_frac` of the samples are discarded,
/// and the time-average covariance of the remainder is reported.
pub fn frozen_variance_scan(
    system: &FastSlowSystem,
    y_values: &[f64],
    t_end: f64,
    dt_fast: f64,
    burn_in_frac: f64,
    seed: u64,
) -> Result<CovarianceSeries> {
    if !(0.0..1.0).contains(&burn_in_frac) {
        return Err(Error::InvalidArgument("burn_in_frac must be in [0, 1)".into()));
    }
    if system.slow_dim != 1 {
        return Err(Error::InvalidArgument(
            "frozen scans take scalar slow variables".into(),
        ));
    }
    let m = system.fast_dim;
    let mut y_grid = Vec::with_capacity(y_values.len());
    let mut cov = Vec::with_capacity(y_values.len());
    for (j, &y) in y_values.iter().enumerate() {
        let run_seed = rng::path_seed(seed, j as u64);
        let path = simulate_frozen_fast(system, &[y], t_end, dt_fast, run_seed)?;
        let burn = (path.len() as f64 * burn_in_frac) as usize;
        let rows: Vec<Vec<f64>> = (burn..path.len()).map(|i| path.x_at(i).to_vec()).collect();
        if rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::NoConvergence(format!(
                "frozen run at y={y} left the finite range"
            )));
        }
        y_grid.push(y);
        cov.push(covariance_of(&rows, m));
    }
    CovarianceSeries::new(y_grid, cov, SeriesSource::M4, None, y_values.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{euler_maruyama, simulate_ensemble, SimConfig};
    use crate::stats::sample_variance;

    fn constant_path(value: f64, len: usize) -> Path {
        Path {
            fast_dim: 1,
            slow_dim: 1,
            s: (0..len).map(|i| i as f64 * 0.01).collect(),
            y: (0..len).map(|i| i as f64 * 0.01).collect(),
            x: vec![value; len],
            clamp_events: 0,
            blowup_step: None,
            seed: 0,
        }
    }

    #[test]
    fn constant_series_has_zero_variance() {
        let path = constant_path(1.5, 400);
        for detrend in [Detrend::None, Detrend::Linear] {
            let series = sliding_window_variance(&path, 50, &detrend).unwrap();
            assert!(series.cov.iter().all(|c| c[(0, 0)] == 0.0));
        }
    }

    #[test]
    fn exact_line_is_removed_by_linear_detrending() {
        let len = 300;
        let mut path = constant_path(0.0, len);
        for i in 0..len {
            let y = path.y[i];
            path.x[i] = 2.0 * y + 3.0;
        }
        let series = sliding_window_variance(&path, 40, &Detrend::Linear).unwrap();
        assert!(series.cov.iter().all(|c| c[(0, 0)].abs() < 1e-24));
        // without detrending the ramp dominates
        let raw = sliding_window_variance(&path, 40, &Detrend::None).unwrap();
        assert!(raw.cov.iter().all(|c| c[(0, 0)] > 1e-5));
    }

    #[test]
    fn iid_noise_recovers_the_marginal_variance() {
        let len = 4000;
        let mut path = constant_path(0.0, len);
        for i in 0..len {
            path.x[i] = 0.2 * rng::normal_at(31337, 0, i as u64, 0);
        }
        let series = sliding_window_variance(&path, 200, &Detrend::None).unwrap();
        for (y, c) in series.y_grid.iter().zip(&series.cov) {
            let v = c[(0, 0)];
            assert!((v - 0.04).abs() / 0.04 < 0.45, "y={y}: {v}");
        }
        // and the average is much tighter than the pointwise spread
        let avg: f64 =
            series.cov.iter().map(|c| c[(0, 0)]).sum::<f64>() / series.cov.len() as f64;
        assert!((avg - 0.04).abs() / 0.04 < 0.15, "{avg}");
    }

    #[test]
    fn window_midpoint_attribution() {
        let path = constant_path(1.0, 100);
        let series = sliding_window_variance(&path, 10, &Detrend::None).unwrap();
        // first window covers y[0..=10], mean = 0.05
        assert!((series.y_grid[0] - 0.05).abs() < 1e-12);
        assert_eq!(series.y_grid.len(), 100 - 10);
        assert_eq!(series.window, Some(10));
    }

    #[test]
    fn linear_detrending_is_idempotent() {
        // residuals of a detrended window are already mean- and slope-free
        let len = 500;
        let mut path = constant_path(0.0, len);
        for i in 0..len {
            path.x[i] = 0.3 * path.y[i] + 0.1 * rng::normal_at(7, 0, i as u64, 0);
        }
        let once = sliding_window_variance(&path, 60, &Detrend::Linear).unwrap();
        // build a path whose x is the residual of each full-series OLS? The
        // invariant the estimator guarantees is per-window: applying the
        // window OLS to its own residuals changes nothing.
        let ss: Vec<f64> = (0..=60).map(|i| path.s[i]).collect();
        let xs: Vec<f64> = (0..=60).map(|i| path.x[i]).collect();
        let (a, b) = crate::stats::ols_line(&ss, &xs);
        let resid: Vec<f64> = ss.iter().zip(&xs).map(|(s, x)| x - (a * s + b)).collect();
        let (a2, b2) = crate::stats::ols_line(&ss, &resid);
        let v1 = sample_variance(&resid);
        let twice: Vec<f64> = ss
            .iter()
            .zip(&resid)
            .map(|(s, x)| x - (a2 * s + b2))
            .collect();
        let v2 = sample_variance(&twice);
        assert!((v1 - v2).abs() <= 1e-12 * v1.max(1e-300));
        assert!((v1 - once.cov[0][(0, 0)]).abs() <= 1e-12 * v1);
    }

    #[test]
    fn deterministic_ensemble_has_zero_pointwise_variance() {
        let system =
            FastSlowSystem::scalar_additive(0.5, 0.0, |x, _| -x, |_, _| 1.0).unwrap();
        let config = SimConfig::new(0.05, 1.0, 1, 3, 8);
        let ens = simulate_ensemble(&system, &config, &[1.0], &[0.0]).unwrap();
        let series = ensemble_pointwise_moments(&ens).unwrap();
        assert!(series.cov.iter().all(|c| c[(0, 0)] == 0.0));
        assert_eq!(series.n_paths_used, 8);
    }

    #[test]
    fn ou_ensemble_matches_stationary_variance() {
        // dX = -X dt + dW: the Euler-discretized chain has stationary
        // variance dt/(1-(1-dt)^2) = 1/(2-dt), within O(dt) of 0.5
        let dt = 0.01;
        let system =
            FastSlowSystem::scalar_additive(1.0, 1.0, |x, _| -x, |_, _| 1.0).unwrap();
        let mut config = SimConfig::new(dt, 8.0, 800, 2718, 4000);
        config.allow_coarse_dt = true;
        let ens = simulate_ensemble(&system, &config, &[0.0], &[0.0]).unwrap();
        let series = ensemble_pointwise_moments(&ens).unwrap();
        let v = series.cov.last().unwrap()[(0, 0)];
        let target = 1.0 / (2.0 - dt);
        let se = target * (2.0 / (ens.n_paths as f64 - 1.0)).sqrt();
        assert!((v - target).abs() <= 3.0 * se, "v={v}, target={target}, 3se={}", 3.0 * se);
        assert!((v - 0.5).abs() < 0.05);
    }

    #[test]
    fn fold_ensemble_tracks_the_variance_law() {
        // x' = (y - x^2)/eps with y moving 1 -> 0.2: Var ≈ sigma^2/(4 sqrt y)
        let eps = 0.01;
        let sigma = 0.01;
        let system =
            FastSlowSystem::scalar_additive(eps, sigma, |x, y| y - x * x, |_, _| -1.0).unwrap();
        let config = SimConfig::new(2e-4, 0.8, 40, 31415, 600);
        let ens = simulate_ensemble(&system, &config, &[1.0], &[1.0]).unwrap();
        let series = ensemble_pointwise_moments(&ens).unwrap();
        for (y, c) in series.y_grid.iter().zip(&series.cov) {
            if *y > 0.9 {
                continue; // initial transient from the deterministic start
            }
            let predicted = sigma * sigma / (4.0 * y.sqrt());
            let v = c[(0, 0)];
            assert!(
                (v - predicted).abs() / predicted < 0.25,
                "y={y}: {v} vs {predicted}"
            );
        }
    }

    #[test]
    fn cm_detrending_matches_pointwise_estimates_on_the_fold() {
        let eps = 0.01;
        let sigma = 0.01;
        let system =
            FastSlowSystem::scalar_additive(eps, sigma, |x, y| y - x * x, |_, _| -1.0).unwrap();
        let config = SimConfig::new(2e-4, 0.7, 10, 99, 400);
        let ens = simulate_ensemble(&system, &config, &[1.0], &[1.0]).unwrap();
        let m3 = ensemble_pointwise_moments(&ens).unwrap();

        let h0 = Arc::new(|y: &[f64]| vec![y[0].max(0.0).sqrt()]);
        // average the per-path windowed estimates
        let mut acc: Vec<f64> = Vec::new();
        let mut y_grid: Vec<f64> = Vec::new();
        for r in 0..ens.n_paths {
            let path = ens.path(r);
            let w =
                sliding_window_variance(&path, 100, &Detrend::CriticalManifold(h0.clone()))
                    .unwrap();
            if acc.is_empty() {
                acc = vec![0.0; w.y_grid.len()];
                y_grid = w.y_grid.clone();
            }
            for (a, c) in acc.iter_mut().zip(&w.cov) {
                *a += c[(0, 0)];
            }
        }
        for a in acc.iter_mut() {
            *a /= ens.n_paths as f64;
        }
        // compare on the common interior window
        for (y, v) in y_grid.iter().zip(&acc) {
            if *y > 0.9 || *y < 0.3 {
                continue;
            }
            let i = m3
                .y_grid
                .iter()
                .position(|yy| (yy - y).abs() < 2e-3)
                .unwrap();
            let v3 = m3.cov[i][(0, 0)];
            assert!((v - v3).abs() <= 0.35 * v3.max(1e-12), "y={y}: {v} vs {v3}");
        }
    }

    #[test]
    fn frozen_scan_recovers_the_fold_variance() {
        let system =
            FastSlowSystem::scalar_additive(1.0, 0.1, |x, y| y - x * x, |_, _| 0.0).unwrap();
        let series =
            frozen_variance_scan(&system, &[0.25, 0.5, 1.0], 3000.0, 0.02, 0.2, 11).unwrap();
        for (y, c) in series.y_grid.iter().zip(&series.cov) {
            let predicted = 0.01 / (4.0 * y.sqrt());
            let v = c[(0, 0)];
            assert!((v - predicted).abs() / predicted < 0.10, "y={y}: {v}");
        }
        assert_eq!(series.source, SeriesSource::M4);
    }

    #[test]
    fn frozen_scan_without_noise_is_zero() {
        let system =
            FastSlowSystem::scalar_additive(1.0, 0.0, |x, y| y - x * x, |_, _| 0.0).unwrap();
        let series = frozen_variance_scan(&system, &[0.25, 1.0], 50.0, 0.01, 0.2, 1).unwrap();
        assert!(series.cov.iter().all(|c| c[(0, 0)] < 1e-20));
    }

    #[test]
    fn window_larger_than_series_is_rejected() {
        let path = constant_path(0.0, 20);
        assert!(matches!(
            sliding_window_variance(&path, 30, &Detrend::None),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn euler_maruyama_and_window_pipeline_smoke() {
        let system =
            FastSlowSystem::scalar_additive(0.1, 0.05, |x, _| -x, |_, _| 1.0).unwrap();
        let config = SimConfig::new(0.02, 4.0, 1, 5, 1);
        let path = euler_maruyama(&system, &config, &[0.0], &[0.0], 0).unwrap();
        let series = sliding_window_variance(&path, 50, &Detrend::Linear).unwrap();
        assert!(series.y_grid.len() > 100);
    }
}
