//! Fixed-step integration of the matrix variance ODE
//! `ε Ẋ = A(y) X + X A(y)ᵀ + N(y)` along a slow path `ẏ = g(y)`.

use nalgebra::DMatrix;

use super::lyapunov::{solve_lyapunov, spectral_abscissa};
use crate::error::{Error, Result};
use crate::series::{CovarianceSeries, SeriesSource};

/// Integrates the variance ODE with classical RK4 from the stationary
/// solution at `y0` until the first slow coordinate passes `y_end`.
///
/// `step` is the slow-time step; it must resolve the fast relaxation,
/// enforced en route as `step ≤ eps / (10 |spectral abscissa of A|)`. The
/// returned grid is the first slow coordinate.
pub fn integrate_variance_ode(
    a_path: &dyn Fn(&[f64]) -> DMatrix<f64>,
    n_path: &dyn Fn(&[f64]) -> DMatrix<f64>,
    g_slow: &dyn Fn(&[f64]) -> Vec<f64>,
    eps: f64,
    y0: &[f64],
    y_end: f64,
    step: f64,
) -> Result<CovarianceSeries> {
    if eps <= 0.0 || step <= 0.0 {
        return Err(Error::InvalidArgument("eps and step must be positive".into()));
    }
    let mut y = y0.to_vec();
    let g0 = g_slow(&y);
    if g0.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: g0.len(),
        });
    }
    let toward = (y_end - y[0]).signum();
    if toward == 0.0 || g0[0] * toward <= 0.0 {
        return Err(Error::InvalidArgument(
            "slow drift does not move y[0] toward y_end".into(),
        ));
    }

    let a0 = a_path(&y);
    let m = a0.nrows();
    let mut x = solve_lyapunov(&a0, &n_path(&y))?;

    let mut grid = vec![y[0]];
    let mut cov = vec![x.clone()];

    let deriv = |x: &DMatrix<f64>, y: &[f64]| -> Result<(DMatrix<f64>, Vec<f64>)> {
        let a = a_path(y);
        if a.nrows() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: a.nrows(),
            });
        }
        let abscissa = spectral_abscissa(&a);
        if abscissa >= -1e-12 {
            return Err(Error::NotHurwitz(abscissa));
        }
        if step > eps / (10.0 * abscissa.abs()) {
            return Err(Error::StepTooLarge {
                step,
                rate: abscissa.abs(),
                eps,
            });
        }
        let xdot = (&a * x + x * a.transpose() + n_path(y)) / eps;
        Ok((xdot, g_slow(y)))
    };

    let max_steps = 100_000_000usize;
    for _ in 0..max_steps {
        if (y[0] - y_end) * toward >= 0.0 {
            // symmetrize against roundoff drift before returning
            for c in cov.iter_mut() {
                let sym = (&*c + c.transpose()) * 0.5;
                *c = sym;
            }
            return CovarianceSeries::new(grid, cov, SeriesSource::VarianceOde, None, 0);
        }
        let (k1x, k1y) = deriv(&x, &y)?;
        let half = |base: &DMatrix<f64>, k: &DMatrix<f64>, h: f64| base + k * h;
        let yh1: Vec<f64> = y.iter().zip(&k1y).map(|(a, b)| a + 0.5 * step * b).collect();
        let (k2x, k2y) = deriv(&half(&x, &k1x, 0.5 * step), &yh1)?;
        let yh2: Vec<f64> = y.iter().zip(&k2y).map(|(a, b)| a + 0.5 * step * b).collect();
        let (k3x, k3y) = deriv(&half(&x, &k2x, 0.5 * step), &yh2)?;
        let yh3: Vec<f64> = y.iter().zip(&k3y).map(|(a, b)| a + step * b).collect();
        let (k4x, k4y) = deriv(&half(&x, &k3x, step), &yh3)?;

        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (step / 6.0);
        for j in 0..y.len() {
            y[j] += step / 6.0 * (k1y[j] + 2.0 * k2y[j] + 2.0 * k3y[j] + k4y[j]);
        }
        grid.push(y[0]);
        cov.push(x.clone());
    }
    Err(Error::NoConvergence("variance ODE exceeded step budget".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficients_stay_at_stationary_solution() {
        let a = |_: &[f64]| DMatrix::from_element(1, 1, -1.0);
        let n = |_: &[f64]| DMatrix::from_element(1, 1, 1.0);
        let g = |_: &[f64]| vec![1.0];
        let series = integrate_variance_ode(&a, &n, &g, 1e-2, &[0.0], 1.0, 1e-4).unwrap();
        for (y, c) in series.y_grid.iter().zip(&series.cov) {
            assert!(
                (c[(0, 0)] - 0.5).abs() < 1e-10,
                "at y={y}: {}",
                c[(0, 0)]
            );
        }
    }

    #[test]
    fn hopf_path_reaches_the_closed_form() {
        // the quasi-static lag of the diagonal is eps/(4y^3), i.e. 5% of the
        // stationary value at eps = 1e-3 and 0.5% at eps = 1e-4
        let a = |y: &[f64]| DMatrix::from_row_slice(2, 2, &[y[0], -1.0, 1.0, y[0]]);
        let n = |_: &[f64]| DMatrix::identity(2, 2);
        let g = |_: &[f64]| vec![1.0];
        for (eps, step, tol) in [(1e-3, 2e-5, 0.06), (1e-4, 2e-6, 0.01)] {
            let series = integrate_variance_ode(&a, &n, &g, eps, &[-0.5], -0.1, step).unwrap();
            let last = series.cov.last().unwrap();
            let lag = eps / (4.0 * (-0.1f64).powi(3));
            assert!(
                (last[(0, 0)] - (5.0 + lag)).abs() / 5.0 < 0.2 * eps / 1e-3,
                "eps={eps}: {} vs lagged {}",
                last[(0, 0)],
                5.0 + lag
            );
            assert!((last[(0, 0)] - 5.0).abs() / 5.0 < tol, "eps={eps}: {}", last[(0, 0)]);
            assert!((last[(1, 1)] - 5.0).abs() / 5.0 < tol);
            assert!(last[(0, 1)].abs() < 0.05);
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let a = |_: &[f64]| DMatrix::from_element(1, 1, -1.0);
        let n = |_: &[f64]| DMatrix::from_element(1, 1, 1.0);
        let g = |_: &[f64]| vec![1.0];
        let err = integrate_variance_ode(&a, &n, &g, 1e-3, &[0.0], 1.0, 1e-3);
        assert!(matches!(err, Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn hurwitz_violation_en_route_is_reported() {
        // A(y) = y - 0.5 crosses zero at y = 0.5
        let a = |y: &[f64]| DMatrix::from_element(1, 1, y[0] - 0.5);
        let n = |_: &[f64]| DMatrix::from_element(1, 1, 1.0);
        let g = |_: &[f64]| vec![1.0];
        let err = integrate_variance_ode(&a, &n, &g, 1e-3, &[-1.0], 1.0, 1e-6);
        assert!(matches!(err, Err(Error::NotHurwitz(_))));
    }
}
