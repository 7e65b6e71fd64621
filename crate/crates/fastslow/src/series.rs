//! Covariance-versus-slow-variable series shared by estimators and theory.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// How a [`CovarianceSeries`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesSource {
    /// Sliding window without detrending.
    M1,
    /// Sliding window with per-window linear detrending.
    M2Linear,
    /// Sliding window with critical-manifold detrending.
    M2Cm,
    /// Pointwise sample covariance across an ensemble.
    M3,
    /// Frozen-slow-variable fast-subsystem scan.
    M4,
    /// Integration of the matrix variance ODE (theory, not an estimator).
    VarianceOde,
}

impl SeriesSource {
    pub fn name(self) -> &'static str {
        match self {
            SeriesSource::M1 => "m1",
            SeriesSource::M2Linear => "m2-linear",
            SeriesSource::M2Cm => "m2-cm",
            SeriesSource::M3 => "m3",
            SeriesSource::M4 => "m4",
            SeriesSource::VarianceOde => "variance-ode",
        }
    }
}

/// Estimated or computed `m×m` covariance on a strictly monotone y-grid.
#[derive(Debug, Clone)]
pub struct CovarianceSeries {
    pub y_grid: Vec<f64>,
    pub cov: Vec<DMatrix<f64>>,
    pub source: SeriesSource,
    /// Sliding-window length, when applicable.
    pub window: Option<usize>,
    /// Sample paths behind the estimate (0 for theory series).
    pub n_paths_used: usize,
}

impl CovarianceSeries {
    pub fn new(
        y_grid: Vec<f64>,
        cov: Vec<DMatrix<f64>>,
        source: SeriesSource,
        window: Option<usize>,
        n_paths_used: usize,
    ) -> Result<Self> {
        if y_grid.len() != cov.len() {
            return Err(Error::DimensionMismatch {
                expected: y_grid.len(),
                got: cov.len(),
            });
        }
        if y_grid.len() < 2 {
            return Err(Error::InvalidArgument("series needs at least 2 points".into()));
        }
        let increasing = y_grid.windows(2).all(|w| w[1] > w[0]);
        let decreasing = y_grid.windows(2).all(|w| w[1] < w[0]);
        if !increasing && !decreasing {
            return Err(Error::InvalidArgument(
                "y grid must be strictly monotone".into(),
            ));
        }
        for c in &cov {
            let tol = -1e-10 * c.trace().abs().max(1.0);
            let min_eig = c
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min_eig < tol {
                return Err(Error::InvalidNoise(format!(
                    "covariance entry has eigenvalue {min_eig:.3e}"
                )));
            }
        }
        Ok(CovarianceSeries {
            y_grid,
            cov,
            source,
            window,
            n_paths_used,
        })
    }

    pub fn fast_dim(&self) -> usize {
        self.cov.first().map_or(0, |c| c.nrows())
    }

    /// Diagonal variance component `i` as a plain vector.
    pub fn variance_component(&self, i: usize) -> Vec<f64> {
        self.cov.iter().map(|c| c[(i, i)]).collect()
    }

    /// Covariance entry `(i, j)` as a plain vector.
    pub fn entry(&self, i: usize, j: usize) -> Vec<f64> {
        self.cov.iter().map(|c| c[(i, j)]).collect()
    }

    /// Restricts the series to grid points with `lo <= y <= hi`.
    pub fn restrict(&self, lo: f64, hi: f64) -> CovarianceSeries {
        let mut y = Vec::new();
        let mut cov = Vec::new();
        for (i, &yy) in self.y_grid.iter().enumerate() {
            if yy >= lo && yy <= hi {
                y.push(yy);
                cov.push(self.cov[i].clone());
            }
        }
        CovarianceSeries {
            y_grid: y,
            cov,
            source: self.source,
            window: self.window,
            n_paths_used: self.n_paths_used,
        }
    }
}
