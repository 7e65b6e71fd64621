//! Covariance scaling laws near critical transitions.
//!
//! The leading-order covariance of fluctuations around an attracting slow
//! manifold solves the algebraic equation `0 = A0(y) X + X A0(y)ᵀ + N(y)`
//! with `N = F0 F0ᵀ`. This module provides the dense solver, the per-entry
//! closed forms, the double-singular `ε`-expansions for the fold, the matrix
//! variance ODE integrator, and numerical checks of the supporting
//! asymptotic estimates (Laplace endpoint integrals and even-moment bounds).

mod asymptotics;
mod closed_form;
mod fold_series;
mod lyapunov;
mod variance_ode;

pub use asymptotics::{laplace_ratio, moment_bound_check, LaplaceRatio, MomentBoundCheck};
pub use closed_form::{bt_closed_form, covariance_closed_form, scaling_exponents};
pub use fold_series::{
    fold_invariance_residual, fold_slow_manifold_expansion, fold_variance_expansion,
    SeriesOrientation,
};
pub use lyapunov::{solve_lyapunov, solve_lyapunov_unchecked, spectral_abscissa};
pub use variance_ode::integrate_variance_ode;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Matrix-valued function of the slow variable.
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Symmetric noise matrix `N(y) = F0(y) F0(y)ᵀ`, possibly y-dependent.
#[derive(Clone)]
pub struct NoiseMatrix {
    eval: MatrixFn,
    dim: usize,
    constant: bool,
}

impl NoiseMatrix {
    /// Constant (additive-noise) matrix; must be symmetric PSD.
    pub fn constant(m: DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        validate_noise(&m)?;
        Ok(NoiseMatrix {
            eval: Arc::new(move |_| m.clone()),
            dim,
            constant: true,
        })
    }

    /// Scalar constant noise (1-D fast subsystems).
    pub fn scalar(n: f64) -> Result<Self> {
        Self::constant(DMatrix::from_element(1, 1, n))
    }

    /// y-dependent (multiplicative) noise.
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        NoiseMatrix {
            eval: Arc::new(f),
            dim,
            constant: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// Evaluates and validates symmetry and positive semi-definiteness.
    pub fn eval(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let m = (self.eval)(y);
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: m.nrows(),
            });
        }
        validate_noise(&m)?;
        Ok(m)
    }
}

impl std::fmt::Debug for NoiseMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseMatrix")
            .field("dim", &self.dim)
            .field("constant", &self.constant)
            .finish()
    }
}

fn validate_noise(m: &DMatrix<f64>) -> Result<()> {
    let sym_tol = 1e-12 * m.amax().max(1.0);
    if (m - m.transpose()).amax() > sym_tol {
        return Err(Error::InvalidNoise("not symmetric".into()));
    }
    let tol = -1e-10 * m.trace().abs().max(1.0);
    let min_eig = m
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < tol {
        return Err(Error::InvalidNoise(format!("min eigenvalue {min_eig:.3e}")));
    }
    Ok(())
}

/// Leading-order covariance matrix at a slow point.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: DMatrix<f64>,
    /// Slow point of evaluation.
    pub y: Vec<f64>,
    /// Expansion order in ε (0 = leading).
    pub order: u32,
}
