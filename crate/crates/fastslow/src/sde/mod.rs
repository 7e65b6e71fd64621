//! Seed-reproducible Euler–Maruyama integration of fast-slow SDEs
//! `dx = (1/ε) f(x,y) ds + (σ/√ε) F(x,y) dW`, `dy = g(x,y) ds`.

mod engine;
pub mod io;
pub mod rng;

pub use engine::{euler_maruyama, simulate_ensemble, simulate_frozen_fast, Path, PathEnsemble};

use std::sync::Arc;

use crate::error::{Error, Result};

/// Vector-field callback filling its output slice from `(x, y)`.
pub type VecField = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Axis-aligned box for the fast variables with per-axis clamp flags.
#[derive(Debug, Clone)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub clamp: Vec<bool>,
}

impl DomainBox {
    pub fn clamped(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let n = lo.len();
        DomainBox {
            lo,
            hi,
            clamp: vec![true; n],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }
}

/// A fast-slow SDE: drift `f`, slow drift `g`, diffusion `F` (an `m×k`
/// matrix filled row-major), time-scale separation `eps` and noise level
/// `sigma`.
#[derive(Clone)]
pub struct FastSlowSystem {
    pub fast_dim: usize,
    pub slow_dim: usize,
    pub noise_dim: usize,
    pub eps: f64,
    pub sigma: f64,
    pub drift: VecField,
    pub slow_drift: VecField,
    pub diffusion: VecField,
    pub domain: Option<DomainBox>,
}

impl std::fmt::Debug for FastSlowSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FastSlowSystem")
            .field("fast_dim", &self.fast_dim)
            .field("slow_dim", &self.slow_dim)
            .field("noise_dim", &self.noise_dim)
            .field("eps", &self.eps)
            .field("sigma", &self.sigma)
            .field("domain", &self.domain.is_some())
            .finish()
    }
}

impl FastSlowSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fast_dim: usize,
        slow_dim: usize,
        noise_dim: usize,
        eps: f64,
        sigma: f64,
        drift: VecField,
        slow_drift: VecField,
        diffusion: VecField,
    ) -> Result<Self> {
        if eps <= 0.0 {
            return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sigma must be >= 0, got {sigma}"
            )));
        }
        Ok(FastSlowSystem {
            fast_dim,
            slow_dim,
            noise_dim,
            eps,
            sigma,
            drift,
            slow_drift,
            diffusion,
            domain: None,
        })
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Self {
        self.domain = Some(domain);
        self
    }

    /// Scalar fast/slow system with additive unit diffusion.
    pub fn scalar_additive(
        eps: f64,
        sigma: f64,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(
            1,
            1,
            1,
            eps,
            sigma,
            Arc::new(move |x, y, out| out[0] = f(x[0], y[0])),
            Arc::new(move |x, y, out| out[0] = g(x[0], y[0])),
            Arc::new(|_, _, out| out[0] = 1.0),
        )
    }
}

/// Simulation controls shared across paths of an ensemble.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Slow-time step.
    pub dt: f64,
    /// Final slow time.
    pub s_end: f64,
    /// Record every `record_stride`-th step.
    pub record_stride: usize,
    pub master_seed: u64,
    pub n_paths: usize,
    /// Lifts the `dt ≤ eps/5` fast-scale guard when explicitly set.
    pub allow_coarse_dt: bool,
}

impl SimConfig {
    pub fn new(dt: f64, s_end: f64, record_stride: usize, master_seed: u64, n_paths: usize) -> Self {
        SimConfig {
            dt,
            s_end,
            record_stride,
            master_seed,
            n_paths,
            allow_coarse_dt: false,
        }
    }

    pub fn validate(&self, eps: f64) -> Result<()> {
        if self.dt <= 0.0 || self.s_end <= 0.0 {
            return Err(Error::InvalidArgument("dt and s_end must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record_stride must be >= 1".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidArgument("n_paths must be >= 1".into()));
        }
        if !self.allow_coarse_dt && self.dt > eps / 5.0 {
            return Err(Error::StepTooLarge {
                step: self.dt,
                rate: 1.0 / eps,
                eps,
            });
        }
        Ok(())
    }
}
