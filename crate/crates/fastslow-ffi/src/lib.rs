//! C ABI for the fastslow toolkit.
//!
//! The surface follows the usual C conventions: opaque handles behind
//! pointers, integer status codes, caller-owned buffers. Every function is
//! safe to call from any thread; error details for the most recent failing
//! call on the current thread are available via [`fs_last_error`].
//!
//! The matching header (`include/fastslow.h`) is generated by cbindgen at
//! build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use fastslow::covariance::{self, SeriesOrientation};
use fastslow::models::{self, ModelPreset, NoiseShape, PresetId};
use fastslow::normal_forms::{self, AuxParams, BifurcationKind, NormalFormEntry, Transition};
use fastslow::sde::{self, SimConfig};
use fastslow::warning_signs::{fit_scaling, ScalingLaw};

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = CString::new(msg.to_string()).unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotAttracting = 4,
    NotHurwitz = 5,
    NumericalFailure = 6,
    IoFailure = 7,
}

fn status_of(err: &fastslow::Error) -> FsStatus {
    use fastslow::Error::*;
    match err {
        DimensionMismatch { .. } => FsStatus::DimensionMismatch,
        NotAttracting(_) | NoAttractingBranch => FsStatus::NotAttracting,
        NotHurwitz(_) => FsStatus::NotHurwitz,
        InvalidArgument(_) | InvalidFitData(_) | WindowTooLarge { .. } | Resonance { .. } => {
            FsStatus::InvalidArgument
        }
        Io(_) | Format(_) => FsStatus::IoFailure,
        _ => FsStatus::NumericalFailure,
    }
}

fn fail(err: fastslow::Error) -> FsStatus {
    let code = status_of(&err);
    set_error(err);
    code
}

/// Bifurcation kinds of the normal-form catalog.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsBifurcation {
    Fold = 0,
    Transcritical = 1,
    Pitchfork = 2,
    Cusp = 3,
    Hopf = 4,
    Bautin = 5,
    BogdanovTakens = 6,
    FoldHopf = 7,
    HopfHopf = 8,
}

impl From<FsBifurcation> for BifurcationKind {
    fn from(k: FsBifurcation) -> Self {
        match k {
            FsBifurcation::Fold => BifurcationKind::Fold,
            FsBifurcation::Transcritical => BifurcationKind::Transcritical,
            FsBifurcation::Pitchfork => BifurcationKind::Pitchfork,
            FsBifurcation::Cusp => BifurcationKind::Cusp,
            FsBifurcation::Hopf => BifurcationKind::Hopf,
            FsBifurcation::Bautin => BifurcationKind::Bautin,
            FsBifurcation::BogdanovTakens => BifurcationKind::BogdanovTakens,
            FsBifurcation::FoldHopf => BifurcationKind::FoldHopf,
            FsBifurcation::HopfHopf => BifurcationKind::HopfHopf,
        }
    }
}

/// Classifier verdicts.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsTransition {
    Critical = 0,
    NotCritical = 1,
    Indeterminate = 2,
}

/// Slow-flow data and auxiliary normal-form parameters for classification.
/// `has_j2 = 0` marks the cycle blow-up tangent as unavailable.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FsSlowFlow {
    pub g1: f64,
    pub g2: f64,
    pub dg2_dy2: f64,
    pub j2: f64,
    pub has_j2: i32,
    pub s: f64,
    pub l1: f64,
    pub l2: f64,
    pub theta0: f64,
}

/// Scaling laws for variance fits.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsScalingLaw {
    InvSqrt = 0,
    Inv = 1,
    InvSqrtRev = 2,
    InvRev = 3,
    Linear = 4,
}

impl From<FsScalingLaw> for ScalingLaw {
    fn from(l: FsScalingLaw) -> Self {
        match l {
            FsScalingLaw::InvSqrt => ScalingLaw::InvSqrt,
            FsScalingLaw::Inv => ScalingLaw::Inv,
            FsScalingLaw::InvSqrtRev => ScalingLaw::InvSqrtRev,
            FsScalingLaw::InvRev => ScalingLaw::InvRev,
            FsScalingLaw::Linear => ScalingLaw::Linear,
        }
    }
}

/// Result of a scaling-law fit.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FsFit {
    pub a: f64,
    pub y_c: f64,
    pub rss: f64,
    pub converged: i32,
    pub iterations: u32,
}

/// Opaque preset-backed fast-slow system.
pub struct FsSystem {
    preset: ModelPreset,
}

/// Opaque simulated ensemble.
pub struct FsEnsemble {
    inner: sde::PathEnsemble,
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the current thread's last error message into `buf` (truncated to
/// `len - 1` bytes, always NUL-terminated). Returns the full message length.
///
/// # Safety
/// `buf` must point to `len` writable bytes (or be null for a pure length
/// query).
#[no_mangle]
pub unsafe extern "C" fn fs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            // guarantee termination after truncation
            *buf.add(n - 1) = 0;
        }
        bytes.len() - 1
    })
}

fn entry_with(kind: FsBifurcation, p: &FsSlowFlow) -> NormalFormEntry {
    let aux = AuxParams {
        s: p.s,
        l1: p.l1,
        l2: p.l2,
        theta0: p.theta0,
        ..AuxParams::default()
    };
    NormalFormEntry::with_aux(kind.into(), aux)
}

/// Classifies whether the bifurcation is a critical transition under the
/// given slow-flow data.
///
/// # Safety
/// `params` and `verdict` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fs_classify(
    kind: FsBifurcation,
    params: *const FsSlowFlow,
    verdict: *mut FsTransition,
) -> FsStatus {
    if params.is_null() || verdict.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    let p = &*params;
    let entry = entry_with(kind, p);
    let mut slow = if entry.slow_dim == 1 {
        normal_forms::SlowFlowData::scalar(p.g1)
    } else {
        normal_forms::SlowFlowData::planar(p.g1, p.g2)
    };
    slow.dg2_dy2 = p.dg2_dy2;
    slow.j2 = (p.has_j2 != 0).then_some(p.j2);
    match normal_forms::classify_transition(&entry, &slow) {
        Ok(t) => {
            *verdict = match t {
                Transition::Critical => FsTransition::Critical,
                Transition::NotCritical => FsTransition::NotCritical,
                Transition::Indeterminate => FsTransition::Indeterminate,
            };
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Solves `A X + X Aᵀ + N = 0` for Hurwitz `A`; all matrices are row-major
/// `dim × dim`, `x_out` receives the symmetric solution.
///
/// # Safety
/// `a`, `n` and `x_out` must each point to `dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn fs_solve_lyapunov(
    dim: usize,
    a: *const f64,
    n: *const f64,
    x_out: *mut f64,
) -> FsStatus {
    if a.is_null() || n.is_null() || x_out.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    if dim == 0 {
        set_error("dim must be positive");
        return FsStatus::InvalidArgument;
    }
    let a = std::slice::from_raw_parts(a, dim * dim);
    let n = std::slice::from_raw_parts(n, dim * dim);
    let a = nalgebra::DMatrix::from_row_slice(dim, dim, a);
    let n = nalgebra::DMatrix::from_row_slice(dim, dim, n);
    match covariance::solve_lyapunov(&a, &n) {
        Ok(x) => {
            let out = std::slice::from_raw_parts_mut(x_out, dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    out[i * dim + j] = x[(i, j)];
                }
            }
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Fold slow-manifold expansion `h_ε(y)` through `ε^order` (order ≤ 4).
/// `toward_fold != 0` selects the approach orientation.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_fold_manifold_expansion(
    y: f64,
    eps: f64,
    order: u32,
    toward_fold: i32,
    out: *mut f64,
) -> FsStatus {
    if out.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    let orientation = if toward_fold != 0 {
        SeriesOrientation::TowardFold
    } else {
        SeriesOrientation::AwayFromFold
    };
    match covariance::fold_slow_manifold_expansion(y, eps, order, orientation) {
        Ok(v) => {
            *out = v;
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Fold variance expansion `H_ε(y)` through `ε^order` (order ≤ 4); multiply
/// by `σ²` for the physical variance.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_fold_variance_expansion(
    y: f64,
    eps: f64,
    order: u32,
    toward_fold: i32,
    out: *mut f64,
) -> FsStatus {
    if out.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    let orientation = if toward_fold != 0 {
        SeriesOrientation::TowardFold
    } else {
        SeriesOrientation::AwayFromFold
    };
    match covariance::fold_variance_expansion(y, eps, order, orientation) {
        Ok(v) => {
            *out = v;
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Goldbeter-Koshland switch response `G(u, v, J, K)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_goldbeter_koshland(
    u: f64,
    v: f64,
    j: f64,
    k: f64,
    out: *mut f64,
) -> FsStatus {
    if out.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    match models::goldbeter_koshland(u, v, j, k) {
        Ok(g) => {
            *out = g;
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Builds a preset system by name (stommel, sis, activator-inhibitor,
/// bazykin, buckling). `noise_shape` applies to the buckling preset
/// (0 const, 1 sqrt-gap, 2 linear-gap).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer; the
/// returned handle must be released with [`fs_system_free`].
#[no_mangle]
pub unsafe extern "C" fn fs_system_preset(
    name: *const c_char,
    noise_shape: i32,
    out: *mut *mut FsSystem,
) -> FsStatus {
    if name.is_null() || out.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    let name = match CStr::from_ptr(name).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("preset name is not valid UTF-8");
            return FsStatus::InvalidArgument;
        }
    };
    let shape = match noise_shape {
        0 => NoiseShape::Const,
        1 => NoiseShape::SqrtGap,
        2 => NoiseShape::LinearGap,
        _ => {
            set_error("noise_shape must be 0, 1 or 2");
            return FsStatus::InvalidArgument;
        }
    };
    let id = match PresetId::parse(name) {
        Ok(id) => id,
        Err(e) => return fail(e),
    };
    match models::build_preset(id, &Default::default(), shape) {
        Ok(preset) => {
            *out = Box::into_raw(Box::new(FsSystem { preset }));
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Releases a system handle.
///
/// # Safety
/// `system` must be a handle returned by [`fs_system_preset`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fs_system_free(system: *mut FsSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Fast/slow dimensions of a system handle.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_system_dims(
    system: *const FsSystem,
    fast_dim: *mut usize,
    slow_dim: *mut usize,
) -> FsStatus {
    if system.is_null() || fast_dim.is_null() || slow_dim.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    *fast_dim = (*system).preset.system.fast_dim;
    *slow_dim = (*system).preset.system.slow_dim;
    FsStatus::Ok
}

/// Simulates a seed-reproducible ensemble. `x0`/`y0` may be null to use the
/// preset's default initial state.
///
/// # Safety
/// `system` must be a live handle; `x0`/`y0`, when non-null, must point to
/// `fast_dim`/`slow_dim` doubles; the returned handle must be released with
/// [`fs_ensemble_free`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fs_simulate_ensemble(
    system: *const FsSystem,
    dt: f64,
    s_end: f64,
    record_stride: usize,
    master_seed: u64,
    n_paths: usize,
    x0: *const f64,
    y0: *const f64,
    out: *mut *mut FsEnsemble,
) -> FsStatus {
    if system.is_null() || out.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    let preset = &(*system).preset;
    let x0 = if x0.is_null() {
        preset.x0.clone()
    } else {
        std::slice::from_raw_parts(x0, preset.system.fast_dim).to_vec()
    };
    let y0 = if y0.is_null() {
        preset.y0.clone()
    } else {
        std::slice::from_raw_parts(y0, preset.system.slow_dim).to_vec()
    };
    let config = SimConfig::new(dt, s_end, record_stride, master_seed, n_paths);
    match sde::simulate_ensemble(&preset.system, &config, &x0, &y0) {
        Ok(ens) => {
            *out = Box::into_raw(Box::new(FsEnsemble { inner: ens }));
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Releases an ensemble handle.
///
/// # Safety
/// `ens` must be a handle returned by [`fs_simulate_ensemble`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fs_ensemble_free(ens: *mut FsEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Grid length of an ensemble (0 for a null handle).
///
/// # Safety
/// `ens` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fs_ensemble_len(ens: *const FsEnsemble) -> usize {
    if ens.is_null() {
        return 0;
    }
    (*ens).inner.grid_len()
}

/// Pointwise ensemble variance of fast component `component`; fills `y_out`
/// and `var_out` with `fs_ensemble_len` values each.
///
/// # Safety
/// Buffers must hold `fs_ensemble_len(ens)` doubles.
#[no_mangle]
pub unsafe extern "C" fn fs_ensemble_variance(
    ens: *const FsEnsemble,
    component: usize,
    y_out: *mut f64,
    var_out: *mut f64,
) -> FsStatus {
    if ens.is_null() || y_out.is_null() || var_out.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    let inner = &(*ens).inner;
    if component >= inner.fast_dim {
        set_error("component out of range");
        return FsStatus::InvalidArgument;
    }
    match fastslow::warning_signs::ensemble_pointwise_moments(inner) {
        Ok(series) => {
            let len = series.y_grid.len();
            let ys = std::slice::from_raw_parts_mut(y_out, len);
            let vs = std::slice::from_raw_parts_mut(var_out, len);
            for (i, (y, c)) in series.y_grid.iter().zip(&series.cov).enumerate() {
                ys[i] = *y;
                vs[i] = c[(component, component)];
            }
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Writes an ensemble to CSV at `path`.
///
/// # Safety
/// `ens` must be live; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn fs_ensemble_write_csv(
    ens: *const FsEnsemble,
    path: *const c_char,
) -> FsStatus {
    if ens.is_null() || path.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("path is not valid UTF-8");
            return FsStatus::InvalidArgument;
        }
    };
    let file = match std::fs::File::create(path) {
        Ok(f) => f,
        Err(e) => {
            set_error(e);
            return FsStatus::IoFailure;
        }
    };
    let mut w = std::io::BufWriter::new(file);
    match sde::io::write_ensemble_csv(&mut w, &(*ens).inner) {
        Ok(()) => FsStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Least-squares scaling-law fit of `(y, v)` data.
///
/// # Safety
/// `y` and `v` must point to `len` doubles; `fit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fs_fit_scaling(
    y: *const f64,
    v: *const f64,
    len: usize,
    law: FsScalingLaw,
    fit: *mut FsFit,
) -> FsStatus {
    if y.is_null() || v.is_null() || fit.is_null() {
        set_error("null pointer");
        return FsStatus::NullPointer;
    }
    let y = std::slice::from_raw_parts(y, len);
    let v = std::slice::from_raw_parts(v, len);
    match fit_scaling(y, v, law.into()) {
        Ok(f) => {
            *fit = FsFit {
                a: f.a,
                y_c: f.y_c,
                rss: f.rss,
                converged: f.converged as i32,
                iterations: f.iterations,
            };
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}
