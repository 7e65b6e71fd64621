//! Command-line front end: reproducible simulation, estimation, fitting and
//! verification experiments with CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 verification/analysis failure, 2 usage error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use fastslow::covariance::{covariance_closed_form, solve_lyapunov, NoiseMatrix};
use fastslow::models::{
    self, build_preset, ModelAnalytics, ModelPreset, NoiseShape, PresetId,
};
use fastslow::normal_forms::{
    self, AuxParams, BifurcationKind, NormalFormEntry, SlowFlowData,
};
use fastslow::sde::{io as sdeio, simulate_ensemble, FastSlowSystem, PathEnsemble, SimConfig};
use fastslow::series::CovarianceSeries;
use fastslow::stats;
use fastslow::verify::{self, Suite};
use fastslow::warning_signs::{
    compare_laws, ensemble_pointwise_moments, ensemble_window_average, frozen_variance_scan,
    Detrend, ScalingFit, ScalingLaw,
};
use fastslow::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fastslow",
    version,
    about = "Early-warning toolkit for critical transitions in stochastic fast-slow systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify whether a bifurcation is a critical transition.
    Classify(ClassifyArgs),
    /// Simulate a path ensemble for a preset or normal form.
    Simulate(SimulateArgs),
    /// Estimate a covariance series from a stored ensemble.
    Estimate(EstimateArgs),
    /// Fit scaling laws to a variance CSV.
    Fit(FitArgs),
    /// Closed-form vs dense-solve covariance scaling table.
    Scaling(ScalingArgs),
    /// List presets or dump one preset's analytics.
    Model(ModelArgs),
    /// Run a full simulate -> estimate -> fit experiment from a JSON spec.
    Run(RunArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Bifurcation kind (fold, transcritical, pitchfork, cusp, hopf,
    /// bautin, bogdanov-takens, fold-hopf, hopf-hopf).
    #[arg(long)]
    kind: String,
    /// Slow drift g(0,0) (first component).
    #[arg(long, allow_hyphen_values = true)]
    g: f64,
    /// Second slow drift component (codimension-two kinds).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    g2: f64,
    /// dg2/dy2(0,0), read by the bautin and bogdanov-takens rules.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    dg2_dy2: f64,
    /// Tangent component of the cycle blow-up curve (fold-hopf).
    #[arg(long, allow_hyphen_values = true)]
    j2: Option<f64>,
    /// Cubic/quadratic sign parameter, ±1.
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    /// First Lyapunov coefficient (hopf).
    #[arg(long, allow_hyphen_values = true)]
    l1: Option<f64>,
    /// Second Lyapunov coefficient, ±1 (bautin).
    #[arg(long, allow_hyphen_values = true)]
    l2: Option<f64>,
    /// theta(0) (fold-hopf).
    #[arg(long, allow_hyphen_values = true)]
    theta0: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Preset name (stommel, sis, activator-inhibitor, bazykin, buckling).
    #[arg(long, conflicts_with = "kind")]
    preset: Option<String>,
    /// Normal-form kind instead of a preset (unit additive noise).
    #[arg(long)]
    kind: Option<String>,
    /// Constant slow drift for --kind runs (comma-separated).
    #[arg(long, default_value = "1.0", allow_hyphen_values = true)]
    g: String,
    /// Noise shape for the buckling preset.
    #[arg(long, default_value = "const")]
    noise_shape: String,
    /// Parameter overrides key=value (repeatable).
    #[arg(long = "param", value_parser = parse_key_val)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 100)]
    paths: usize,
    #[arg(long)]
    dt: f64,
    #[arg(long)]
    s_end: f64,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial fast state (comma-separated); preset default otherwise.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Initial slow state (comma-separated); preset default otherwise.
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<String>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_bin: Option<PathBuf>,
    /// Lift the dt <= eps/5 guard.
    #[arg(long)]
    allow_coarse_dt: bool,
}

#[derive(Args)]
struct EstimateArgs {
    /// Ensemble file (.csv or FSSDE1 binary).
    #[arg(long)]
    input: PathBuf,
    /// m1 | m2-linear | m2-cm | m3 | m4
    #[arg(long)]
    method: String,
    #[arg(long)]
    window: Option<usize>,
    /// Preset supplying the critical manifold (m2-cm) or the system (m4).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "const")]
    noise_shape: String,
    /// m4 scan grid start:stop:points.
    #[arg(long)]
    y_grid: Option<String>,
    /// m4 fast-time horizon.
    #[arg(long, default_value_t = 1000.0)]
    t_end: f64,
    /// m4 fast step.
    #[arg(long, default_value_t = 0.01)]
    dt_fast: f64,
    /// m4 burn-in fraction.
    #[arg(long, default_value_t = 0.2)]
    burn_in: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Variance CSV (columns y,v_1_1,...).
    #[arg(long)]
    input: PathBuf,
    /// Scaling law (repeatable): inv-sqrt, inv, inv-sqrt-rev, inv-rev, linear.
    #[arg(long = "law", required = true)]
    laws: Vec<String>,
    /// Variance column name.
    #[arg(long, default_value = "v_1_1")]
    column: String,
    #[arg(long)]
    y_min: Option<f64>,
    #[arg(long)]
    y_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Bifurcation kind.
    #[arg(long)]
    kind: String,
    /// Geometric grid of approach distances start:stop:points.
    #[arg(long, default_value = "1e-5:1e-1:20")]
    grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// Preset to describe; lists all presets when omitted.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value = "const")]
    noise_shape: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (JSON).
    #[arg(long, conflicts_with = "manifest")]
    spec: Option<PathBuf>,
    /// Re-run the experiment embedded in a manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Shorthand: build the spec from flags for a preset experiment.
    #[arg(long, conflicts_with_all = ["spec", "manifest"])]
    preset: Option<String>,
    #[arg(long, default_value = "const")]
    noise_shape: String,
    #[arg(long)]
    paths: Option<usize>,
    /// m1 | m2-linear | m2-cm | m3
    #[arg(long, default_value = "m3")]
    estimator: String,
    #[arg(long)]
    window: Option<usize>,
    /// Scaling law to fit (repeatable).
    #[arg(long = "fit")]
    fit_laws: Vec<String>,
    #[arg(long)]
    y_min: Option<f64>,
    #[arg(long)]
    y_max: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    s_end: Option<f64>,
    /// Output directory for the shorthand form.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// lyapunov | fold-expansion | laplace | moments | all
    suite: String,
}

fn parse_key_val(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let value: f64 = v.parse().map_err(|e| format!("bad value in '{s}': {e}"))?;
    Ok((k.to_string(), value))
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad number '{t}': {e}")))
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "grid must be start:stop:points, got '{s}'"
        )));
    }
    Ok((
        parts[0]
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("grid start: {e}")))?,
        parts[1]
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("grid stop: {e}")))?,
        parts[2]
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("grid points: {e}")))?,
    ))
}

// ---------------------------------------------------------------------------
// experiment spec (JSON, strictly validated)

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    system: Option<InlineSystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_shape: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    overrides: BTreeMap<String, f64>,
    sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<InitialSection>,
    estimator: EstimatorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fit: Option<FitSection>,
    outputs: OutputsSection,
}

/// Inline normal-form system: catalog kind + auxiliary parameters, constant
/// slow drift and a constant diffusion matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InlineSystem {
    kind: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    aux: BTreeMap<String, f64>,
    g: Vec<f64>,
    eps: f64,
    sigma: f64,
    /// Diffusion matrix F, row-major m×k.
    diffusion: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    dt: f64,
    s_end: f64,
    record_stride: usize,
    master_seed: u64,
    n_paths: usize,
    #[serde(default)]
    allow_coarse_dt: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatorSection {
    /// m1 | m2-linear | m2-cm | m3 | m4
    method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m4: Option<M4Section>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct M4Section {
    y_start: f64,
    y_stop: f64,
    y_points: usize,
    t_end: f64,
    dt_fast: f64,
    #[serde(default = "default_burn_in")]
    burn_in: f64,
}

fn default_burn_in() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitSection {
    laws: Vec<String>,
    #[serde(default)]
    component: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ensemble_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ensemble_bin: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variance_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fit_json: Option<PathBuf>,
    #[serde(default = "default_manifest")]
    manifest_json: PathBuf,
}

fn default_manifest() -> PathBuf {
    PathBuf::from("manifest.json")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    version: String,
    spec: ExperimentSpec,
    outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct FitRecord {
    law: String,
    a: f64,
    y_c: f64,
    rss: f64,
    converged: bool,
    iterations: u32,
}

impl From<&ScalingFit> for FitRecord {
    fn from(f: &ScalingFit) -> Self {
        FitRecord {
            law: f.law.name().to_string(),
            a: f.a,
            y_c: f.y_c,
            rss: f.rss,
            converged: f.converged,
            iterations: f.iterations,
        }
    }
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Scaling(args) => cmd_scaling(args),
        Command::Model(args) => cmd_model(args),
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(Error::InvalidArgument(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<ExitCode> {
    let kind = BifurcationKind::parse(&args.kind)?;
    let mut aux = AuxParams::default();
    if let Some(s) = args.s {
        aux.s = s;
    }
    if let Some(l1) = args.l1 {
        aux.l1 = l1;
    }
    if let Some(l2) = args.l2 {
        aux.l2 = l2;
    }
    if let Some(t) = args.theta0 {
        aux.theta0 = t;
    }
    let entry = NormalFormEntry::with_aux(kind, aux);
    let slow = if entry.slow_dim == 1 {
        let mut s = SlowFlowData::scalar(args.g);
        s.dg2_dy2 = args.dg2_dy2;
        s.j2 = args.j2;
        s
    } else {
        let mut s = SlowFlowData::planar(args.g, args.g2).with_dg2_dy2(args.dg2_dy2);
        s.j2 = args.j2;
        s
    };
    let result = normal_forms::classify(&entry, &slow)?;
    println!("{}", result.verdict);
    println!("rule: {}", result.rule);
    Ok(ExitCode::SUCCESS)
}

fn preset_from_args(
    name: &str,
    shape: &str,
    params: &[(String, f64)],
    eps: Option<f64>,
    sigma: Option<f64>,
) -> Result<ModelPreset> {
    let id = PresetId::parse(name)?;
    let shape = NoiseShape::parse(shape)?;
    let mut overrides: BTreeMap<String, f64> = params.iter().cloned().collect();
    if let Some(e) = eps {
        overrides.insert("eps".into(), e);
    }
    if let Some(s) = sigma {
        overrides.insert("sigma".into(), s);
    }
    build_preset(id, &overrides, shape)
}

fn normal_form_preset(kind: &str, g: &str, eps: f64, sigma: f64) -> Result<(FastSlowSystem, Vec<f64>, Vec<f64>)> {
    let kind = BifurcationKind::parse(kind)?;
    let entry = NormalFormEntry::new(kind);
    let g = parse_f64_list(g)?;
    let m = entry.fast_dim;
    let mut f = vec![0.0; m * m];
    for i in 0..m {
        f[i * m + i] = 1.0;
    }
    let system = models::normal_form_system(&entry, g.clone(), eps, sigma, f, m)?;
    // start on the attracting branch one unit away from the transition
    let y0: Vec<f64> = match kind {
        BifurcationKind::Fold => vec![-1.0],
        BifurcationKind::Cusp => vec![0.0, -1.0],
        _ if entry.slow_dim == 1 => vec![-0.5],
        _ => vec![-0.5, -0.5],
    };
    let x0 = normal_forms::critical_manifold_branch(&entry, &y0)?;
    Ok((system, x0, y0))
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let (system, mut x0, mut y0) = if let Some(name) = &args.preset {
        let preset = preset_from_args(name, &args.noise_shape, &args.params, args.eps, args.sigma)?;
        (preset.system, preset.x0, preset.y0)
    } else if let Some(kind) = &args.kind {
        normal_form_preset(kind, &args.g, args.eps.unwrap_or(0.01), args.sigma.unwrap_or(0.01))?
    } else {
        return Err(Error::InvalidArgument("need --preset or --kind".into()));
    };
    if let Some(x) = &args.x0 {
        x0 = parse_f64_list(x)?;
    }
    if let Some(y) = &args.y0 {
        y0 = parse_f64_list(y)?;
    }
    let mut config = SimConfig::new(args.dt, args.s_end, args.stride, args.seed, args.paths);
    config.allow_coarse_dt = args.allow_coarse_dt;
    let ens = simulate_ensemble(&system, &config, &x0, &y0)?;
    if let Some(path) = &args.out_csv {
        let mut w = BufWriter::new(File::create(path)?);
        sdeio::write_ensemble_csv(&mut w, &ens)?;
    }
    if let Some(path) = &args.out_bin {
        let mut w = BufWriter::new(File::create(path)?);
        sdeio::write_ensemble_binary(&mut w, &ens)?;
    }
    let blowups = ens.blowups.iter().filter(|b| b.is_some()).count();
    println!(
        "simulated {} paths x {} points (clamped steps: {}, blow-ups: {})",
        ens.n_paths,
        ens.grid_len(),
        ens.clamp_events.iter().sum::<u64>(),
        blowups
    );
    Ok(ExitCode::SUCCESS)
}

fn load_ensemble(path: &Path) -> Result<PathEnsemble> {
    let mut file = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 6];
    let n = file.read(&mut magic)?;
    let mut rest = Vec::new();
    file.read_to_end(&mut rest)?;
    let mut all = magic[..n].to_vec();
    all.extend(rest);
    if all.starts_with(sdeio::MAGIC) {
        sdeio::read_ensemble_binary(&mut all.as_slice())
    } else {
        sdeio::read_ensemble_csv(&mut all.as_slice())
    }
}

fn manifold_detrend(preset: &ModelPreset) -> Result<Detrend> {
    match &preset.analytics {
        ModelAnalytics::Stommel(a) => {
            let a = *a;
            Ok(Detrend::CriticalManifold(Arc::new(move |y: &[f64]| {
                vec![a.upper_branch_x(y[0]).unwrap_or(f64::NAN)]
            })))
        }
        ModelAnalytics::Buckling(_) => {
            Ok(Detrend::CriticalManifold(Arc::new(|_| vec![0.0])))
        }
        ModelAnalytics::Sis(a) => {
            let state = a.trivial_state();
            Ok(Detrend::CriticalManifold(Arc::new(move |_| state.to_vec())))
        }
        ModelAnalytics::ActivatorInhibitor(a) => {
            let a = a.clone();
            Ok(Detrend::CriticalManifold(Arc::new(move |y: &[f64]| {
                match a.equilibrium_x1(y[0]) {
                    Ok(x1) => vec![x1, a.manifold_ratio() * x1],
                    Err(_) => vec![f64::NAN, f64::NAN],
                }
            })))
        }
        ModelAnalytics::Bazykin(_) => Err(Error::InvalidArgument(
            "critical-manifold detrending is not available for this preset".into(),
        )),
    }
}

fn estimate_series(
    ens: &PathEnsemble,
    method: &str,
    window: Option<usize>,
    preset: Option<&ModelPreset>,
) -> Result<CovarianceSeries> {
    let need_window = || {
        window.ok_or_else(|| Error::InvalidArgument("this method needs --window".into()))
    };
    match method {
        "m1" => ensemble_window_average(ens, need_window()?, &Detrend::None),
        "m2-linear" => ensemble_window_average(ens, need_window()?, &Detrend::Linear),
        "m2-cm" => {
            let preset = preset.ok_or_else(|| {
                Error::InvalidArgument("m2-cm needs --preset for the manifold".into())
            })?;
            let detrend = manifold_detrend(preset)?;
            ensemble_window_average(ens, need_window()?, &detrend)
        }
        "m3" => ensemble_pointwise_moments(ens),
        other => Err(Error::InvalidArgument(format!(
            "unknown estimator '{other}' (m4 runs from a preset, not an ensemble)"
        ))),
    }
}

fn write_series_csv(path: &Path, series: &CovarianceSeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let m = series.fast_dim();
    write!(w, "y")?;
    for i in 1..=m {
        for j in i..=m {
            write!(w, ",v_{i}_{j}")?;
        }
    }
    writeln!(w)?;
    for (y, c) in series.y_grid.iter().zip(&series.cov) {
        write!(w, "{y}")?;
        for i in 0..m {
            for j in i..m {
                write!(w, ",{}", c[(i, j)])?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

type SeriesColumns = (Vec<f64>, Vec<String>, Vec<Vec<f64>>);

fn read_series_csv(path: &Path) -> Result<SeriesColumns> {
    let mut text = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty variance csv".into()))?;
    let cols: Vec<String> = header.split(',').map(str::to_string).collect();
    if cols.first().map(String::as_str) != Some("y") {
        return Err(Error::Format("variance csv must start with a y column".into()));
    }
    let mut y = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); cols.len() - 1];
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Format("ragged variance csv".into()));
        }
        y.push(
            fields[0]
                .parse()
                .map_err(|e| Error::Format(format!("bad y: {e}")))?,
        );
        for (k, f) in fields[1..].iter().enumerate() {
            values[k].push(
                f.parse()
                    .map_err(|e| Error::Format(format!("bad value: {e}")))?,
            );
        }
    }
    Ok((y, cols[1..].to_vec(), values))
}

fn cmd_estimate(args: EstimateArgs) -> Result<ExitCode> {
    let preset = match &args.preset {
        Some(name) => Some(preset_from_args(name, &args.noise_shape, &[], None, None)?),
        None => None,
    };
    let series = if args.method == "m4" {
        let preset = preset.as_ref().ok_or_else(|| {
            Error::InvalidArgument("m4 needs --preset (it simulates the fast subsystem)".into())
        })?;
        let grid_spec = args
            .y_grid
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("m4 needs --y-grid start:stop:points".into()))?;
        let (start, stop, points) = parse_grid(grid_spec)?;
        let ys = stats::linspace(start, stop, points);
        frozen_variance_scan(&preset.system, &ys, args.t_end, args.dt_fast, args.burn_in, args.seed)?
    } else {
        let ens = load_ensemble(&args.input)?;
        estimate_series(&ens, &args.method, args.window, preset.as_ref())?
    };
    write_series_csv(&args.out, &series)?;
    println!(
        "estimated {} points ({}, {} paths)",
        series.y_grid.len(),
        series.source.name(),
        series.n_paths_used
    );
    Ok(ExitCode::SUCCESS)
}

fn fit_to_json(fits: &[ScalingFit]) -> serde_json::Value {
    let records: Vec<FitRecord> = fits.iter().map(FitRecord::from).collect();
    serde_json::json!({ "fits": records })
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode> {
    let laws: Vec<ScalingLaw> = args
        .laws
        .iter()
        .map(|l| ScalingLaw::parse(l))
        .collect::<Result<_>>()?;
    let (y, cols, values) = read_series_csv(&args.input)?;
    let idx = cols
        .iter()
        .position(|c| *c == args.column)
        .ok_or_else(|| Error::InvalidArgument(format!("no column '{}'", args.column)))?;
    let mut pairs: Vec<(f64, f64)> = y
        .iter()
        .zip(&values[idx])
        .filter(|(yy, _)| {
            args.y_min.is_none_or(|lo| **yy >= lo) && args.y_max.is_none_or(|hi| **yy <= hi)
        })
        .map(|(a, b)| (*a, *b))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ys: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let fits = compare_laws(&ys, &vs, &laws)?;
    let json = fit_to_json(&fits);
    let text = serde_json::to_string_pretty(&json).expect("serializable");
    match &args.out {
        Some(path) => {
            std::fs::write(path, text)?;
        }
        None => println!("{text}"),
    }
    for f in &fits {
        println!(
            "{:>12}: A={:.6e} y_c={:.6} rss={:.3e} converged={} iters={}",
            f.law.name(),
            f.a,
            f.y_c,
            f.rss,
            f.converged,
            f.iterations
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_scaling(args: ScalingArgs) -> Result<ExitCode> {
    let kind = BifurcationKind::parse(&args.kind)?;
    let entry = NormalFormEntry::new(kind);
    let (start, stop, points) = parse_grid(&args.grid)?;
    if start <= 0.0 || stop <= 0.0 {
        return Err(Error::InvalidArgument("grid distances must be positive".into()));
    }
    let noise = NoiseMatrix::constant(nalgebra::DMatrix::identity(
        entry.fast_dim,
        entry.fast_dim,
    ))?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "y,i,j,closed_form,lyapunov,rel_err")?;
    for t in stats::geomspace(start, stop, points) {
        let y = match kind {
            BifurcationKind::Fold => vec![t],
            BifurcationKind::Cusp => vec![0.0, -t],
            _ if entry.slow_dim == 1 => vec![-t],
            _ => vec![-t, -t],
        };
        let closed = covariance_closed_form(&entry, &y, &noise)?.matrix;
        let a0 = if kind == BifurcationKind::Fold {
            nalgebra::DMatrix::from_element(1, 1, -2.0 * t.sqrt())
        } else {
            normal_forms::linearization_a0(&entry, &y)?
        };
        let oracle = solve_lyapunov(&a0, &noise.eval(&y)?)?;
        let coord = y[y.len() - 1].min(y[0]);
        for i in 0..entry.fast_dim {
            for j in i..entry.fast_dim {
                let c = closed[(i, j)];
                let l = oracle[(i, j)];
                let denom = l.abs().max(1e-300);
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    coord,
                    i + 1,
                    j + 1,
                    c,
                    l,
                    (c - l).abs() / denom
                )?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn analytics_json(preset: &ModelPreset) -> serde_json::Value {
    let base = serde_json::json!({
        "id": preset.id.name(),
        "params": preset.params,
        "x0": preset.x0,
        "y0": preset.y0,
    });
    let mut obj = base.as_object().unwrap().clone();
    match &preset.analytics {
        ModelAnalytics::Stommel(a) => {
            obj.insert(
                "folds".into(),
                serde_json::json!({
                    "lower_x": [a.fold_lower_x.0, a.fold_lower_x.1],
                    "upper_x": [a.fold_upper_x.0, a.fold_upper_x.1],
                }),
            );
        }
        ModelAnalytics::Sis(a) => {
            obj.insert("threshold".into(), serde_json::json!(a.threshold));
        }
        ModelAnalytics::ActivatorInhibitor(a) => {
            obj.insert("hopf_points".into(), serde_json::json!(a.hopf_points));
        }
        ModelAnalytics::Bazykin(a) => {
            obj.insert(
                "bt_point".into(),
                serde_json::json!([a.bt_point.0, a.bt_point.1]),
            );
            obj.insert(
                "bt_state".into(),
                serde_json::json!([a.bt_state.0, a.bt_state.1]),
            );
            let samples: Vec<serde_json::Value> = (0..=20)
                .map(|i| {
                    let y1 = 0.3 + (a.bt_point.0 - 0.3) * i as f64 / 20.0;
                    serde_json::json!({
                        "y1": y1,
                        "hopf_y2": a.c_h_upper_root(y1).ok(),
                        "fold_y2": a.c_lp_upper_root(y1).ok(),
                        "path_y2": a.path_y2(y1),
                    })
                })
                .collect();
            obj.insert("curves".into(), serde_json::json!(samples));
        }
        ModelAnalytics::Buckling(a) => {
            obj.insert("pitchfork_y".into(), serde_json::json!(a.pitchfork_y));
            obj.insert(
                "shape_crossing_y".into(),
                serde_json::json!(a.shape_crossing_y),
            );
            obj.insert("noise_shape".into(), serde_json::json!(a.shape.name()));
        }
    }
    serde_json::Value::Object(obj)
}

fn cmd_model(args: ModelArgs) -> Result<ExitCode> {
    match &args.preset {
        None => {
            for id in PresetId::ALL {
                println!("{}", id.name());
            }
            Ok(ExitCode::SUCCESS)
        }
        Some(name) => {
            let preset = preset_from_args(name, &args.noise_shape, &[], None, None)?;
            let json = analytics_json(&preset);
            let text = serde_json::to_string_pretty(&json).expect("serializable");
            match &args.out {
                Some(p) => std::fs::write(p, text)?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

type SpecSystem = (FastSlowSystem, Vec<f64>, Vec<f64>, Option<ModelPreset>);

fn build_spec_system(spec: &ExperimentSpec) -> Result<SpecSystem> {
    match (&spec.preset, &spec.system) {
        (Some(name), None) => {
            let shape = NoiseShape::parse(spec.noise_shape.as_deref().unwrap_or("const"))?;
            let preset = build_preset(PresetId::parse(name)?, &spec.overrides, shape)?;
            Ok((
                preset.system.clone(),
                preset.x0.clone(),
                preset.y0.clone(),
                Some(preset),
            ))
        }
        (None, Some(inline)) => {
            let kind = BifurcationKind::parse(&inline.kind)?;
            let mut aux = AuxParams::default();
            for (k, v) in &inline.aux {
                match k.as_str() {
                    "s" => aux.s = *v,
                    "l1" => aux.l1 = *v,
                    "l2" => aux.l2 = *v,
                    "theta0" => aux.theta0 = *v,
                    "omega" => aux.omega = *v,
                    "omega1" => aux.omega1 = *v,
                    "omega2" => aux.omega2 = *v,
                    "k" => aux.k = *v,
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "unknown aux parameter '{other}'"
                        )))
                    }
                }
            }
            let entry = NormalFormEntry::with_aux(kind, aux);
            let m = entry.fast_dim;
            let k_noise = inline
                .diffusion
                .first()
                .map(Vec::len)
                .unwrap_or(0);
            if inline.diffusion.len() != m || k_noise == 0 {
                return Err(Error::InvalidArgument(format!(
                    "diffusion must be {m} rows of equal length"
                )));
            }
            let mut flat = Vec::with_capacity(m * k_noise);
            for row in &inline.diffusion {
                if row.len() != k_noise {
                    return Err(Error::InvalidArgument("ragged diffusion matrix".into()));
                }
                flat.extend_from_slice(row);
            }
            let system = models::normal_form_system(
                &entry,
                inline.g.clone(),
                inline.eps,
                inline.sigma,
                flat,
                k_noise,
            )?;
            let y0: Vec<f64> = match kind {
                BifurcationKind::Fold => vec![-1.0],
                BifurcationKind::Cusp => vec![0.0, -1.0],
                _ if entry.slow_dim == 1 => vec![-0.5],
                _ => vec![-0.5, -0.5],
            };
            let x0 = normal_forms::critical_manifold_branch(&entry, &y0)?;
            Ok((system, x0, y0, None))
        }
        _ => Err(Error::InvalidArgument(
            "spec needs exactly one of 'preset' or 'system'".into(),
        )),
    }
}

/// Default step, horizon and recording stride per preset, matching each
/// experiment's fast-scale requirements.
fn default_sim(id: PresetId) -> (f64, f64, usize) {
    match id {
        PresetId::StommelCessi => (2e-4, 0.55, 2),
        PresetId::SisAdaptive => (1e-5, 0.065, 2),
        PresetId::ActivatorInhibitor => (2e-6, 0.07, 10),
        PresetId::Bazykin => (6e-6, 0.145, 8),
        PresetId::EulerBuckling => (5e-5, 1.25, 4),
    }
}

/// Default fit window per preset: the approach range used by the reference
/// experiments, clear of the deterministic start and the transition region.
fn default_fit_window(id: PresetId) -> (f64, f64) {
    match id {
        PresetId::StommelCessi => (0.96, 1.4),
        PresetId::SisAdaptive => (0.04, 0.054),
        PresetId::ActivatorInhibitor => (0.025, 0.07),
        PresetId::Bazykin => (0.31, 0.44),
        PresetId::EulerBuckling => (2.05, 3.05),
    }
}

fn shorthand_spec(args: &RunArgs, preset: &str) -> Result<ExperimentSpec> {
    let id = PresetId::parse(preset)?;
    let (dt, s_end, stride) = default_sim(id);
    let dir = &args.out_dir;
    let stem = format!("{}-{}", id.name(), args.seed);
    Ok(ExperimentSpec {
        preset: Some(id.name().to_string()),
        system: None,
        noise_shape: Some(args.noise_shape.clone()),
        overrides: BTreeMap::new(),
        sim: SimSection {
            dt: args.dt.unwrap_or(dt),
            s_end: args.s_end.unwrap_or(s_end),
            record_stride: stride,
            master_seed: args.seed,
            n_paths: args.paths.unwrap_or(100),
            allow_coarse_dt: false,
        },
        initial: None,
        estimator: EstimatorSection {
            method: args.estimator.clone(),
            window: args.window.or(Some(200)),
            m4: None,
        },
        fit: (!args.fit_laws.is_empty()).then(|| {
            let (lo, hi) = default_fit_window(id);
            FitSection {
                laws: args.fit_laws.clone(),
                component: 0,
                y_min: Some(args.y_min.unwrap_or(lo)),
                y_max: Some(args.y_max.unwrap_or(hi)),
            }
        }),
        outputs: OutputsSection {
            ensemble_csv: None,
            ensemble_bin: Some(dir.join(format!("{stem}-ensemble.bin"))),
            variance_csv: Some(dir.join(format!("{stem}-variance.csv"))),
            fit_json: (!args.fit_laws.is_empty()).then(|| dir.join(format!("{stem}-fit.json"))),
            manifest_json: dir.join(format!("{stem}-manifest.json")),
        },
    })
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let spec: ExperimentSpec = match (&args.spec, &args.manifest, &args.preset) {
        (Some(path), None, None) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::InvalidArgument(format!("spec {}: {e}", path.display())))?
        }
        (None, Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            let manifest: Manifest = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidArgument(format!("manifest {}: {e}", path.display())))?;
            manifest.spec
        }
        (None, None, Some(preset)) => shorthand_spec(&args, preset)?,
        _ => {
            return Err(Error::InvalidArgument(
                "run needs exactly one of --spec, --manifest or --preset".into(),
            ))
        }
    };
    run_experiment(&spec)
}

fn run_experiment(spec: &ExperimentSpec) -> Result<ExitCode> {
    let (system, mut x0, mut y0, preset) = build_spec_system(spec)?;
    if let Some(init) = &spec.initial {
        x0 = init.x.clone();
        y0 = init.y.clone();
    }
    let mut config = SimConfig::new(
        spec.sim.dt,
        spec.sim.s_end,
        spec.sim.record_stride,
        spec.sim.master_seed,
        spec.sim.n_paths,
    );
    config.allow_coarse_dt = spec.sim.allow_coarse_dt;

    let mut written: Vec<PathBuf> = Vec::new();
    let ens = simulate_ensemble(&system, &config, &x0, &y0)?;
    if let Some(path) = &spec.outputs.ensemble_csv {
        let mut w = BufWriter::new(File::create(path)?);
        sdeio::write_ensemble_csv(&mut w, &ens)?;
        written.push(path.clone());
    }
    if let Some(path) = &spec.outputs.ensemble_bin {
        let mut w = BufWriter::new(File::create(path)?);
        sdeio::write_ensemble_binary(&mut w, &ens)?;
        written.push(path.clone());
    }

    let series = match spec.estimator.method.as_str() {
        "m4" => {
            let m4 = spec.estimator.m4.as_ref().ok_or_else(|| {
                Error::InvalidArgument("estimator.m4 section required for method m4".into())
            })?;
            let ys = stats::linspace(m4.y_start, m4.y_stop, m4.y_points);
            frozen_variance_scan(
                &system,
                &ys,
                m4.t_end,
                m4.dt_fast,
                m4.burn_in,
                spec.sim.master_seed,
            )?
        }
        method => estimate_series(&ens, method, spec.estimator.window, preset.as_ref())?,
    };
    if let Some(path) = &spec.outputs.variance_csv {
        write_series_csv(path, &series)?;
        written.push(path.clone());
    }

    if let Some(fit) = &spec.fit {
        let lo = fit.y_min.unwrap_or(f64::NEG_INFINITY);
        let hi = fit.y_max.unwrap_or(f64::INFINITY);
        let restricted = series.restrict(lo, hi);
        let mut ys = restricted.y_grid.clone();
        let mut vs = restricted.variance_component(fit.component);
        if ys.first() > ys.last() {
            ys.reverse();
            vs.reverse();
        }
        let laws: Vec<ScalingLaw> = fit
            .laws
            .iter()
            .map(|l| ScalingLaw::parse(l))
            .collect::<Result<_>>()?;
        let fits = compare_laws(&ys, &vs, &laws)?;
        let json = fit_to_json(&fits);
        if let Some(path) = &spec.outputs.fit_json {
            std::fs::write(path, serde_json::to_string_pretty(&json).expect("serializable"))?;
            written.push(path.clone());
        }
        for f in &fits {
            println!(
                "fit {:>12}: A={:.6e} y_c={:.6} rss={:.3e} converged={}",
                f.law.name(),
                f.a,
                f.y_c,
                f.rss,
                f.converged
            );
        }
    }

    let manifest_path = spec.outputs.manifest_json.clone();
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        outputs: written.clone(),
    };
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("serializable"),
    )?;
    println!("manifest: {}", manifest_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let suites: Vec<Suite> = if args.suite.eq_ignore_ascii_case("all") {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(&args.suite)?]
    };
    let mut all_ok = true;
    for suite in suites {
        println!("suite {}", suite.name());
        let results = verify::run_suite(suite);
        for r in &results {
            println!(
                "  [{}] {}: {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.detail
            );
        }
        all_ok &= verify::all_passed(&results);
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
