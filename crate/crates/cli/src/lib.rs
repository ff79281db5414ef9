//! Experiment runners behind the `risgain` binary.
//!
//! Each subcommand resolves a flat TOML config on top of a named preset,
//! runs its sweep (points in parallel, rows in sweep order) and returns the
//! CSV text, including a `#` metadata block.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use risgain::snr::{from_db, to_db};
use risgain::{
    average_snr_analytic, build_covariance, correlation_approx, correlation_sequence, dft_phase_profile,
    family_bound, instantaneous_benchmark, lambda_max, optimize_phases, simulate_snr, ArrayGeometry,
    CorrelationSource, GainMatrix, OptimizerOptions, PasModel, SnrConfig, RNG_NAME,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] risgain::Error),
}

impl CliError {
    /// 3 for numerical failures, 2 for everything the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Corr,
    GainVsN,
    GainVsSpread,
    SnrVsN,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Corr => "corr",
            Command::GainVsN => "gain-vs-n",
            Command::GainVsSpread => "gain-vs-spread",
            Command::SnrVsN => "snr-vs-n",
        }
    }

    fn default_preset(self) -> Preset {
        match self {
            Command::Corr | Command::GainVsN => Preset::Fig1,
            Command::GainVsSpread => Preset::Fig2,
            Command::SnrVsN => Preset::Fig3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig1" => Ok(Preset::Fig1),
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            other => Err(format!("unknown preset `{other}` (expected fig1, fig2 or fig3)")),
        }
    }
}

/// Keys accepted in a config file. Every key is optional; unset keys keep
/// the preset value. Angles are radians unless `degrees = true`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// `family:parameter` entries, e.g. `"gaussian:3"`, `"exponential:0.5"`.
    pub curves: Option<Vec<String>>,
    /// Families swept by `gain-vs-spread`.
    pub families: Option<Vec<String>>,
    pub n_r: Option<Vec<usize>>,
    pub spreads: Option<Vec<f64>>,
    /// Array size for `gain-vs-spread`.
    pub n_elements: Option<usize>,
    /// Number of lags written by `corr`.
    pub lags: Option<usize>,
    pub mean_angle: Option<f64>,
    pub departure_angle: Option<f64>,
    pub spacing_ratio: Option<f64>,
    pub n_bs_antennas: Option<usize>,
    pub link_budget_db: Option<f64>,
    pub samples: Option<usize>,
    pub benchmark_samples: Option<usize>,
    /// `"exact"` or `"approx"`.
    pub correlation: Option<String>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub degrees: Option<bool>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Laplacian,
    Exponential,
}

impl Family {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "gaussian" => Ok(Family::Gaussian),
            "laplacian" => Ok(Family::Laplacian),
            "exponential" => Ok(Family::Exponential),
            other => Err(config_err(format!(
                "unknown family `{other}` (expected gaussian, laplacian or exponential)"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Laplacian => "laplacian",
            Family::Exponential => "exponential",
        }
    }
}

/// One PAS curve; `param` is the spread in radians, or κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Curve {
    pub family: Family,
    pub param: f64,
}

impl Curve {
    fn parse(s: &str, degrees: bool) -> Result<Self, CliError> {
        let (fam, val) = s
            .split_once(':')
            .ok_or_else(|| config_err(format!("curve `{s}` must look like `family:value`")))?;
        let family = Family::parse(fam)?;
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| config_err(format!("curve `{s}`: `{val}` is not a number")))?;
        let param = match family {
            Family::Exponential => v,
            _ if degrees => v.to_radians(),
            _ => v,
        };
        Ok(Curve { family, param })
    }

    pub fn label(&self) -> String {
        match self.family {
            Family::Exponential => format!("exponential:{}", fmt_short(self.param)),
            f => format!("{}:{}deg", f.name(), fmt_short(self.param.to_degrees())),
        }
    }

    pub fn model(&self, mean_angle: f64) -> Result<PasModel, CliError> {
        Ok(match self.family {
            Family::Gaussian => PasModel::truncated_gaussian(mean_angle, self.param)?,
            Family::Laplacian => PasModel::truncated_laplacian(mean_angle, self.param)?,
            Family::Exponential => PasModel::exponential_with_mean(self.param, mean_angle)?,
        })
    }
}

// Up to six decimals, trailing zeros dropped.
fn fmt_short(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Exact,
    Approx,
}

impl From<Source> for CorrelationSource {
    fn from(s: Source) -> Self {
        match s {
            Source::Exact => CorrelationSource::Exact,
            Source::Approx => CorrelationSource::Approx,
        }
    }
}

/// Fully resolved experiment; angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub command: &'static str,
    pub curves: Vec<Curve>,
    pub families: Vec<Family>,
    pub n_r: Vec<usize>,
    pub spreads: Vec<f64>,
    pub n_elements: usize,
    pub lags: usize,
    pub mean_angle: f64,
    pub departure_angle: f64,
    pub spacing_ratio: f64,
    pub n_bs_antennas: usize,
    pub link_budget_db: f64,
    pub samples: usize,
    pub benchmark_samples: usize,
    pub correlation: Source,
    pub restarts: usize,
    #[serde(skip)]
    pub seed: u64,
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

fn curve(family: Family, spread_deg: f64) -> Curve {
    Curve {
        family,
        param: deg(spread_deg),
    }
}

impl Experiment {
    /// Preset values for the three reference experiments.
    pub fn preset(command: Command, preset: Preset) -> Self {
        let fig1_curves = vec![
            curve(Family::Gaussian, 3.0),
            curve(Family::Gaussian, 6.0),
            curve(Family::Gaussian, 17.0),
            curve(Family::Laplacian, 6.0),
            curve(Family::Laplacian, 23.0),
        ];
        let fig3_curves = vec![curve(Family::Gaussian, 3.0), curve(Family::Laplacian, 23.0)];
        let mut e = Experiment {
            command: command.name(),
            curves: fig1_curves,
            families: vec![Family::Gaussian, Family::Laplacian],
            n_r: vec![1, 2, 4, 8, 16, 32, 64, 100, 128, 200],
            spreads: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 40.0, 50.0, 60.0]
                .into_iter()
                .map(deg)
                .collect(),
            n_elements: 100,
            lags: 32,
            mean_angle: std::f64::consts::FRAC_PI_4,
            departure_angle: deg(80.0),
            spacing_ratio: 0.5,
            n_bs_antennas: 10,
            link_budget_db: -10.0,
            samples: 10_000,
            benchmark_samples: 2_000,
            correlation: Source::Approx,
            restarts: 5,
            seed: 0,
        };
        match preset {
            Preset::Fig1 => {}
            Preset::Fig2 => e.mean_angle = std::f64::consts::FRAC_PI_2,
            Preset::Fig3 => {
                e.curves = fig3_curves;
                e.correlation = Source::Exact;
            }
        }
        if command == Command::Corr {
            e.curves.truncate(1);
        }
        e
    }

    /// Applies `raw` over the preset and checks every domain.
    pub fn resolve(
        command: Command,
        preset: Option<Preset>,
        raw: &RawConfig,
        seed: Option<u64>,
        degrees_flag: bool,
    ) -> Result<Self, CliError> {
        let mut e = Self::preset(command, preset.unwrap_or(command.default_preset()));
        let degrees = degrees_flag || raw.degrees.unwrap_or(false);
        let angle = |x: f64| if degrees { x.to_radians() } else { x };

        if let Some(c) = &raw.curves {
            e.curves = c.iter().map(|s| Curve::parse(s, degrees)).collect::<Result<_, _>>()?;
        }
        if let Some(f) = &raw.families {
            e.families = f.iter().map(|s| Family::parse(s)).collect::<Result<_, _>>()?;
        }
        if let Some(n) = &raw.n_r {
            e.n_r = n.clone();
        }
        if let Some(s) = &raw.spreads {
            e.spreads = s.iter().map(|&x| angle(x)).collect();
        }
        macro_rules! set {
            ($($k:ident),*) => { $( if let Some(v) = raw.$k { e.$k = v; } )* };
        }
        set!(n_elements, lags, spacing_ratio, n_bs_antennas, link_budget_db, samples, benchmark_samples, restarts);
        if let Some(v) = raw.mean_angle {
            e.mean_angle = angle(v);
        }
        if let Some(v) = raw.departure_angle {
            e.departure_angle = angle(v);
        }
        if let Some(c) = &raw.correlation {
            e.correlation = match c.as_str() {
                "exact" => Source::Exact,
                "approx" => Source::Approx,
                other => return Err(config_err(format!("correlation must be `exact` or `approx`, got `{other}`"))),
            };
        }
        e.seed = seed.or(raw.seed).unwrap_or(0);
        e.validate(command)?;
        Ok(e)
    }

    fn validate(&self, command: Command) -> Result<(), CliError> {
        strictly_increasing("n_r", &self.n_r)?;
        strictly_increasing("spreads", &self.spreads)?;
        if self.n_r[0] == 0 {
            return Err(config_err("n_r entries must be positive"));
        }
        if self.curves.is_empty() {
            return Err(config_err("curves must not be empty"));
        }
        if self.families.is_empty() || self.families.contains(&Family::Exponential) {
            return Err(config_err("families must be a nonempty list of gaussian/laplacian"));
        }
        if command == Command::Corr && self.curves.len() != 1 {
            return Err(config_err("corr takes exactly one curve"));
        }
        for (k, v) in [("n_elements", self.n_elements), ("lags", self.lags)] {
            if v == 0 {
                return Err(config_err(format!("{k} must be positive")));
            }
        }
        if !self.link_budget_db.is_finite() {
            return Err(config_err("link_budget_db must be finite"));
        }
        if command == Command::SnrVsN && self.samples < 2 {
            return Err(config_err("samples must be at least 2"));
        }
        if matches!(command, Command::GainVsN | Command::SnrVsN) && self.benchmark_samples < 1000 {
            return Err(config_err("benchmark_samples must be at least 1000"));
        }
        // Model-level domains (spread, κ, angles, spacing) surface here as
        // config errors rather than mid-sweep.
        ArrayGeometry::with_spacing_ratio(1, self.spacing_ratio, self.departure_angle)?;
        for c in &self.curves {
            c.model(self.mean_angle)?;
        }
        for f in &self.families {
            for &s in &self.spreads {
                Curve { family: *f, param: s }.model(self.mean_angle)?;
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical TOML rendering (seed excluded).
    pub fn config_hash(&self) -> String {
        let canonical = toml::to_string(self).expect("experiment serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn geometry(&self, n: usize) -> Result<ArrayGeometry, CliError> {
        Ok(ArrayGeometry::with_spacing_ratio(n, self.spacing_ratio, self.departure_angle)?)
    }

    fn metadata(&self) -> String {
        format!(
            "# tool: risgain {TOOL_VERSION}\n# command: {}\n# config_hash: sha256:{}\n# seed: {}\n# rng: {RNG_NAME}\n",
            self.command,
            self.config_hash(),
            self.seed
        )
    }

    fn optimizer(&self, point: u64) -> OptimizerOptions {
        OptimizerOptions {
            restarts: self.restarts,
            seed: point_seed(self.seed, point),
            ..OptimizerOptions::default()
        }
    }
}

fn strictly_increasing<T: PartialOrd + Copy>(name: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(config_err(format!("{name} must not be empty")));
    }
    if v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config_err(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

// Distinct seed per sweep point.
fn point_seed(seed: u64, point: u64) -> u64 {
    seed ^ (point + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Writes `n,re,im,abs` for the exact sequence, then the approximate one.
pub fn run_corr(e: &Experiment) -> Result<String, CliError> {
    let c = e.curves[0];
    let model = c.model(e.mean_angle)?;
    let geom = e.geometry(e.lags)?;
    let exact = correlation_sequence(&model, &geom, e.lags, CorrelationSource::Exact)?;
    let approx = correlation_approx(&model, &geom, e.lags)?;
    let mut out = e.metadata();
    let _ = writeln!(out, "# curve: {}", c.label());
    out.push_str("n,re,im,abs,re_approx,im_approx,abs_approx\n");
    for (n, (x, a)) in exact.coeffs().iter().zip(approx.coeffs()).enumerate() {
        let _ = writeln!(out, "{n},{},{},{},{},{},{}", x.re, x.im, x.norm(), a.re, a.im, a.norm());
    }
    Ok(out)
}

struct GainRow {
    zeta: f64,
    dft: f64,
    lmax: f64,
    bound: f64,
    bench: f64,
    bench_se: f64,
}

/// Per (curve, N_r): optimized and DFT gains, λ_max, family bound and the
/// instantaneous benchmark.
pub fn run_gain_vs_n(e: &Experiment) -> Result<String, CliError> {
    let points: Vec<(usize, Curve, usize)> = e
        .curves
        .iter()
        .flat_map(|c| e.n_r.iter().map(move |&n| (*c, n)))
        .enumerate()
        .map(|(i, (c, n))| (i, c, n))
        .collect();
    let rows: Vec<Result<GainRow, CliError>> = points
        .par_iter()
        .map(|&(i, c, n)| {
            let model = c.model(e.mean_angle)?;
            let geom = e.geometry(n)?;
            let seq = correlation_sequence(&model, &geom, n, e.correlation.into())?;
            let cov = build_covariance(&seq, n)?;
            let m = GainMatrix::new(&cov, &geom)?;
            let opt = optimize_phases(&m, &e.optimizer(i as u64))?;
            let dft = dft_phase_profile(&m)?;
            let bench = instantaneous_benchmark(&cov, &geom, e.benchmark_samples, point_seed(e.seed, i as u64))?;
            Ok(GainRow {
                zeta: opt.gain(),
                dft: dft.gain(),
                lmax: lambda_max(&cov).value,
                bound: family_bound(&model, &geom)?,
                bench: bench.mean,
                bench_se: bench.std_error,
            })
        })
        .collect();
    let mut out = e.metadata();
    out.push_str(
        "curve,N_r,zeta,zeta_db,zeta_dft,zeta_dft_db,lambda_max,lambda_max_db,bound,bound_db,benchmark,benchmark_db,benchmark_std_err\n",
    );
    for ((_, c, n), r) in points.iter().zip(rows) {
        let r = r?;
        let _ = writeln!(
            out,
            "{},{n},{},{},{},{},{},{},{},{},{},{},{}",
            c.label(),
            r.zeta,
            to_db(r.zeta),
            r.dft,
            to_db(r.dft),
            r.lmax,
            to_db(r.lmax),
            r.bound,
            to_db(r.bound),
            r.bench,
            to_db(r.bench),
            r.bench_se
        );
    }
    Ok(out)
}

/// Per (family, σ_θ) at fixed `n_elements`: optimized gain, λ_max and bound.
pub fn run_gain_vs_spread(e: &Experiment) -> Result<String, CliError> {
    let n = e.n_elements;
    let points: Vec<(usize, Curve)> = e
        .families
        .iter()
        .flat_map(|&f| e.spreads.iter().map(move |&s| Curve { family: f, param: s }))
        .enumerate()
        .collect();
    let rows: Vec<Result<(f64, f64, f64), CliError>> = points
        .par_iter()
        .map(|&(i, c)| {
            let model = c.model(e.mean_angle)?;
            let geom = e.geometry(n)?;
            let seq = correlation_sequence(&model, &geom, n, e.correlation.into())?;
            let cov = build_covariance(&seq, n)?;
            let m = GainMatrix::new(&cov, &geom)?;
            let opt = optimize_phases(&m, &e.optimizer(i as u64))?;
            Ok((opt.gain(), lambda_max(&cov).value, family_bound(&model, &geom)?))
        })
        .collect();
    let mut out = e.metadata();
    let _ = writeln!(out, "# N_r: {n}");
    out.push_str("family,sigma_rad,sigma_deg,zeta,zeta_db,lambda_max,lambda_max_db,bound,bound_db\n");
    for ((_, c), r) in points.iter().zip(rows) {
        let (z, l, b) = r?;
        let _ = writeln!(
            out,
            "{},{},{},{z},{},{l},{},{b},{}",
            c.family.name(),
            c.param,
            fmt_short(c.param.to_degrees()),
            to_db(z),
            to_db(l),
            to_db(b)
        );
    }
    Ok(out)
}

struct SnrRow {
    method: &'static str,
    analytic: f64,
    mc: f64,
    se: f64,
    cv: f64,
}

fn se_db(mean: f64, se: f64) -> f64 {
    10.0 / std::f64::consts::LN_10 * se / mean
}

/// Per (curve, N_r): analytic and Monte Carlo SNR for the optimized and DFT
/// profiles, plus the instantaneous benchmark.
pub fn run_snr_vs_n(e: &Experiment) -> Result<String, CliError> {
    let points: Vec<(usize, Curve, usize)> = e
        .curves
        .iter()
        .flat_map(|c| e.n_r.iter().map(move |&n| (*c, n)))
        .enumerate()
        .map(|(i, (c, n))| (i, c, n))
        .collect();
    let lb = from_db(e.link_budget_db);
    let rows: Vec<Result<Vec<SnrRow>, CliError>> = points
        .par_iter()
        .map(|&(i, c, n)| {
            let model = c.model(e.mean_angle)?;
            let geom = e.geometry(n)?;
            let seq = correlation_sequence(&model, &geom, n, e.correlation.into())?;
            let cov = build_covariance(&seq, n)?;
            let m = GainMatrix::new(&cov, &geom)?;
            let seed = point_seed(e.seed, i as u64);
            let cfg = SnrConfig::new(e.n_bs_antennas, lb, geom, model, seed, e.samples)?;
            let mut rows = Vec::with_capacity(3);
            for p in [optimize_phases(&m, &e.optimizer(i as u64))?, dft_phase_profile(&m)?] {
                let sim = simulate_snr(&cfg, &cov, &p)?;
                rows.push(SnrRow {
                    method: p.method().name(),
                    analytic: average_snr_analytic(&cfg, &p)?,
                    mc: sim.mean(),
                    se: sim.std_error(),
                    cv: sim.cv,
                });
            }
            let bench = instantaneous_benchmark(&cov, &geom, e.benchmark_samples, seed)?;
            let scale = lb * e.n_bs_antennas as f64 * n as f64;
            rows.push(SnrRow {
                method: "instantaneous",
                analytic: f64::NAN,
                mc: scale * bench.mean,
                se: scale * bench.std_error,
                cv: bench.std_dev / bench.mean,
            });
            Ok(rows)
        })
        .collect();
    let mut out = e.metadata();
    out.push_str("curve,N_r,method,snr_analytic,snr_analytic_db,snr_mc_db,std_err_db,cv\n");
    for ((_, c, n), r) in points.iter().zip(rows) {
        for row in r? {
            let (a, a_db) = if row.analytic.is_nan() {
                (String::new(), String::new())
            } else {
                (row.analytic.to_string(), to_db(row.analytic).to_string())
            };
            let _ = writeln!(
                out,
                "{},{n},{},{a},{a_db},{},{},{}",
                c.label(),
                row.method,
                to_db(row.mc),
                se_db(row.mc, row.se),
                row.cv
            );
        }
    }
    Ok(out)
}

pub fn run(command: Command, e: &Experiment) -> Result<String, CliError> {
    match command {
        Command::Corr => run_corr(e),
        Command::GainVsN => run_gain_vs_n(e),
        Command::GainVsSpread => run_gain_vs_spread(e),
        Command::SnrVsN => run_snr_vs_n(e),
    }
}
