//! Hermitian-Toeplitz covariance of the RIS elements, its dominant
//! eigenpair, the asymptotic Fourier eigenvectors, and the closed-form
//! saturation bounds on the beamforming gain.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::correlation::{ArrayGeometry, CorrelationSequence, Provenance};
use crate::error::{Error, Result};
use crate::pas::{PasFamily, PasModel};

/// Eigenvalues between this and zero are clamped to zero; anything lower
/// rejects the sequence.
pub const PSD_TOLERANCE: f64 = 1e-8;

const POWER_REL_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 100_000;
const FULL_DECOMPOSITION_LIMIT: usize = 512;
const POWER_STALL_ITERS: f64 = 2000.0;

/// `C_r` with first row `(c_0, c_1, …)`, i.e. entry `(k, ℓ) = c_{ℓ-k}`, together
/// with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    matrix: DMatrix<Complex64>,
    /// Ascending, clamped to be nonnegative.
    eigenvalues: Vec<f64>,
    /// Columns match `eigenvalues`.
    eigenvectors: DMatrix<Complex64>,
    raw_lambda_min: f64,
    provenance: Provenance,
}

/// Builds the `n × n` covariance from the first `n` coefficients.
pub fn build_covariance(seq: &CorrelationSequence, n: usize) -> Result<CovarianceMatrix> {
    if n == 0 {
        return Err(Error::domain("covariance dimension must be positive"));
    }
    if seq.len() < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: seq.len(),
        });
    }
    let matrix = DMatrix::from_fn(n, n, |k, l| seq.at(l as isize - k as isize));
    let (values, vectors) = hermitian_eigen(&matrix);
    let raw_lambda_min = values[0];
    if raw_lambda_min < -PSD_TOLERANCE {
        return Err(Error::InvalidCorrelation {
            lambda_min: raw_lambda_min,
        });
    }
    Ok(CovarianceMatrix {
        matrix,
        eigenvalues: values.into_iter().map(|v| v.max(0.0)).collect(),
        eigenvectors: vectors,
        raw_lambda_min,
        provenance: seq.provenance(),
    })
}

/// Full Hermitian eigendecomposition, eigenvalues ascending.
pub fn hermitian_eigen(matrix: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = matrix.nrows();
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        self.matrix[(k, l)]
    }

    /// Clamped eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// Smallest eigenvalue before clamping.
    pub fn raw_lambda_min(&self) -> f64 {
        self.raw_lambda_min
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `f^H C f`.
    pub fn rayleigh_quotient(&self, f: &[Complex64]) -> f64 {
        let x = DVector::from_column_slice(f);
        let y = &self.matrix * &x;
        x.dotc(&y).re / x.norm_squared()
    }
}

/// How [`lambda_max`] obtained its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    PowerIteration { iterations: usize },
    FullDecomposition,
}

#[derive(Debug, Clone)]
pub struct DominantEigen {
    pub value: f64,
    /// Unit-norm eigenvector.
    pub eigvec: Vec<Complex64>,
    pub method: EigenMethod,
}

/// Largest eigenvalue and a unit eigenvector.
///
/// Shifted power iteration from the all-ones vector; falls back to the full
/// decomposition when the iteration stalls (near-degenerate dominant pair).
pub fn lambda_max(cov: &CovarianceMatrix) -> DominantEigen {
    let n = cov.dim();
    let shift = cov.trace() / n as f64;
    let a = &cov.matrix;
    let mut x = DVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    let mut rho_prev = f64::NAN;
    let mut step_prev = f64::NAN;
    let mut converged = None;
    for it in 1..=POWER_MAX_ITERS {
        let mut y = a * &x;
        y.axpy(Complex64::new(shift, 0.0), &x, Complex64::new(1.0, 0.0));
        let rho = x.dotc(&y).re;
        let norm = y.norm();
        if norm == 0.0 {
            break;
        }
        x = y.unscale(norm);
        let step = (rho - rho_prev).abs();
        if step <= POWER_REL_TOL * rho.abs() {
            converged = Some(it);
            break;
        }
        // Stall: the observed contraction of the Rayleigh-quotient steps
        // predicts more than POWER_STALL_ITERS further iterations.
        if it > 100 && n < FULL_DECOMPOSITION_LIMIT && step > 0.0 {
            let ratio = step / step_prev;
            if ratio >= 1.0
                || (POWER_REL_TOL * rho.abs() / step).ln() / ratio.ln() > POWER_STALL_ITERS
            {
                break;
            }
        }
        rho_prev = rho;
        step_prev = step;
    }

    if let Some(iterations) = converged {
        let ax = a * &x;
        let value = x.dotc(&ax).re;
        let residual = (&ax - x.scale(value)).norm();
        // A slow-converging Rayleigh quotient can meet the step test while the
        // vector is still off; only accept when the residual is small too.
        // A start vector orthogonal to the top eigenspace converges to a
        // lower eigenpair, which the residual alone cannot catch.
        let top = cov.eigenvalues[n - 1];
        let dominant = value >= top - 1e-8 * top.max(1.0);
        if (residual <= 1e-5 * value.abs().max(1.0) || n >= FULL_DECOMPOSITION_LIMIT) && dominant {
            return DominantEigen {
                value,
                eigvec: normalize_phase(x.as_slice()),
                method: EigenMethod::PowerIteration { iterations },
            };
        }
    }
    let last = n - 1;
    DominantEigen {
        value: cov.eigenvalues[last],
        eigvec: normalize_phase(cov.eigenvectors.column(last).as_slice()),
        method: EigenMethod::FullDecomposition,
    }
}

// Rotate so the first nonzero entry is real and positive.
fn normalize_phase(v: &[Complex64]) -> Vec<Complex64> {
    let pivot = v.iter().find(|c| c.norm() > 1e-12).copied().unwrap_or(Complex64::new(1.0, 0.0));
    let rot = pivot.conj() / pivot.norm();
    v.iter().map(|c| c * rot).collect()
}

/// Fourier vector `f_m` with entries `exp(-j 2π m p / N) / √N`.
pub fn fourier_vector(n: usize, m: usize) -> Result<Vec<Complex64>> {
    if n == 0 || m >= n {
        return Err(Error::domain(format!("Fourier index {m} is outside 0..{n}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|p| {
            // reduce m·p mod n first to keep the angle small
            let k = (m * p) % n;
            Complex64::from_polar(scale, -2.0 * PI * k as f64 / n as f64)
        })
        .collect())
}

/// Extreme eigenvalues and Fourier alignment of a covariance.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub n: usize,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub trace: f64,
    pub dominant_eigvec: Vec<Complex64>,
    /// Index of the Fourier vector with the largest Rayleigh quotient.
    pub fourier_index_best: usize,
    pub fourier_rayleigh_best: f64,
}

impl SpectralSummary {
    pub const CSV_HEADER: &'static str = "N_r,lambda_max,lambda_min,trace,fourier_index_best,fourier_rayleigh_best";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n, self.lambda_max, self.lambda_min, self.trace, self.fourier_index_best, self.fourier_rayleigh_best
        )
    }
}

pub fn spectral_summary(cov: &CovarianceMatrix) -> SpectralSummary {
    let dom = lambda_max(cov);
    let n = cov.dim();
    let mut best = (0, f64::NEG_INFINITY);
    for m in 0..n {
        let f = fourier_vector(n, m).expect("index in range");
        let r = cov.rayleigh_quotient(&f);
        if r > best.1 {
            best = (m, r);
        }
    }
    SpectralSummary {
        n,
        lambda_max: dom.value,
        lambda_min: cov.raw_lambda_min,
        trace: cov.trace(),
        dominant_eigvec: dom.eigvec,
        fourier_index_best: best.0,
        fourier_rayleigh_best: best.1,
    }
}

/// How the tail of `Σ|c_n|` beyond the summed lags was handled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Exact geometric remainder `2 κ^{T+1}/(1-κ)` was added.
    Geometric(f64),
    /// Nothing added; lags beyond `truncation_lag` are omitted.
    Truncated { truncation_lag: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsSumBound {
    pub value: f64,
    pub tail: Tail,
}

/// `Σ_{n=-T}^{T} |c_n|` with `T = n_terms`.
///
/// Closed-form sequences are extended past their stored lags analytically;
/// other sequences sum only what they hold.
pub fn bound_sum_abs(seq: &CorrelationSequence, n_terms: usize) -> AbsSumBound {
    let extendable = matches!(seq.provenance(), Provenance::ClosedFormApprox | Provenance::ExponentialModel);
    let last = if extendable {
        n_terms
    } else {
        n_terms.min(seq.len() - 1)
    };
    let mut sum = 0.0;
    for n in (1..=last).rev() {
        sum += seq.magnitude(n).expect("lag within range");
    }
    let mut value = seq.magnitude(0).expect("c_0") + 2.0 * sum;

    let kappa = seq
        .model()
        .filter(|m| seq.provenance() == Provenance::ExponentialModel && m.family() == PasFamily::ExponentialCorrelation)
        .and_then(PasModel::kappa);
    let tail = match kappa {
        Some(k) => {
            let rest = 2.0 * k.powf(last as f64 + 1.0) / (1.0 - k);
            value += rest;
            Tail::Geometric(rest)
        }
        None => Tail::Truncated { truncation_lag: last },
    };
    AbsSumBound { value, tail }
}

fn gaussian_parts(model: &PasModel, geom: &ArrayGeometry) -> Result<f64> {
    if model.family() != PasFamily::TruncatedGaussian {
        return Err(Error::UnsupportedFamily {
            family: model.family().name(),
            operation: "theta bound",
        });
    }
    let mean = model.mean_angle().expect("gaussian mean");
    let spread = model.spread().expect("gaussian spread");
    Ok(PI * geom.spacing_ratio() * mean.sin() * spread)
}

/// Jacobi theta bound `ϑ₃(0, q) = Σ_n q^{n²}` with
/// `q = exp(-2 [π d sin μ_θ σ_θ / λ_c]²)`, for the Gaussian PAS.
pub fn bound_theta(model: &PasModel, geom: &ArrayGeometry) -> Result<f64> {
    let a = gaussian_parts(model, geom)?;
    let s = 2.0 * a * a;
    if s.is_nan() || s <= 0.0 {
        return Err(Error::DivergentBound("theta nome q = 1".into()));
    }
    let mut sum = 0.0;
    let mut n = 1.0f64;
    loop {
        let term = (-s * n * n).exp();
        if term < 1e-16 {
            break;
        }
        sum += term;
        n += 1.0;
    }
    Ok(1.0 + 2.0 * sum)
}

/// Laplacian bound `x coth x` with `x = λ_c / (√2 d sin μ_θ σ_θ)`.
pub fn bound_coth(model: &PasModel, geom: &ArrayGeometry) -> Result<f64> {
    if model.family() != PasFamily::TruncatedLaplacian {
        return Err(Error::UnsupportedFamily {
            family: model.family().name(),
            operation: "coth bound",
        });
    }
    let mean = model.mean_angle().expect("laplacian mean");
    let spread = model.spread().expect("laplacian spread");
    let x = 1.0 / (SQRT_2 * geom.spacing_ratio() * mean.sin() * spread);
    if !x.is_finite() {
        return Err(Error::DivergentBound("zero angular spread".into()));
    }
    Ok(x_coth_x(x))
}

/// `x coth x`, with the removable singularity at zero filled in.
pub fn x_coth_x(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + x * x / 3.0
    } else {
        x / x.tanh()
    }
}

/// Geometric-series bound `(1+κ)/(1-κ)` of the exponential model.
pub fn bound_geometric(kappa: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::domain(format!("kappa {kappa} is outside [0, 1)")));
    }
    Ok((1.0 + kappa) / (1.0 - kappa))
}

/// Closed-form bound for whichever family `model` belongs to.
pub fn family_bound(model: &PasModel, geom: &ArrayGeometry) -> Result<f64> {
    match model.family() {
        PasFamily::TruncatedGaussian => bound_theta(model, geom),
        PasFamily::TruncatedLaplacian => bound_coth(model, geom),
        PasFamily::ExponentialCorrelation => bound_geometric(model.kappa().expect("kappa")),
        PasFamily::Tabulated => Err(Error::UnsupportedFamily {
            family: "tabulated",
            operation: "closed-form bound",
        }),
    }
}

/// Writes `n,re,im` rows of a vector; used for eigenvector dumps.
pub fn vector_csv(v: &[Complex64]) -> String {
    let mut out = String::from("n,re,im\n");
    for (i, c) in v.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", c.re, c.im);
    }
    out
}
