//! Spatial correlation coefficients `c_n` of a uniform linear RIS.
//!
//! `c_n = ∫₀^π P(θ) exp(j 2π n d cos θ / λ_c) dθ`, evaluated either by
//! adaptive quadrature or through the small-spread closed forms. Only
//! nonnegative lags are stored; `c_{-n} = conj(c_n)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pas::{PasFamily, PasModel};
use crate::quadrature::Adaptive;

/// Uniform linear array geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    /// Element spacing d, meters.
    pub spacing: f64,
    /// Carrier wavelength λ_c, meters.
    pub wavelength: f64,
    /// Departure angle θ_r, radians in (0, π).
    pub departure_angle: f64,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, spacing: f64, wavelength: f64, departure_angle: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::domain("array needs at least one element"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::domain(format!("element spacing {spacing} must be positive")));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::domain(format!("wavelength {wavelength} must be positive")));
        }
        if !(spacing / wavelength).is_finite() {
            return Err(Error::domain("spacing-to-wavelength ratio is not finite"));
        }
        if !(departure_angle > 0.0 && departure_angle < PI) {
            return Err(Error::domain(format!("departure angle {departure_angle} rad is outside (0, π)")));
        }
        Ok(ArrayGeometry {
            n_elements,
            spacing,
            wavelength,
            departure_angle,
        })
    }

    /// Geometry with unit wavelength and spacing `ratio` wavelengths.
    pub fn with_spacing_ratio(n_elements: usize, ratio: f64, departure_angle: f64) -> Result<Self> {
        Self::new(n_elements, ratio, 1.0, departure_angle)
    }

    /// Half-wavelength spacing.
    pub fn half_wavelength(n_elements: usize, departure_angle: f64) -> Result<Self> {
        Self::with_spacing_ratio(n_elements, 0.5, departure_angle)
    }

    /// d / λ_c.
    pub fn spacing_ratio(&self) -> f64 {
        self.spacing / self.wavelength
    }

    pub fn with_elements(&self, n_elements: usize) -> Result<Self> {
        Self::new(n_elements, self.spacing, self.wavelength, self.departure_angle)
    }
}

/// How a sequence was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    ExactQuadrature,
    ClosedFormApprox,
    ExponentialModel,
    /// Coefficients handed in directly by the caller.
    Supplied,
}

/// Correlation coefficients `c_0 .. c_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSequence {
    coeffs: Vec<Complex64>,
    provenance: Provenance,
    geometry: Option<ArrayGeometry>,
    model: Option<PasModel>,
}

impl CorrelationSequence {
    /// Wraps caller-provided coefficients. `c_0` must be real and positive
    /// and no coefficient may exceed it in magnitude.
    pub fn from_coefficients(coeffs: Vec<Complex64>) -> Result<Self> {
        let Some(c0) = coeffs.first() else {
            return Err(Error::domain("correlation sequence is empty"));
        };
        if c0.im.abs() > 1e-12 || c0.re <= 0.0 {
            return Err(Error::domain("c_0 must be real and positive"));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::domain("correlation coefficients must be finite"));
        }
        if coeffs.iter().any(|c| c.norm() > c0.re * (1.0 + 1e-12)) {
            return Err(Error::domain("|c_n| exceeds c_0"));
        }
        Ok(CorrelationSequence {
            coeffs,
            provenance: Provenance::Supplied,
            geometry: None,
            model: None,
        })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn geometry(&self) -> Option<&ArrayGeometry> {
        self.geometry.as_ref()
    }

    pub fn model(&self) -> Option<&PasModel> {
        self.model.as_ref()
    }

    /// Coefficient at any signed lag within the stored range.
    pub fn at(&self, lag: isize) -> Complex64 {
        let c = self.coeffs[lag.unsigned_abs()];
        if lag < 0 {
            c.conj()
        } else {
            c
        }
    }

    /// `|c_n|` for `n ≥ 0`, extended past the stored lags through the closed
    /// form when the sequence came from one.
    pub fn magnitude(&self, n: usize) -> Option<f64> {
        if n < self.coeffs.len() {
            return Some(self.coeffs[n].norm());
        }
        match (self.provenance, &self.model, &self.geometry) {
            (Provenance::ClosedFormApprox | Provenance::ExponentialModel, Some(m), Some(g)) => {
                closed_form_magnitude(m, g, n)
            }
            _ => None,
        }
    }

    /// CSV with columns `n,re,im,abs`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re,im,abs\n");
        for (n, c) in self.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{n},{},{},{}", c.re, c.im, c.norm());
        }
        out
    }
}

/// `2π d/λ_c`, the per-lag phase scale of the kernel.
fn wavenumber_spacing(geom: &ArrayGeometry) -> f64 {
    2.0 * PI * geom.spacing_ratio()
}

/// Closed-form `|c_n|` of the parametric families (small-spread
/// approximations for Gaussian and Laplacian, exact for exponential).
pub fn closed_form_magnitude(model: &PasModel, geom: &ArrayGeometry, n: usize) -> Option<f64> {
    let n = n as f64;
    match model.family() {
        PasFamily::TruncatedGaussian | PasFamily::TruncatedLaplacian => {
            let mean = model.mean_angle()?;
            let spread = model.spread()?;
            let x = PI * geom.spacing_ratio() * n * mean.sin() * spread;
            Some(if model.family() == PasFamily::TruncatedGaussian {
                (-2.0 * x * x).exp()
            } else {
                1.0 / (1.0 + 2.0 * x * x)
            })
        }
        PasFamily::ExponentialCorrelation => Some(model.kappa()?.powf(n)),
        PasFamily::Tabulated => None,
    }
}

/// Exact coefficients by adaptive quadrature of the PAS against the array
/// kernel, lags `0..n_max`.
pub fn correlation_exact(model: &PasModel, geom: &ArrayGeometry, n_max: usize) -> Result<CorrelationSequence> {
    if model.family() == PasFamily::ExponentialCorrelation {
        return Err(Error::NoPointwiseDensity("exponential correlation"));
    }
    if n_max == 0 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    let k = wavenumber_spacing(geom);
    let (a, b) = model.support();
    let breakpoints = model.breakpoints();
    // cos θ sweeps [-1, 1] once over (0, π): 2 n d/λ_c periods in all.
    let support_fraction = (b - a) / PI;

    let results: Vec<std::result::Result<Complex64, f64>> = (0..n_max)
        .into_par_iter()
        .map(|n| {
            let periods = 2.0 * n as f64 * geom.spacing_ratio() * support_fraction;
            let quad = Adaptive {
                min_panels: ((8.0 * periods).ceil() as usize).max(16),
                ..Adaptive::default()
            };
            let phase = k * n as f64;
            quad.integrate(
                |t| {
                    let p = model.density_unchecked(t);
                    Complex64::from_polar(p, phase * t.cos())
                },
                a,
                b,
                &breakpoints,
            )
            .map(|e| e.value)
            .map_err(|e| e.error)
        })
        .collect();

    let mut worst: Option<(usize, f64)> = None;
    let mut coeffs = Vec::with_capacity(n_max);
    for (n, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => coeffs.push(c),
            Err(err) => {
                if worst.is_none_or(|(_, e)| err > e) {
                    worst = Some((n, err));
                }
            }
        }
    }
    if let Some((lag, error_estimate)) = worst {
        return Err(Error::QuadratureFailed { lag, error_estimate });
    }
    Ok(CorrelationSequence {
        coeffs,
        provenance: Provenance::ExactQuadrature,
        geometry: Some(*geom),
        model: Some(model.clone()),
    })
}

/// Closed-form coefficients: the family's magnitude law with phase
/// `exp(j 2π n d cos μ_θ / λ_c)`.
pub fn correlation_approx(model: &PasModel, geom: &ArrayGeometry, n_max: usize) -> Result<CorrelationSequence> {
    if model.family() == PasFamily::Tabulated {
        return Err(Error::UnsupportedFamily {
            family: "tabulated",
            operation: "closed-form correlation",
        });
    }
    if n_max == 0 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    let mean = model.mean_angle().expect("parametric family has a mean angle");
    // cos(π/2) evaluates to ~6e-17; snap so broadside spectra stay real.
    let cos_mean = if (mean - FRAC_PI_2).abs() < 1e-15 { 0.0 } else { mean.cos() };
    let step = wavenumber_spacing(geom) * cos_mean;
    let coeffs = (0..n_max)
        .map(|n| {
            let mag = closed_form_magnitude(model, geom, n).expect("parametric family");
            if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(mag, step * n as f64)
            }
        })
        .collect();
    let provenance = if model.family() == PasFamily::ExponentialCorrelation {
        Provenance::ExponentialModel
    } else {
        Provenance::ClosedFormApprox
    };
    Ok(CorrelationSequence {
        coeffs,
        provenance,
        geometry: Some(*geom),
        model: Some(model.clone()),
    })
}

/// Which route produces the coefficients for a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrelationSource {
    /// Quadrature for spectra with a density, the closed form otherwise.
    Exact,
    /// Closed form for every parametric family.
    Approx,
}

/// Dispatches to [`correlation_exact`] or [`correlation_approx`]. The
/// exponential model always takes the closed form.
pub fn correlation_sequence(
    model: &PasModel,
    geom: &ArrayGeometry,
    n_max: usize,
    source: CorrelationSource,
) -> Result<CorrelationSequence> {
    match (source, model.family()) {
        (_, PasFamily::ExponentialCorrelation) | (CorrelationSource::Approx, _) => {
            correlation_approx(model, geom, n_max)
        }
        (CorrelationSource::Exact, _) => correlation_exact(model, geom, n_max),
    }
}

/// Outcome of the absolute-summability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerCheck {
    pub summable: bool,
    /// `Σ_{n=-(N-1)}^{N-1} |c_n|` over the stored lags.
    pub partial_sum: f64,
    /// Least-squares slope of log|c_n| against log n over the tail;
    /// `-∞` when the tail is identically zero.
    pub decay_exponent_estimate: f64,
}

const SUMMABILITY_MARGIN: f64 = 0.1;
// Quadrature coefficients below this are at the tolerance floor.
const EXACT_NOISE_FLOOR: f64 = 1e-9;

/// Estimates whether `|c_n| = o(1/|n|)` from the decay of the stored tail.
///
/// The fit uses the last `tail_window` lags, restricted to the upper half
/// of the stored range.
pub fn wiener_class_check(seq: &CorrelationSequence, tail_window: usize) -> Result<WienerCheck> {
    let n = seq.len();
    if n < tail_window + 8 {
        return Err(Error::domain(format!(
            "sequence holds {n} lags, needs at least tail_window + 8 = {}",
            tail_window + 8
        )));
    }
    let partial_sum = seq.coeffs[0].norm() + 2.0 * seq.coeffs[1..].iter().map(|c| c.norm()).sum::<f64>();

    let floor = if seq.provenance == Provenance::ExactQuadrature {
        EXACT_NOISE_FLOOR
    } else {
        0.0
    };
    let start = (n - tail_window).max(n / 2).max(1);
    let points: Vec<(f64, f64)> = (start..n)
        .filter_map(|k| {
            let m = seq.coeffs[k].norm();
            (m > floor).then(|| ((k as f64).ln(), m.ln()))
        })
        .collect();

    let decay_exponent_estimate = if points.len() < 2 {
        f64::NEG_INFINITY
    } else {
        least_squares_slope(&points)
    };
    Ok(WienerCheck {
        summable: decay_exponent_estimate < -1.0 - SUMMABILITY_MARGIN,
        partial_sum,
        decay_exponent_estimate,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let len = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / len;
    let my = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
