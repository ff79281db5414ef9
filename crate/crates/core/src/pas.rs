//! Power angular spectrum (PAS) families on the half-space `(0, π)`.
//!
//! Truncated Gaussian and truncated Laplacian spectra are normalized
//! numerically at construction so the density integrates to one over
//! `(0, π)`. The exponential correlation model has no density; it is defined
//! through its correlation magnitudes `κ^|n|`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::quadrature::Adaptive;

/// Smallest angular spread accepted for the Gaussian and Laplacian families
/// (0.01°). Below this the covariance is numerically rank one.
pub const MIN_SPREAD: f64 = 0.01 * PI / 180.0;

// Mass of the Gaussian beyond 10σ is ~1.5e-23; Laplacian beyond 28σ ~6.5e-18.
const GAUSSIAN_SUPPORT_SIGMAS: f64 = 10.0;
const LAPLACIAN_SUPPORT_SIGMAS: f64 = 28.0;

/// The spectrum family, without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PasFamily {
    TruncatedGaussian,
    TruncatedLaplacian,
    ExponentialCorrelation,
    Tabulated,
}

impl PasFamily {
    pub fn name(self) -> &'static str {
        match self {
            PasFamily::TruncatedGaussian => "gaussian",
            PasFamily::TruncatedLaplacian => "laplacian",
            PasFamily::ExponentialCorrelation => "exponential",
            PasFamily::Tabulated => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Gaussian { mean: f64, spread: f64 },
    Laplacian { mean: f64, spread: f64 },
    Exponential { kappa: f64, mean: f64 },
    Tabulated { angles: Vec<f64>, values: Vec<f64> },
}

/// A power angular spectrum with its parameters. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PasModel {
    shape: Shape,
    /// Integral of the unnormalized kernel over `(0, π)`.
    norm: f64,
}

fn check_mean(mean: f64) -> Result<()> {
    if mean.is_finite() && mean > 0.0 && mean < PI {
        Ok(())
    } else {
        Err(Error::domain(format!("mean angle {mean} rad is outside (0, π)")))
    }
}

fn check_spread(spread: f64) -> Result<()> {
    if !spread.is_finite() || spread <= 0.0 {
        return Err(Error::domain(format!("angular spread {spread} rad must be positive")));
    }
    if spread < MIN_SPREAD {
        return Err(Error::domain(format!(
            "angular spread {:.4e}° is below the 0.01° floor (line-of-sight limit)",
            spread.to_degrees()
        )));
    }
    Ok(())
}

impl PasModel {
    /// Truncated Gaussian with mean `mean` and spread `spread`, both radians.
    pub fn truncated_gaussian(mean: f64, spread: f64) -> Result<Self> {
        check_mean(mean)?;
        check_spread(spread)?;
        Self::normalized(Shape::Gaussian { mean, spread })
    }

    /// Truncated Laplacian with mean `mean` and spread `spread`, both radians.
    pub fn truncated_laplacian(mean: f64, spread: f64) -> Result<Self> {
        check_mean(mean)?;
        check_spread(spread)?;
        Self::normalized(Shape::Laplacian { mean, spread })
    }

    /// Exponential correlation model `|c_n| = κ^|n|` with real coefficients.
    pub fn exponential(kappa: f64) -> Result<Self> {
        Self::exponential_with_mean(kappa, FRAC_PI_2)
    }

    /// Exponential correlation model whose coefficients carry the phase
    /// progression of a spectrum centred on `mean`.
    pub fn exponential_with_mean(kappa: f64, mean: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) {
            return Err(Error::domain(format!("kappa {kappa} is outside [0, 1)")));
        }
        check_mean(mean)?;
        Ok(PasModel {
            shape: Shape::Exponential { kappa, mean },
            norm: 1.0,
        })
    }

    /// Piecewise-linear spectrum through `(angle, density)` samples, zero
    /// outside the tabulated range and renormalized to unit mass.
    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::domain("tabulated PAS needs at least two samples"));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::domain("tabulated PAS angles must be strictly increasing"));
            }
        }
        let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
        if first < 0.0 || last > PI {
            return Err(Error::domain("tabulated PAS angles must lie in [0, π]"));
        }
        if samples.iter().any(|&(_, v)| !v.is_finite() || v < 0.0) {
            return Err(Error::domain("tabulated PAS densities must be finite and nonnegative"));
        }
        let angles: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
        // Trapezoid rule is exact for the linear interpolant.
        let norm: f64 = angles
            .windows(2)
            .zip(values.windows(2))
            .map(|(a, v)| 0.5 * (a[1] - a[0]) * (v[0] + v[1]))
            .sum();
        if norm <= 0.0 {
            return Err(Error::domain("tabulated PAS has zero mass"));
        }
        Ok(PasModel {
            shape: Shape::Tabulated { angles, values },
            norm,
        })
    }

    fn normalized(shape: Shape) -> Result<Self> {
        let mut model = PasModel { shape, norm: 1.0 };
        let (a, b) = model.support();
        let scale = model.spread().unwrap_or(1.0);
        let quad = Adaptive {
            abs_tol: 1e-14 * scale,
            ..Adaptive::default()
        };
        let norm = quad
            .integrate_real(|t| model.kernel(t), a, b, &model.breakpoints())
            .map_err(|_| Error::QuadratureFailed {
                lag: 0,
                error_estimate: f64::NAN,
            })?;
        model.norm = norm;
        Ok(model)
    }

    pub fn family(&self) -> PasFamily {
        match self.shape {
            Shape::Gaussian { .. } => PasFamily::TruncatedGaussian,
            Shape::Laplacian { .. } => PasFamily::TruncatedLaplacian,
            Shape::Exponential { .. } => PasFamily::ExponentialCorrelation,
            Shape::Tabulated { .. } => PasFamily::Tabulated,
        }
    }

    /// Mean angle μ_θ; for the exponential model, the angle that sets the
    /// coefficient phase progression.
    pub fn mean_angle(&self) -> Option<f64> {
        match self.shape {
            Shape::Gaussian { mean, .. } | Shape::Laplacian { mean, .. } | Shape::Exponential { mean, .. } => {
                Some(mean)
            }
            Shape::Tabulated { .. } => None,
        }
    }

    pub fn spread(&self) -> Option<f64> {
        match self.shape {
            Shape::Gaussian { spread, .. } | Shape::Laplacian { spread, .. } => Some(spread),
            _ => None,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match self.shape {
            Shape::Exponential { kappa, .. } => Some(kappa),
            _ => None,
        }
    }

    /// Numerically computed normalization: the reciprocal of this value
    /// multiplies the raw kernel (the role of K_G and K_L).
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// Unnormalized kernel, peak value one for the parametric families.
    fn kernel(&self, theta: f64) -> f64 {
        match &self.shape {
            Shape::Gaussian { mean, spread } => {
                let z = (theta - mean) / spread;
                (-0.5 * z * z).exp()
            }
            Shape::Laplacian { mean, spread } => (-SQRT_2 * (theta - mean).abs() / spread).exp(),
            Shape::Tabulated { angles, values } => interpolate(angles, values, theta),
            Shape::Exponential { .. } => 0.0,
        }
    }

    /// Interval outside of which the density is negligible (below 1e-17 of
    /// total mass), clipped to `[0, π]`.
    pub fn support(&self) -> (f64, f64) {
        let clip = |lo: f64, hi: f64| (lo.max(0.0), hi.min(PI));
        match &self.shape {
            Shape::Gaussian { mean, spread } => {
                clip(mean - GAUSSIAN_SUPPORT_SIGMAS * spread, mean + GAUSSIAN_SUPPORT_SIGMAS * spread)
            }
            Shape::Laplacian { mean, spread } => {
                clip(mean - LAPLACIAN_SUPPORT_SIGMAS * spread, mean + LAPLACIAN_SUPPORT_SIGMAS * spread)
            }
            Shape::Tabulated { angles, .. } => (angles[0], angles[angles.len() - 1]),
            Shape::Exponential { .. } => (0.0, PI),
        }
    }

    /// Points where quadrature panels should be cut: the mean and a few
    /// spreads around it, or the table nodes.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Gaussian { mean, spread } | Shape::Laplacian { mean, spread } => {
                let mut pts = vec![*mean];
                for k in [1.0, 2.0, 4.0, 8.0] {
                    pts.push(mean - k * spread);
                    pts.push(mean + k * spread);
                }
                pts
            }
            Shape::Tabulated { angles, .. } => angles.clone(),
            Shape::Exponential { .. } => Vec::new(),
        }
    }

    /// Normalized density at `theta`, which must lie in `(0, π)`.
    pub fn density(&self, theta: f64) -> Result<f64> {
        if let Shape::Exponential { .. } = self.shape {
            return Err(Error::NoPointwiseDensity("exponential correlation"));
        }
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::domain(format!("angle {theta} rad is outside (0, π)")));
        }
        Ok(self.density_unchecked(theta))
    }

    pub(crate) fn density_unchecked(&self, theta: f64) -> f64 {
        self.kernel(theta) / self.norm
    }
}

fn interpolate(angles: &[f64], values: &[f64], theta: f64) -> f64 {
    let last = angles.len() - 1;
    if theta < angles[0] || theta > angles[last] {
        return 0.0;
    }
    let idx = angles.partition_point(|&a| a <= theta);
    if idx == 0 {
        return values[0];
    }
    if idx > last {
        return values[last];
    }
    let (a0, a1) = (angles[idx - 1], angles[idx]);
    let t = (theta - a0) / (a1 - a0);
    values[idx - 1] + t * (values[idx] - values[idx - 1])
}

/// Upper-tail probability of the standard normal, `Q(x) = erfc(x/√2)/2`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    fn mass(model: &PasModel) -> f64 {
        let quad = Adaptive {
            abs_tol: 1e-13,
            ..Adaptive::default()
        };
        quad.integrate_real(|t| model.density(t).unwrap(), 1e-300, PI - 1e-15, &model.breakpoints())
            .unwrap()
    }

    #[test]
    fn gaussian_normalizes() {
        let m = PasModel::truncated_gaussian(FRAC_PI_2, deg(10.0)).unwrap();
        assert!((mass(&m) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn laplacian_normalizes() {
        let m = PasModel::truncated_laplacian(PI / 4.0, deg(23.0)).unwrap();
        assert!((mass(&m) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn normalization_grid() {
        for mean in [PI / 6.0, PI / 4.0, FRAC_PI_2] {
            for s in [1.0, 3.0, 6.0, 17.0, 23.0, 40.0] {
                let g = PasModel::truncated_gaussian(mean, deg(s)).unwrap();
                let l = PasModel::truncated_laplacian(mean, deg(s)).unwrap();
                assert!((mass(&g) - 1.0).abs() < 1e-8, "gaussian μ={mean} σ={s}");
                assert!((mass(&l) - 1.0).abs() < 1e-8, "laplacian μ={mean} σ={s}");
            }
        }
    }

    #[test]
    fn peak_matches_closed_form_constant_at_half_pi() {
        // K_G = 1/(√π [1 − 2Q(π/(2σ))]) is exact when the truncation is
        // symmetric about the mean.
        let s = deg(5.0);
        let m = PasModel::truncated_gaussian(FRAC_PI_2, s).unwrap();
        let k_g = 1.0 / (PI.sqrt() * (1.0 - 2.0 * gaussian_q(PI / (2.0 * s))));
        let expected = k_g / (SQRT_2 * s);
        let got = m.density(FRAC_PI_2).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-3);
    }

    #[test]
    fn symmetric_about_half_pi() {
        for m in [
            PasModel::truncated_gaussian(FRAC_PI_2, deg(17.0)).unwrap(),
            PasModel::truncated_laplacian(FRAC_PI_2, deg(23.0)).unwrap(),
        ] {
            for i in 1..50 {
                let x = i as f64 * FRAC_PI_2 / 50.0;
                let lhs = m.density(FRAC_PI_2 + x).unwrap();
                let rhs = m.density(FRAC_PI_2 - x).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
            }
        }
    }

    #[test]
    fn decays_away_from_mean() {
        let mean = PI / 4.0;
        for m in [
            PasModel::truncated_gaussian(mean, deg(6.0)).unwrap(),
            PasModel::truncated_laplacian(mean, deg(6.0)).unwrap(),
        ] {
            let mut prev_hi = f64::INFINITY;
            let mut prev_lo = f64::INFINITY;
            for i in 0..200 {
                let x = i as f64 * 0.0039;
                let hi = m.density(mean + x).unwrap();
                let lo = m.density(mean - x).unwrap();
                assert!(hi <= prev_hi && lo <= prev_lo);
                prev_hi = hi;
                prev_lo = lo;
            }
        }
    }

    #[test]
    fn exponential_has_no_density() {
        let m = PasModel::exponential(0.5).unwrap();
        assert!(matches!(m.density(1.0), Err(Error::NoPointwiseDensity(_))));
    }

    #[test]
    fn domain_errors() {
        let m = PasModel::truncated_gaussian(1.0, 0.1).unwrap();
        assert!(matches!(m.density(0.0), Err(Error::Domain(_))));
        assert!(matches!(m.density(PI), Err(Error::Domain(_))));
        assert!(PasModel::truncated_gaussian(0.0, 0.1).is_err());
        assert!(PasModel::truncated_laplacian(1.0, 0.0).is_err());
        assert!(PasModel::truncated_laplacian(1.0, deg(0.005)).is_err());
        assert!(PasModel::truncated_gaussian(1.0, deg(0.01)).is_ok());
        assert!(PasModel::exponential(1.0).is_err());
        assert!(PasModel::exponential(-0.1).is_err());
    }

    #[test]
    fn tabulated_uniform() {
        let m = PasModel::tabulated(&[(0.0, 3.0), (PI, 3.0)]).unwrap();
        assert!((m.density(1.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((mass(&m) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tabulated_triangle_interpolates() {
        let m = PasModel::tabulated(&[(0.5, 0.0), (1.0, 2.0), (1.5, 0.0)]).unwrap();
        assert!((m.density(1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((m.density(0.75).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.density(2.0).unwrap(), 0.0);
        assert!(PasModel::tabulated(&[(1.0, 1.0), (0.5, 1.0)]).is_err());
        assert!(PasModel::tabulated(&[(0.5, 0.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn q_function_values() {
        assert_eq!(gaussian_q(0.0), 0.5);
        assert!(gaussian_q(40.0) < 1e-300);
        assert!((gaussian_q(-1.0) - (1.0 - gaussian_q(1.0))).abs() < 1e-15);
    }

    #[test]
    fn q_function_against_tail_integral() {
        let quad = Adaptive {
            abs_tol: 1e-17,
            ..Adaptive::default()
        };
        let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        for x in [0.5, 1.0, 2.0, 3.5] {
            let tail = quad.integrate_real(phi, x, 40.0, &[]).unwrap();
            assert!(((gaussian_q(x) - tail) / tail).abs() < 1e-12, "x = {x}");
        }
        // frozen from the tail integral above
        assert!((gaussian_q(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
    }
}
