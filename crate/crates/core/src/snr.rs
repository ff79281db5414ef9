//! Cascade channel `h = H Ψ h_r` with `H = a_b a_r^H`, the average SNR
//! `(αP/σ²) N_b N_r ζ`, and its Monte Carlo check under optimum combining.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::correlation::ArrayGeometry;
use crate::error::{Error, Result};
use crate::pas::PasModel;
use crate::phase::{steering_vector, PhaseProfile};
use crate::sampling::{pairwise_sum, CovarianceSampler, MeanEstimate};
use crate::toeplitz::CovarianceMatrix;

/// Angle of the BS steering vector. Only `‖a_b‖² = N_b` enters the SNR.
pub const BS_STEERING_ANGLE: f64 = PI / 4.0;

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

#[derive(Debug, Clone)]
pub struct SnrConfig {
    pub n_bs_antennas: usize,
    /// αP/σ², linear.
    pub link_budget: f64,
    pub geometry: ArrayGeometry,
    pub pas: PasModel,
    pub seed: u64,
    pub samples: usize,
}

impl SnrConfig {
    pub fn new(
        n_bs_antennas: usize,
        link_budget: f64,
        geometry: ArrayGeometry,
        pas: PasModel,
        seed: u64,
        samples: usize,
    ) -> Result<Self> {
        if n_bs_antennas == 0 {
            return Err(Error::domain("BS needs at least one antenna"));
        }
        if !(link_budget.is_finite() && link_budget > 0.0) {
            return Err(Error::domain(format!("link budget {link_budget} must be positive")));
        }
        if samples == 0 {
            return Err(Error::domain("at least one Monte Carlo sample is required"));
        }
        Ok(SnrConfig {
            n_bs_antennas,
            link_budget,
            geometry,
            pas,
            seed,
            samples,
        })
    }
}

/// Half-wavelength ULA response at [`BS_STEERING_ANGLE`].
pub fn bs_steering_vector(n_bs_antennas: usize) -> Vec<Complex64> {
    let geom = ArrayGeometry::half_wavelength(n_bs_antennas, BS_STEERING_ANGLE).expect("valid BS geometry");
    steering_vector(&geom)
}

/// One realization of the cascade link.
#[derive(Debug, Clone)]
pub struct CascadeSample {
    pub h_r: Vec<Complex64>,
    pub h: Vec<Complex64>,
    pub snr_inst: f64,
}

/// Scalar `a_r^H Ψ h_r` with `Ψ = diag(e^{-jψ_m})`.
fn ris_response(a_r: &[Complex64], profile: &[Complex64], h_r: &[Complex64]) -> Complex64 {
    a_r.iter()
        .zip(profile)
        .zip(h_r)
        .map(|((a, p), h)| (a * p).conj() * h)
        .sum()
}

/// Builds `h = a_b (a_r^H Ψ h_r)` and `SNR = (αP/σ²) ‖h‖²`.
pub fn cascade_sample(cfg: &SnrConfig, profile: &PhaseProfile, h_r: Vec<Complex64>) -> Result<CascadeSample> {
    let n = cfg.geometry.n_elements;
    if h_r.len() != n || profile.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: if h_r.len() != n { h_r.len() } else { profile.len() },
        });
    }
    let a_r = steering_vector(&cfg.geometry);
    let a_b = bs_steering_vector(cfg.n_bs_antennas);
    let s = ris_response(&a_r, &profile.elements(), &h_r);
    let h: Vec<Complex64> = a_b.iter().map(|a| a * s).collect();
    let snr_inst = cfg.link_budget * h.iter().map(|x| x.norm_sqr()).sum::<f64>();
    Ok(CascadeSample { h_r, h, snr_inst })
}

/// `(αP/σ²) N_b N_r ζ`.
pub fn average_snr_analytic(cfg: &SnrConfig, profile: &PhaseProfile) -> Result<f64> {
    let n = cfg.geometry.n_elements;
    if profile.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: profile.len(),
        });
    }
    Ok(cfg.link_budget * cfg.n_bs_antennas as f64 * n as f64 * profile.gain())
}

/// Monte Carlo SNR statistics.
#[derive(Debug, Clone)]
pub struct SnrSimulation {
    pub estimate: MeanEstimate,
    /// Empirical coefficient of variation (one for an exponential law).
    pub cv: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    /// Per-realization SNR, in draw order.
    pub samples: Vec<f64>,
}

impl SnrSimulation {
    pub fn mean(&self) -> f64 {
        self.estimate.mean
    }

    pub fn std_error(&self) -> f64 {
        self.estimate.std_error
    }
}

/// Draws `cfg.samples` channels `h_r ~ CN(0, C_r)` and accumulates the
/// per-realization SNR with the matched combiner `w ∝ h`.
///
/// `cov` must be the covariance of `cfg.pas` on `cfg.geometry`.
pub fn simulate_snr(cfg: &SnrConfig, cov: &CovarianceMatrix, profile: &PhaseProfile) -> Result<SnrSimulation> {
    let n = cfg.geometry.n_elements;
    if cov.dim() != n || profile.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: if cov.dim() != n { cov.dim() } else { profile.len() },
        });
    }
    let a_r = steering_vector(&cfg.geometry);
    let p = profile.elements();
    // ‖a_b s‖² = N_b |s|²
    let scale = cfg.link_budget * cfg.n_bs_antennas as f64;
    let sampler = CovarianceSampler::new(cov);
    let samples = sampler.map_draws(cfg.seed, cfg.samples, |h_r| scale * ris_response(&a_r, &p, h_r).norm_sqr());

    let estimate = MeanEstimate::from_samples(&samples);
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let len = sorted.len();
    let median = if len % 2 == 1 {
        sorted[len / 2]
    } else {
        0.5 * (sorted[len / 2 - 1] + sorted[len / 2])
    };
    Ok(SnrSimulation {
        cv: estimate.std_dev / estimate.mean,
        min: sorted[0],
        max: sorted[len - 1],
        median,
        estimate,
        samples,
    })
}

/// Kolmogorov–Smirnov distance between `values / mean(values)` and the
/// unit exponential law.
pub fn ks_exponential(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mean = pairwise_sum(values) / n as f64;
    let mut x: Vec<f64> = values.iter().map(|v| v / mean).collect();
    x.sort_by(f64::total_cmp);
    let nf = n as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let cdf = 1.0 - (-v).exp();
            let hi = (i + 1) as f64 / nf - cdf;
            let lo = cdf - i as f64 / nf;
            hi.max(lo)
        })
        .fold(0.0, f64::max)
}

/// 95% acceptance threshold used with [`ks_exponential`].
pub fn ks_threshold(samples: usize) -> f64 {
    1.63 / (samples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{correlation_exact, CorrelationSequence};
    use crate::phase::{dft_phase_profile, GainMatrix, OptimMethod};
    use crate::sampling::{sample_ms_ris_channel, stream_rng};
    use crate::toeplitz::build_covariance;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_4;

    fn identity_setup(n: usize) -> (CovarianceMatrix, ArrayGeometry, GainMatrix) {
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        c[0] = Complex64::new(1.0, 0.0);
        let cov = build_covariance(&CorrelationSequence::from_coefficients(c).unwrap(), n).unwrap();
        let geom = ArrayGeometry::half_wavelength(n, 1.0).unwrap();
        let m = GainMatrix::new(&cov, &geom).unwrap();
        (cov, geom, m)
    }

    #[test]
    fn analytic_values() {
        let (_, geom, m) = identity_setup(1);
        let cfg = SnrConfig::new(1, 1.0, geom, PasModel::exponential(0.0).unwrap(), 0, 1).unwrap();
        let p = PhaseProfile::evaluate(&[0.0], &m, OptimMethod::ClosedForm2).unwrap();
        assert_eq!(average_snr_analytic(&cfg, &p).unwrap(), 1.0);

        let cfg2 = SnrConfig { n_bs_antennas: 2, ..cfg.clone() };
        assert_eq!(average_snr_analytic(&cfg2, &p).unwrap(), 2.0 * average_snr_analytic(&cfg, &p).unwrap());
        assert!(SnrConfig::new(0, 1.0, geom, PasModel::exponential(0.0).unwrap(), 0, 1).is_err());
        assert!(SnrConfig::new(1, -1.0, geom, PasModel::exponential(0.0).unwrap(), 0, 1).is_err());
    }

    #[test]
    fn arithmetic_example() {
        // N_b = 10, N_r = 100, αP/σ² = 0.1, ζ = 4 → 400
        let v: f64 = 0.1 * 10.0 * 100.0 * 4.0;
        assert!((v - 400.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_unit_exponential() {
        let (cov, geom, m) = identity_setup(1);
        let cfg = SnrConfig::new(1, 1.0, geom, PasModel::exponential(0.0).unwrap(), 42, 100_000).unwrap();
        let p = PhaseProfile::evaluate(&[0.0], &m, OptimMethod::ClosedForm2).unwrap();
        let sim = simulate_snr(&cfg, &cov, &p).unwrap();
        assert!(sim.estimate.z_score(1.0) < 3.0);
        assert!((sim.cv - 1.0).abs() < 0.02);
    }

    #[test]
    fn correlated_matches_analytic() {
        let pas = PasModel::truncated_gaussian(FRAC_PI_4, 6f64.to_radians()).unwrap();
        let geom = ArrayGeometry::half_wavelength(32, 80f64.to_radians()).unwrap();
        let seq = correlation_exact(&pas, &geom, 32).unwrap();
        let cov = build_covariance(&seq, 32).unwrap();
        let m = GainMatrix::new(&cov, &geom).unwrap();
        let p = dft_phase_profile(&m).unwrap();
        let cfg = SnrConfig::new(10, 0.1, geom, pas, 3, 100_000).unwrap();
        let sim = simulate_snr(&cfg, &cov, &p).unwrap();
        let analytic = average_snr_analytic(&cfg, &p).unwrap();
        assert!(sim.estimate.z_score(analytic) < 3.0, "{} vs {analytic}", sim.mean());
        assert!((sim.cv - 1.0).abs() < 0.02);
        assert!(ks_exponential(&sim.samples[..10_000]) < ks_threshold(10_000));
    }

    #[test]
    fn cascade_is_rank_one() {
        let pas = PasModel::truncated_laplacian(1.0, 10f64.to_radians()).unwrap();
        let geom = ArrayGeometry::half_wavelength(8, 1.2).unwrap();
        let cov = build_covariance(&correlation_exact(&pas, &geom, 8).unwrap(), 8).unwrap();
        let m = GainMatrix::new(&cov, &geom).unwrap();
        let mut rng = stream_rng(1, 0);
        let ph: Vec<f64> = (0..8).map(|_| rng.random_range(-PI..PI)).collect();
        let p = PhaseProfile::evaluate(&ph, &m, OptimMethod::CoordinateAscent).unwrap();
        let cfg = SnrConfig::new(6, 2.0, geom, pas, 0, 1).unwrap();
        let a_b = bs_steering_vector(6);
        for seed in 0..20 {
            let s = cascade_sample(&cfg, &p, sample_ms_ris_channel(&cov, seed)).unwrap();
            let hn: f64 = s.h.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let ip: Complex64 = a_b.iter().zip(&s.h).map(|(a, h)| a.conj() * h).sum();
            // |<a_b, h>| = ‖a_b‖ ‖h‖ iff collinear
            let resid = 1.0 - ip.norm() / ((6f64).sqrt() * hn);
            assert!(resid.abs() < 1e-10);
            assert!(s.snr_inst >= 0.0);
            assert!((s.snr_inst - 2.0 * hn * hn).abs() < 1e-12 * s.snr_inst.max(1.0));
        }
    }

    #[test]
    fn ks_detects_wrong_law() {
        let uniform: Vec<f64> = (1..=2000).map(|i| i as f64 / 2000.0).collect();
        assert!(ks_exponential(&uniform) > ks_threshold(2000));
        let exp: Vec<f64> = (0..2000).map(|i| -(1.0 - (i as f64 + 0.5) / 2000.0).ln()).collect();
        assert!(ks_exponential(&exp) < ks_threshold(2000));
    }

    #[test]
    fn db_roundtrip() {
        assert!((to_db(0.1) + 10.0).abs() < 1e-12);
        assert!((from_db(-10.0) - 0.1).abs() < 1e-15);
    }
}
