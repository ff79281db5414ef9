use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use risgain::phase::wrap_angle;
use risgain::*;

fn model_strategy() -> impl Strategy<Value = PasModel> {
    prop_oneof![
        (0.3f64..2.8, 1.0f64..25.0).prop_map(|(mu, s)| PasModel::truncated_gaussian(mu, s.to_radians()).unwrap()),
        (0.3f64..2.8, 1.0f64..25.0).prop_map(|(mu, s)| PasModel::truncated_laplacian(mu, s.to_radians()).unwrap()),
        (0.0f64..0.95).prop_map(|k| PasModel::exponential(k).unwrap()),
    ]
}

fn gain_matrix(model: &PasModel, n: usize, theta_r: f64) -> (CovarianceMatrix, GainMatrix) {
    let geom = ArrayGeometry::half_wavelength(n, theta_r).unwrap();
    let seq = correlation_approx(model, &geom, n).unwrap();
    let cov = build_covariance(&seq, n).unwrap();
    let m = GainMatrix::new(&cov, &geom).unwrap();
    (cov, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn global_phase_invariance(model in model_strategy(), n in 2usize..24, theta_r in 0.1f64..3.0,
                               shift in -PI..PI, seed in any::<u64>()) {
        let (_, m) = gain_matrix(&model, n, theta_r);
        let mut rng = risgain::sampling::stream_rng(seed, 0);
        let phases: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -PI..PI)).collect();
        let shifted: Vec<f64> = phases.iter().map(|p| p + shift).collect();
        let a = gain_of(&phases, &m).unwrap();
        let b = gain_of(&shifted, &m).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn feasibility_dominance(model in model_strategy(), n in 1usize..40, theta_r in 0.1f64..3.0) {
        let (cov, m) = gain_matrix(&model, n, theta_r);
        let p = optimize_phases(&m, &OptimizerOptions::default()).unwrap();
        let lmax = lambda_max(&cov).value;
        prop_assert!(p.gain() <= lmax + 1e-6, "{} > {}", p.gain(), lmax);
        prop_assert!(p.gain() >= 1.0 - 1e-9);
        let dft = dft_phase_profile(&m).unwrap();
        prop_assert!(dft.gain() <= p.gain() + 1e-9);
    }

    #[test]
    fn profile_is_normalized(model in model_strategy(), n in 1usize..30, theta_r in 0.1f64..3.0) {
        let (_, m) = gain_matrix(&model, n, theta_r);
        let p = optimize_phases(&m, &OptimizerOptions::default()).unwrap();
        prop_assert_eq!(p.phases()[0], 0.0);
        prop_assert!(p.phases().iter().all(|&x| x > -PI - 1e-12 && x <= PI + 1e-12));
        prop_assert!(p.elements().iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn wrap_angle_range(x in -100.0f64..100.0) {
        let w = wrap_angle(x);
        prop_assert!(w > -PI - 1e-12 && w <= PI + 1e-12);
        prop_assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-9
            || (1.0 - ((x - w) / (2.0 * PI)).fract().abs()) < 1e-9);
    }

    #[test]
    fn covariance_is_hermitian_toeplitz(model in model_strategy(), n in 1usize..32, theta_r in 0.1f64..3.0) {
        let geom = ArrayGeometry::half_wavelength(n, theta_r).unwrap();
        let seq = correlation_approx(&model, &geom, n).unwrap();
        let cov = build_covariance(&seq, n).unwrap();
        for k in 0..n {
            prop_assert!((cov.entry(k, k) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            for l in 0..n {
                prop_assert!((cov.entry(k, l) - cov.entry(l, k).conj()).norm() < 1e-14);
                if k + 1 < n && l + 1 < n {
                    prop_assert!((cov.entry(k, l) - cov.entry(k + 1, l + 1)).norm() < 1e-14);
                }
            }
        }
        prop_assert!(cov.eigenvalues().iter().all(|&v| v >= 0.0));
    }
}

// Best Fourier vector's Rayleigh quotient approaches λ_max as N grows.
#[test]
fn fourier_alignment_sharpens() {
    let model = PasModel::truncated_gaussian(PI / 4.0, 3f64.to_radians()).unwrap();
    let mut gaps = Vec::new();
    for n in [8usize, 32, 128] {
        let geom = ArrayGeometry::half_wavelength(n, 1.4).unwrap();
        let cov = build_covariance(&correlation_approx(&model, &geom, n).unwrap(), n).unwrap();
        let lmax = lambda_max(&cov).value;
        let best = (0..n)
            .map(|m| cov.rayleigh_quotient(&fourier_vector(n, m).unwrap()))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(best <= lmax + 1e-9);
        gaps.push((lmax - best) / lmax);
    }
    assert!(gaps[2] < gaps[0], "{gaps:?}");
}
