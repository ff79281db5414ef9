//! Reproducible draws of `h ~ CN(0, C)`.
//!
//! Each batch of draws comes from its own ChaCha20 stream (`set_stream(b)`
//! on a generator seeded with the run seed), so results do not depend on how
//! batches are scheduled across threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::toeplitz::CovarianceMatrix;

/// Generator recorded in experiment metadata.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha), one stream per batch";

/// Draws per independently seeded batch.
pub const BATCH_SIZE: usize = 1024;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard circularly-symmetric complex Gaussian, unit variance.
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Square-root factor `L = U Λ^{1/2}` of a covariance, from its (clamped)
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct CovarianceSampler {
    factor: DMatrix<Complex64>,
}

impl CovarianceSampler {
    pub fn new(cov: &CovarianceMatrix) -> Self {
        let n = cov.dim();
        let roots: Vec<f64> = cov.eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect();
        let u = cov.eigenvectors();
        let factor = DMatrix::from_fn(n, n, |r, c| u[(r, c)] * roots[c]);
        CovarianceSampler { factor }
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn factor(&self) -> &DMatrix<Complex64> {
        &self.factor
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let g = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| standard_complex(rng)));
        (&self.factor * g).as_slice().to_vec()
    }

    /// Maps `count` draws through `f`, batch by batch, in parallel. Output
    /// order and values depend only on `seed` and `count`.
    pub fn map_draws<T, F>(&self, seed: u64, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[Complex64]) -> T + Sync,
    {
        let batches = count.div_ceil(BATCH_SIZE);
        let per_batch: Vec<Vec<T>> = (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(seed, b as u64);
                let len = BATCH_SIZE.min(count - b * BATCH_SIZE);
                (0..len).map(|_| f(&self.draw(&mut rng))).collect()
            })
            .collect();
        per_batch.into_iter().flatten().collect()
    }
}

/// A single draw of the MS–RIS channel `h_r ~ CN(0, C_r)`.
pub fn sample_ms_ris_channel(cov: &CovarianceMatrix, seed: u64) -> Vec<Complex64> {
    CovarianceSampler::new(cov).draw(&mut stream_rng(seed, 0))
}

/// `count` draws of the MS–RIS channel.
pub fn sample_ms_ris_channels(cov: &CovarianceMatrix, seed: u64, count: usize) -> Vec<Vec<Complex64>> {
    CovarianceSampler::new(cov).map_draws(seed, count, |h| h.to_vec())
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sample mean, standard error of the mean, and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub std_dev: f64,
    pub samples: usize,
}

impl MeanEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = pairwise_sum(values) / n as f64;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        let std_dev = var.sqrt();
        MeanEstimate {
            mean,
            std_error: std_dev / (n as f64).sqrt(),
            std_dev,
            samples: n,
        }
    }

    /// |mean − target| expressed in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.std_error
    }
}
