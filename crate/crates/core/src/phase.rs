//! RIS phase shifts maximizing the two-timescale beamforming gain
//!
//! `ζ(ψ) = p^H M p`, `p_m = e^{jψ_m}`, `M = diag(v*) C_r diag(v)`,
//! `v = a_r / √N_r`.
//!
//! `M` is Hermitian-Toeplitz with unit trace. Because `√N_r diag(v*)` is
//! unitary, the optimum gain is bounded by `λ_max(C_r)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::correlation::ArrayGeometry;
use crate::error::{Error, Result};
use crate::sampling::{stream_rng, CovarianceSampler, MeanEstimate};
use crate::toeplitz::CovarianceMatrix;

/// Largest array the exhaustive grid search accepts.
pub const BRUTE_FORCE_MAX_ELEMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimMethod {
    CoordinateAscent,
    FourierAsymptotic,
    BruteForce,
    ClosedForm2,
}

impl OptimMethod {
    pub fn name(self) -> &'static str {
        match self {
            OptimMethod::CoordinateAscent => "coordinate_ascent",
            OptimMethod::FourierAsymptotic => "dft",
            OptimMethod::BruteForce => "brute_force",
            OptimMethod::ClosedForm2 => "closed_form_2",
        }
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Unit-modulus RIS configuration with the gain it achieves.
///
/// Angles are stored, so every element has modulus one exactly; the first
/// angle is pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    phases: Vec<f64>,
    gain: f64,
    method: OptimMethod,
}

impl PhaseProfile {
    /// Normalizes `phases` (global rotation so `ψ_0 = 0`) and evaluates them.
    pub fn evaluate(phases: &[f64], m: &GainMatrix, method: OptimMethod) -> Result<Self> {
        let phases = normalize(phases);
        let gain = gain_of(&phases, m)?;
        Ok(PhaseProfile { phases, gain, method })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn gain_db(&self) -> f64 {
        10.0 * self.gain.log10()
    }

    pub fn method(&self) -> OptimMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// The unit-modulus vector `e^{jψ_m}`.
    pub fn elements(&self) -> Vec<Complex64> {
        unit_vector(&self.phases)
    }

    /// CSV with columns `m,psi_radians`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,psi_radians\n");
        for (m, p) in self.phases.iter().enumerate() {
            let _ = writeln!(out, "{m},{p}");
        }
        out
    }

    pub const GAIN_CSV_HEADER: &'static str = "method,N_r,zeta,zeta_db";

    /// Row for the `method,N_r,zeta,zeta_db` gain report.
    pub fn gain_csv_row(&self) -> String {
        format!("{},{},{},{}", self.method.name(), self.len(), self.gain, self.gain_db())
    }
}

fn normalize(phases: &[f64]) -> Vec<f64> {
    let Some(&first) = phases.first() else {
        return Vec::new();
    };
    phases.iter().map(|&p| wrap_angle(p - first)).collect()
}

fn unit_vector(phases: &[f64]) -> Vec<Complex64> {
    phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
}

/// Array steering vector, entry `m` = `exp(j 2π m d cos θ_r / λ_c)`.
pub fn steering_vector(geom: &ArrayGeometry) -> Vec<Complex64> {
    let step = 2.0 * PI * geom.spacing_ratio() * geom.departure_angle.cos();
    (0..geom.n_elements)
        .map(|m| Complex64::from_polar(1.0, step * m as f64))
        .collect()
}

/// `M = diag(v*) C_r diag(v)` for the departure geometry.
#[derive(Debug, Clone)]
pub struct GainMatrix {
    matrix: DMatrix<Complex64>,
    v: Vec<Complex64>,
}

impl GainMatrix {
    pub fn new(cov: &CovarianceMatrix, geom: &ArrayGeometry) -> Result<Self> {
        let n = cov.dim();
        if geom.n_elements != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: geom.n_elements,
            });
        }
        let scale = 1.0 / (n as f64).sqrt();
        let v: Vec<Complex64> = steering_vector(geom).into_iter().map(|a| a * scale).collect();
        let matrix = DMatrix::from_fn(n, n, |k, l| v[k].conj() * cov.entry(k, l) * v[l]);
        Ok(GainMatrix { matrix, v })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Normalized steering vector `v = a_r / √N_r`.
    pub fn steering(&self) -> &[Complex64] {
        &self.v
    }

    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        self.matrix[(k, l)]
    }

    fn quadratic_form(&self, p: &[Complex64]) -> Complex64 {
        let x = DVector::from_column_slice(p);
        x.dotc(&(&self.matrix * &x))
    }

    /// `Σ_{k,ℓ} |M_kℓ|`.
    pub fn abs_sum(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm()).sum()
    }
}

/// `ζ = p^H M p` for `p_m = e^{jψ_m}`.
///
/// Fails if the quadratic form has an imaginary part above 1e-8, which
/// would mean `M` is not Hermitian.
pub fn gain_of(phases: &[f64], m: &GainMatrix) -> Result<f64> {
    if phases.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            actual: phases.len(),
        });
    }
    let q = m.quadratic_form(&unit_vector(phases));
    if q.im.abs() > 1e-8 * q.re.abs().max(1.0) {
        return Err(Error::InternalConsistency(format!(
            "gain has imaginary residue {:.3e}",
            q.im
        )));
    }
    Ok(q.re)
}

/// Coordinate-ascent stopping rule.
#[derive(Debug, Clone, Copy)]
pub struct CoordinateAscent {
    /// Stop when a sweep raises the gain by less than this, relatively.
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for CoordinateAscent {
    fn default() -> Self {
        CoordinateAscent {
            rel_tol: 1e-10,
            max_sweeps: 10_000,
        }
    }
}

impl CoordinateAscent {
    pub fn run(&self, m: &GainMatrix, init: &PhaseProfile) -> Result<PhaseProfile> {
        self.run_inner(m, init, None)
    }

    /// Like [`CoordinateAscent::run`], also returning the running gain after
    /// every single-coordinate update.
    pub fn run_traced(&self, m: &GainMatrix, init: &PhaseProfile) -> Result<(PhaseProfile, Vec<f64>)> {
        let mut trace = Vec::new();
        let p = self.run_inner(m, init, Some(&mut trace))?;
        Ok((p, trace))
    }

    fn run_inner(&self, m: &GainMatrix, init: &PhaseProfile, mut trace: Option<&mut Vec<f64>>) -> Result<PhaseProfile> {
        let n = m.dim();
        if init.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: init.len(),
            });
        }
        let a = &m.matrix;
        let mut p = init.elements();
        // w = M p, kept current through rank-one column updates
        let mut w: Vec<Complex64> = (a * DVector::from_column_slice(&p)).as_slice().to_vec();
        let mut gain = init.gain;

        for _ in 0..self.max_sweeps {
            let start = gain;
            for j in 0..n {
                let s = w[j] - a[(j, j)] * p[j];
                let mag = s.norm();
                if mag == 0.0 {
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(gain);
                    }
                    continue;
                }
                let new = s / mag;
                let delta = new - p[j];
                // ζ changes by 2 Re(conj(Δp_j) s_j)
                gain += 2.0 * (delta.conj() * s).re;
                p[j] = new;
                for (wi, col) in w.iter_mut().zip(a.column(j).iter()) {
                    *wi += col * delta;
                }
                if let Some(t) = trace.as_deref_mut() {
                    t.push(gain);
                }
            }
            if gain - start <= self.rel_tol * gain.abs() {
                break;
            }
        }
        let phases: Vec<f64> = p.iter().map(|c| c.arg()).collect();
        PhaseProfile::evaluate(&phases, m, OptimMethod::CoordinateAscent)
    }
}

/// Coordinate ascent with the exact per-coordinate maximizer
/// `p_m ← s_m/|s_m|`, `s_m = Σ_{k≠m} M_mk p_k`, from `init`.
pub fn optimize_coordinate_ascent(m: &GainMatrix, init: &PhaseProfile) -> Result<PhaseProfile> {
    CoordinateAscent::default().run(m, init)
}

/// Best of the `N_r` Fourier profiles `ψ_p = -2π m p / N_r`.
/// Ties go to the lowest `m`.
pub fn dft_phase_profile(m: &GainMatrix) -> Result<PhaseProfile> {
    let n = m.dim();
    let mut best: Option<PhaseProfile> = None;
    for k in 0..n {
        let phases: Vec<f64> = (0..n)
            .map(|p| -2.0 * PI * ((k * p) % n) as f64 / n as f64)
            .collect();
        let cand = PhaseProfile::evaluate(&phases, m, OptimMethod::FourierAsymptotic)?;
        if best.as_ref().is_none_or(|b| cand.gain > b.gain) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one Fourier candidate"))
}

/// Closed-form optimum for two elements: `ψ_1 − ψ_0 = −arg(M_01)`, gain
/// `1 + |c_1|`.
pub fn closed_form_two(m: &GainMatrix) -> Result<PhaseProfile> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: m.dim(),
        });
    }
    let offset = -m.entry(0, 1).arg();
    PhaseProfile::evaluate(&[0.0, offset], m, OptimMethod::ClosedForm2)
}

/// Full optimizer settings.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerOptions {
    pub ascent: CoordinateAscent,
    /// Random restarts on top of the DFT-initialized run.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            ascent: CoordinateAscent::default(),
            restarts: 5,
            seed: 0,
        }
    }
}

/// Coordinate ascent from the best DFT profile plus seeded random
/// restarts; returns the best stationary point found.
pub fn optimize_phases(m: &GainMatrix, opts: &OptimizerOptions) -> Result<PhaseProfile> {
    let n = m.dim();
    let dft = dft_phase_profile(m)?;
    let mut starts = vec![dft];
    for r in 0..opts.restarts {
        let mut rng = stream_rng(opts.seed, r as u64);
        let phases: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
        starts.push(PhaseProfile::evaluate(&phases, m, OptimMethod::CoordinateAscent)?);
    }
    let results: Vec<Result<PhaseProfile>> = starts.par_iter().map(|s| opts.ascent.run(m, s)).collect();
    let mut best: Option<PhaseProfile> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.gain > b.gain) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Exhaustive search over `ψ_1..ψ_{N-1}` on a uniform grid (`ψ_0 = 0`).
pub fn brute_force_oracle(m: &GainMatrix, grid_points: usize) -> Result<PhaseProfile> {
    let n = m.dim();
    if n > BRUTE_FORCE_MAX_ELEMENTS {
        return Err(Error::BruteForceRefused {
            n_elements: n,
            limit: BRUTE_FORCE_MAX_ELEMENTS,
        });
    }
    if grid_points < 16 {
        return Err(Error::domain(format!("grid of {grid_points} points is below the minimum of 16")));
    }
    let grid: Vec<Complex64> = (0..grid_points)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / grid_points as f64))
        .collect();
    let a = &m.matrix;
    let diag: f64 = (0..n).map(|k| a[(k, k)].re).sum();

    let mut idx = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, idx.clone());
    let free = n.saturating_sub(1);
    let total = grid_points.pow(free as u32);
    for _ in 0..total {
        let mut off = 0.0;
        for k in 0..n {
            for l in (k + 1)..n {
                off += (grid[idx[k]].conj() * a[(k, l)] * grid[idx[l]]).re;
            }
        }
        let g = diag + 2.0 * off;
        if g > best.0 {
            best = (g, idx.clone());
        }
        // odometer over indices 1..n
        for d in (1..n).rev() {
            idx[d] += 1;
            if idx[d] < grid_points {
                break;
            }
            idx[d] = 0;
        }
    }
    let phases: Vec<f64> = best.1.iter().map(|&k| 2.0 * PI * k as f64 / grid_points as f64).collect();
    PhaseProfile::evaluate(&phases, m, OptimMethod::BruteForce)
}

/// Worst-case gap between the true optimum and the best point of a
/// `grid_points` grid: every angle is within `π/G` of the optimum, and the
/// second derivative of ζ along any direction is at most
/// `4 ‖δ‖_∞² Σ|M_kℓ|`.
pub fn grid_resolution_bound(m: &GainMatrix, grid_points: usize) -> f64 {
    let h = PI / grid_points as f64;
    2.0 * h * h * m.abs_sum()
}

/// Monte Carlo estimate of `E[max_Ψ |v^H Ψ h_r|²] = E[(Σ|h_m|)²] / N_r`,
/// the gain if phases were re-optimized for every channel realization.
pub fn instantaneous_benchmark(
    cov: &CovarianceMatrix,
    geom: &ArrayGeometry,
    samples: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    if samples < 1000 {
        return Err(Error::domain(format!("benchmark needs at least 1000 samples, got {samples}")));
    }
    let n = cov.dim();
    if geom.n_elements != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: geom.n_elements,
        });
    }
    let sampler = CovarianceSampler::new(cov);
    let values = sampler.map_draws(seed, samples, |h| {
        let s: f64 = h.iter().map(|x| x.norm()).sum();
        s * s / n as f64
    });
    Ok(MeanEstimate::from_samples(&values))
}
