//! Two-timescale beamforming gain of a uniform linear RIS.
//!
//! Pipeline: a power angular spectrum ([`pas`]) gives the element
//! correlations ([`correlation`]); their Hermitian-Toeplitz covariance
//! ([`toeplitz`]) caps the gain that statistically configured phase shifts
//! ([`phase`]) can reach; the average SNR and its Monte Carlo check live in
//! [`snr`].

pub mod correlation;
pub mod error;
pub mod pas;
pub mod phase;
pub mod quadrature;
pub mod sampling;
pub mod snr;
pub mod toeplitz;

pub use correlation::{
    correlation_approx, correlation_exact, correlation_sequence, wiener_class_check, ArrayGeometry,
    CorrelationSequence, CorrelationSource, Provenance, WienerCheck,
};
pub use error::{Error, Result};
pub use pas::{gaussian_q, PasFamily, PasModel};
pub use phase::{
    brute_force_oracle, closed_form_two, dft_phase_profile, gain_of, grid_resolution_bound, instantaneous_benchmark,
    optimize_coordinate_ascent, optimize_phases, steering_vector, GainMatrix, OptimMethod, OptimizerOptions,
    PhaseProfile,
};
pub use sampling::{sample_ms_ris_channel, MeanEstimate, RNG_NAME};
pub use snr::{average_snr_analytic, simulate_snr, SnrConfig, SnrSimulation};
pub use toeplitz::{
    bound_coth, bound_geometric, bound_sum_abs, bound_theta, build_covariance, family_bound, fourier_vector,
    lambda_max, spectral_summary, CovarianceMatrix, SpectralSummary,
};
