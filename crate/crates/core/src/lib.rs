//! Four-level rubidium vapor model with a strong D2 pump and a weak D1 probe:
//! master-equation dynamics, steady states and Doppler-averaged probe
//! gain/absorption spectra, including buffer-gas fine-structure transfer and
//! wall-collision ground-state relaxation.

// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod liouville;
pub mod params;
pub mod rates;
pub mod spectrum;

pub use error::{Error, Result};
pub use liouville::{
    build_liouvillian, coherence_eq4, component_rhs, evolve, rhs, steady_state, EvolveControls, GeneratorMode,
    Liouvillian, Trajectory,
};
pub use params::{DensityMatrix, DopplerNormalization, QuadratureRule, SpectrumParams, SystemParams};
pub use spectrum::{
    closed_form_susceptibility, doppler_average, spectrum, spectrum_with_jobs, susceptibility_at, SusceptibilityReading,
    SpectrumResult,
};
