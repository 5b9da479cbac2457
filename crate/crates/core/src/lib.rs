//! Pairwise upconversion of broadband photon pairs with a controlled
//! signal/idler delay: spectral amplitude, delay traces, and dispersion
//! optimization.

// `!(x < y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delayscan;
pub mod dispersion;
pub mod error;
pub mod grid;
pub mod kv;
pub mod materials;
pub mod phasematch;
pub mod quadrature;
pub mod runner;
pub mod scalar;
pub mod scenario;
pub mod spdc;

pub use error::Error;
pub use scalar::Real;

pub type CrystalSpecF64 = phasematch::CrystalSpec<f64>;
pub type CrystalSpecF32 = phasematch::CrystalSpec<f32>;
pub type MaterialModelF64 = materials::MaterialModel<f64>;
pub type MaterialModelF32 = materials::MaterialModel<f32>;
pub type MaterialLibraryF64 = materials::MaterialLibrary<f64>;
pub type MaterialLibraryF32 = materials::MaterialLibrary<f32>;
pub type SpectralPhaseF64 = materials::SpectralPhase<f64>;
pub type SpectralAmplitudeF64 = spdc::SpectralAmplitude<f64>;
pub type SpectralAmplitudeF32 = spdc::SpectralAmplitude<f32>;
pub type PairSourceF64 = spdc::PairSource<f64>;
pub type UpconversionTraceF64 = delayscan::UpconversionTrace<f64>;
pub type UpconversionTraceF32 = delayscan::UpconversionTrace<f32>;
pub type TraceMetricsF64 = delayscan::TraceMetrics<f64>;
pub type ElementChainF64 = dispersion::ElementChain<f64>;
pub type OptimizationResultF64 = dispersion::OptimizationResult<f64>;
pub type RunOutputF64 = runner::RunOutput<f64>;
