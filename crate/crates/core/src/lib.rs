//! Thermalization timescales of the weakly nonintegrable quantum Ising chain:
//! Lyapunov times from operator-space Lanczos growth and ergodization times
//! from the passage-time statistics of a quenched expectation value.
//!
//! Numerical code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod ergodization;
pub mod error;
pub mod krylov;
pub mod model;
pub mod pauli;
pub mod runner;
pub mod scalar;
pub mod trig_sum;

pub use error::{Error, Result};

pub type PauliSumF64 = pauli::PauliSum<f64>;
pub type PauliSumF32 = pauli::PauliSum<f32>;
pub type DenseOperatorF64 = pauli::DenseOperator<f64>;
pub type DenseOperatorF32 = pauli::DenseOperator<f32>;
pub type ModelParamsF64 = model::ModelParams<f64>;
pub type ModelParamsF32 = model::ModelParams<f32>;
pub type LanczosResultF64 = krylov::LanczosResult<f64>;
pub type LanczosResultF32 = krylov::LanczosResult<f32>;
pub type LyapunovFitF64 = krylov::LyapunovFit<f64>;
pub type KrylovWaveF64 = krylov::KrylovWave<f64>;
pub type SpectrumDataF64 = ergodization::SpectrumData<f64>;
pub type SpectrumDataF32 = ergodization::SpectrumData<f32>;
pub type FluctuationSeriesF64 = ergodization::FluctuationSeries<f64>;
pub type ExcursionStatsF64 = ergodization::ExcursionStats<f64>;
pub type ScalingSeriesF64 = analysis::ScalingSeries<f64>;
pub type PowerLawFitF64 = analysis::PowerLawFit<f64>;
