//! Wavelet phase reconstruction: a discretized continuous wavelet transform
//! with Cauchy wavelets, magnitude-only phase retrieval by phase gradient
//! heap integration, fast Griffin-Lim baselines, and numerical checks of the
//! underlying phase-magnitude relations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod dcwt;
pub mod error;
pub mod fglim;
pub mod gridio;
pub mod kernels;
pub mod metrics;
pub mod phase;
pub mod reconstruct;
pub mod verify;
pub mod wav;

pub use dcwt::{CoefficientGrid, FilterBankSpec, GridLayout, WaveletFrame};
pub use error::{Error, Result};
pub use kernels::{CauchyParams, KernelKind, Wavelet};
pub use phase::{MagnitudeGrid, PhaseDerivativeGrids, PhaseGrid};
