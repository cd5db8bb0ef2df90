//! Variable-density Fourier sampling driven by local Fourier-Haar coherence.
//!
//! The crate provides the image model ([`image`]), the Haar and Fourier
//! transforms ([`transforms`]), exact and analytic local coherence
//! ([`coherence`]), sampling densities and plans ([`sampling`]), TV and
//! l1-Haar reconstruction ([`solvers`]), and small-scale numerical checks of
//! the coherence and RIP structure ([`verify`]).

pub mod coherence;
pub mod error;
pub mod image;
pub mod phantom;
pub mod sampling;
pub mod solvers;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use image::{best_s_term_error, gradient, hard_threshold, lp_norm, tv_norm, GradientField, Image};
pub use num_complex::Complex64;
pub use sampling::{Density, SamplingPlan};
pub use solvers::{NoiseModel, SolverOptions, SolverReport};
pub use transforms::{FrequencyIndex, HaarCoeffs, HaarIndex, Spectrum};
