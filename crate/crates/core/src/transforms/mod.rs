//! Haar and Fourier bases.

pub mod fft;
pub mod fourier;
pub mod haar;

pub use fourier::{
    all_frequencies, dft2_forward, dft2_inverse, fourier_atom, frequency_range, partial_dft, partial_dft_adjoint, Dft2,
    FrequencyIndex, Spectrum,
};
pub use haar::{
    all_haar_indices, haar_atom_1d, haar_atom_2d, haar_forward, haar_inverse, haar_matrix, HaarCoeffs, HaarIndex,
    Orientation,
};
