//! One-dimensional signal primitives: smoothing, wavelet decomposition and
//! scalar energy/entropy measures. All functions are pure.

mod measures;
mod savgol;
mod wavelet;

pub use measures::{shannon_entropy, signal_energy, DEFAULT_ENTROPY_BINS};
pub use savgol::{savitzky_golay, savitzky_golay_last};
pub use wavelet::{dwt_decompose, dwt_reconstruct, min_length, Wavelet, WaveletCoeffs};
