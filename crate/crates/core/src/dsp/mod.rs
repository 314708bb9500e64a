//! Signal-processing kernels: radix-2 FFT, STFT, mel filterbank, DCT-II and
//! the MFCC composition built from them.
//!
//! Everything here is a pure function of its inputs. Plans ([`FftPlan`],
//! [`DctPlan`], [`MelFilterbank`], [`MfccExtractor`]) only cache tables and
//! are immutable once built, so they can be shared across threads.

mod dct;
mod fft;
mod mel;
mod mfcc;
mod stft;

pub use dct::{dct2, idct2, DctPlan};
pub use fft::{fft, ifft, is_power_of_two, next_power_of_two, FftPlan};
pub use mel::{inverse_mel_scale, mel_filterbank, mel_scale, MelFilterbank};
pub use mfcc::{mfcc, MfccConfig, MfccExtractor, MfccMatrix, LOG_FLOOR};
pub use stft::{hann_window, stft, Spectrogram, Window};

pub use num_complex::Complex64;
