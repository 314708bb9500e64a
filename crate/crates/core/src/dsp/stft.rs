use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::{next_power_of_two, FftPlan};
use crate::audio::AudioClip;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hann,
}

/// Periodic Hann window, w[n] = 0.5 - 0.5 cos(2 pi n / N).
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Magnitude STFT, row-major `n_frames x n_bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<f64>,
    pub n_frames: usize,
    pub n_bins: usize,
    pub frame_length: usize,
    pub hop_length: usize,
    /// Transform size after zero-padding the frame to a power of two.
    pub n_fft: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn frame(&self, i: usize) -> &[f64] {
        &self.magnitudes[i * self.n_bins..(i + 1) * self.n_bins]
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * f64::from(self.sample_rate) / self.n_fft as f64
    }
}

pub(crate) fn frame_count(len: usize, frame_length: usize, hop_length: usize) -> usize {
    1 + (len - frame_length) / hop_length
}

pub(crate) fn check_framing(len: usize, frame_length: usize, hop_length: usize) -> Result<()> {
    if frame_length == 0 || hop_length == 0 {
        return Err(Error::Domain(format!(
            "frame_length ({frame_length}) and hop_length ({hop_length}) must be positive"
        )));
    }
    if len < frame_length {
        return Err(Error::Domain(format!(
            "clip of {len} samples is shorter than one {frame_length}-sample frame"
        )));
    }
    Ok(())
}

/// Computes the magnitude of one windowed, zero-padded frame into `out`.
pub(crate) fn frame_magnitudes(
    frame: &[f64],
    window: &[f64],
    plan: &FftPlan,
    scratch: &mut [Complex64],
    out: &mut [f64],
) -> Result<()> {
    for (i, z) in scratch.iter_mut().enumerate() {
        *z = match (frame.get(i), window.get(i)) {
            (Some(&x), Some(&w)) => Complex64::new(x * w, 0.0),
            _ => Complex64::new(0.0, 0.0),
        };
    }
    plan.forward(scratch)?;
    for (o, z) in out.iter_mut().zip(scratch.iter()) {
        *o = z.norm();
    }
    Ok(())
}

/// Short-time Fourier transform magnitudes.
///
/// Frames are `frame_length` samples long, advanced by `hop_length`, Hann
/// windowed and zero-padded to the next power of two `n_fft`. Bins cover
/// 0..=n_fft/2, which is `frame_length/2 + 1` bins whenever the frame length
/// is itself a power of two.
pub fn stft(clip: &AudioClip, frame_length: usize, hop_length: usize, window: Window) -> Result<Spectrogram> {
    check_framing(clip.len(), frame_length, hop_length)?;
    let n_fft = next_power_of_two(frame_length);
    let plan = FftPlan::new(n_fft)?;
    let win = match window {
        Window::Hann => hann_window(frame_length),
    };
    let n_frames = frame_count(clip.len(), frame_length, hop_length);
    let n_bins = n_fft / 2 + 1;
    let mut magnitudes = vec![0.0; n_frames * n_bins];
    let mut scratch = vec![Complex64::new(0.0, 0.0); n_fft];
    for (f, out) in magnitudes.chunks_exact_mut(n_bins).enumerate() {
        let start = f * hop_length;
        let frame = &clip.samples()[start..start + frame_length];
        frame_magnitudes(frame, &win, &plan, &mut scratch, out)?;
    }
    Ok(Spectrogram {
        magnitudes,
        n_frames,
        n_bins,
        frame_length,
        hop_length,
        n_fft,
        sample_rate: clip.sample_rate(),
    })
}
