use crate::error::{Error, Result};

/// Hz to mel: 2595 * log10(1 + f / 700).
pub fn mel_scale(f: f64) -> Result<f64> {
    if !(f >= 0.0) || !f.is_finite() {
        return Err(Error::Domain(format!("frequency {f} Hz must be finite and >= 0")));
    }
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

/// Mel to Hz: 700 * (10^(m / 2595) - 1).
pub fn inverse_mel_scale(m: f64) -> Result<f64> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::Domain(format!("mel value {m} must be finite and >= 0")));
    }
    Ok(700.0 * (10f64.powf(m / 2595.0) - 1.0))
}

/// Triangular filters equally spaced on the mel axis, row-major
/// `n_mels x n_bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Vec<f64>,
    /// Per row, the half-open range of bins with non-zero weight.
    support: Vec<(usize, usize)>,
    centers_hz: Vec<f64>,
    n_mels: usize,
    n_bins: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub sample_rate: u32,
}

impl MelFilterbank {
    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.weights[j * self.n_bins..(j + 1) * self.n_bins]
    }

    /// Analytic center (peak) frequency of each filter in Hz.
    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Mel-band energies of one magnitude frame.
    pub fn apply_into(&self, magnitudes: &[f64], out: &mut [f64]) {
        debug_assert_eq!(magnitudes.len(), self.n_bins);
        for (j, o) in out.iter_mut().enumerate().take(self.n_mels) {
            let (lo, hi) = self.support[j];
            let row = &self.row(j)[lo..hi];
            *o = row.iter().zip(&magnitudes[lo..hi]).map(|(w, m)| w * m).sum();
        }
    }

    pub fn apply(&self, magnitudes: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_mels];
        self.apply_into(magnitudes, &mut out);
        out
    }
}

/// Builds `n_mels` triangular filters over `n_fft_bins` one-sided FFT bins
/// (so the transform size is `2 * (n_fft_bins - 1)`).
///
/// The `n_mels + 2` break frequencies are equally spaced in mel between
/// `mel(f_min)` and `mel(f_max)`. Filter j rises from break j to break j+1
/// and falls to break j+2; each row is then scaled so its largest sampled
/// weight is exactly 1. A filter too narrow to cover any bin is a config
/// error.
pub fn mel_filterbank(
    n_mels: usize,
    n_fft_bins: usize,
    sample_rate: u32,
    f_min: f64,
    f_max: f64,
) -> Result<MelFilterbank> {
    let nyquist = f64::from(sample_rate) / 2.0;
    if n_mels == 0 {
        return Err(Error::Domain("n_mels must be at least 1".into()));
    }
    if n_fft_bins < 2 {
        return Err(Error::Domain(format!("need at least 2 FFT bins, got {n_fft_bins}")));
    }
    if !(f_min >= 0.0 && f_min < f_max) {
        return Err(Error::Domain(format!("require 0 <= f_min < f_max, got {f_min}..{f_max}")));
    }
    if f_max > nyquist {
        return Err(Error::Domain(format!("f_max {f_max} Hz exceeds Nyquist {nyquist} Hz")));
    }
    let mel_lo = mel_scale(f_min)?;
    let mel_hi = mel_scale(f_max)?;
    let step = (mel_hi - mel_lo) / (n_mels + 1) as f64;
    let breaks = (0..n_mels + 2)
        .map(|i| inverse_mel_scale(mel_lo + step * i as f64))
        .collect::<Result<Vec<_>>>()?;

    let n_fft = 2 * (n_fft_bins - 1);
    let bin_hz = f64::from(sample_rate) / n_fft as f64;
    let mut weights = vec![0.0; n_mels * n_fft_bins];
    let mut support = Vec::with_capacity(n_mels);
    for j in 0..n_mels {
        let (lo, center, hi) = (breaks[j], breaks[j + 1], breaks[j + 2]);
        let row = &mut weights[j * n_fft_bins..(j + 1) * n_fft_bins];
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            *w = if f > lo && f <= center {
                (f - lo) / (center - lo)
            } else if f > center && f < hi {
                (hi - f) / (hi - center)
            } else {
                0.0
            };
        }
        let peak = row.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::Config(format!(
                "mel filter {j} ({lo:.1}..{hi:.1} Hz) covers no FFT bin; use fewer mel bands or a longer frame"
            )));
        }
        for w in row.iter_mut() {
            *w /= peak;
        }
        let first = row.iter().position(|&w| w > 0.0).unwrap_or(0);
        let last = row.iter().rposition(|&w| w > 0.0).map_or(0, |p| p + 1);
        support.push((first, last));
    }
    Ok(MelFilterbank {
        weights,
        support,
        centers_hz: breaks[1..=n_mels].to_vec(),
        n_mels,
        n_bins: n_fft_bins,
        f_min,
        f_max,
        sample_rate,
    })
}
