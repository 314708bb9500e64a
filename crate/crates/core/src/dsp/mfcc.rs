use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dct::DctPlan;
use super::fft::{next_power_of_two, FftPlan};
use super::mel::{mel_filterbank, MelFilterbank};
use super::stft::{check_framing, frame_count, frame_magnitudes, hann_window};
use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Added to mel energies before the log so silent frames stay finite.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfccConfig {
    pub n_mfcc: usize,
    pub frame_length: usize,
    pub hop_length: usize,
    pub n_mels: usize,
    pub f_min: f64,
    /// Upper filterbank edge; `None` means the Nyquist frequency of the clip.
    pub f_max: Option<f64>,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            n_mfcc: 13,
            frame_length: 2048,
            hop_length: 512,
            n_mels: 26,
            f_min: 0.0,
            f_max: None,
        }
    }
}

/// MFCCs, row-major with one row per coefficient and one column per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    pub coeffs: Vec<f64>,
    pub n_mfcc: usize,
    pub n_frames: usize,
    pub config: MfccConfig,
}

impl MfccMatrix {
    pub fn get(&self, coeff: usize, frame: usize) -> f64 {
        self.coeffs[coeff * self.n_frames + frame]
    }

    pub fn row(&self, coeff: usize) -> &[f64] {
        &self.coeffs[coeff * self.n_frames..(coeff + 1) * self.n_frames]
    }

    /// One line per coefficient, comma-separated frames, shortest
    /// round-trip decimal formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in 0..self.n_mfcc {
            let line: Vec<String> = self.row(c).iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Reusable MFCC pipeline for one configuration and sample rate.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    config: MfccConfig,
    sample_rate: u32,
    window: Vec<f64>,
    fft: FftPlan,
    filterbank: MelFilterbank,
    dct: DctPlan,
}

impl MfccExtractor {
    pub fn new(config: MfccConfig, sample_rate: u32) -> Result<Self> {
        if config.n_mfcc == 0 {
            return Err(Error::Config("n_mfcc must be at least 1".into()));
        }
        if config.n_mfcc > config.n_mels {
            return Err(Error::Config(format!(
                "n_mfcc ({}) cannot exceed n_mels ({})",
                config.n_mfcc, config.n_mels
            )));
        }
        if config.frame_length == 0 || config.hop_length == 0 {
            return Err(Error::Config("frame and hop lengths must be positive".into()));
        }
        let n_fft = next_power_of_two(config.frame_length);
        let f_max = config.f_max.unwrap_or(f64::from(sample_rate) / 2.0);
        let filterbank = mel_filterbank(config.n_mels, n_fft / 2 + 1, sample_rate, config.f_min, f_max)?;
        Ok(Self {
            config,
            sample_rate,
            window: hann_window(config.frame_length),
            fft: FftPlan::new(n_fft)?,
            filterbank,
            dct: DctPlan::new(config.n_mels, config.n_mfcc)?,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// MFCCs of every frame of `clip`.
    pub fn compute(&self, clip: &AudioClip) -> Result<MfccMatrix> {
        self.compute_frames(clip, usize::MAX)
    }

    /// MFCCs of at most the first `max_frames` frames.
    pub fn compute_frames(&self, clip: &AudioClip, max_frames: usize) -> Result<MfccMatrix> {
        if clip.sample_rate() != self.sample_rate {
            return Err(Error::Config(format!(
                "extractor built for {} Hz given a {} Hz clip",
                self.sample_rate,
                clip.sample_rate()
            )));
        }
        let cfg = &self.config;
        check_framing(clip.len(), cfg.frame_length, cfg.hop_length)?;
        let n_frames = frame_count(clip.len(), cfg.frame_length, cfg.hop_length).min(max_frames);
        let n_fft = self.fft.len();
        let mut scratch = vec![Complex64::new(0.0, 0.0); n_fft];
        let mut mags = vec![0.0; n_fft / 2 + 1];
        let mut energies = vec![0.0; cfg.n_mels];
        let mut cepstrum = vec![0.0; cfg.n_mfcc];
        let mut coeffs = vec![0.0; cfg.n_mfcc * n_frames];
        for f in 0..n_frames {
            let start = f * cfg.hop_length;
            let frame = &clip.samples()[start..start + cfg.frame_length];
            frame_magnitudes(frame, &self.window, &self.fft, &mut scratch, &mut mags)?;
            self.filterbank.apply_into(&mags, &mut energies);
            for e in energies.iter_mut() {
                *e = (*e + LOG_FLOOR).ln();
            }
            self.dct.apply_into(&energies, &mut cepstrum);
            for (c, &v) in cepstrum.iter().enumerate() {
                coeffs[c * n_frames + f] = v;
            }
        }
        Ok(MfccMatrix {
            coeffs,
            n_mfcc: cfg.n_mfcc,
            n_frames,
            config: *cfg,
        })
    }
}

/// One-shot MFCC computation; builds the filterbank and plans for this call.
pub fn mfcc(clip: &AudioClip, config: &MfccConfig) -> Result<MfccMatrix> {
    MfccExtractor::new(*config, clip.sample_rate())?.compute(clip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{synth_chirp, synth_tone};
    use crate::dsp::dct2;

    fn cfg() -> MfccConfig {
        MfccConfig {
            n_mfcc: 13,
            frame_length: 512,
            hop_length: 256,
            n_mels: 26,
            f_min: 0.0,
            f_max: None,
        }
    }

    #[test]
    fn thirteen_rows() {
        let clip = synth_tone(440.0, 0.5, 16000, 0.5).unwrap();
        let m = mfcc(&clip, &cfg()).unwrap();
        assert_eq!(m.n_mfcc, 13);
        assert_eq!(m.coeffs.len(), 13 * m.n_frames);
        assert!(m.coeffs.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn polarity_flip_is_exact() {
        let clip = synth_chirp(200.0, 3000.0, 0.5, 16000, 0.7).unwrap();
        let neg = AudioClip::new(clip.samples().iter().map(|s| -s).collect(), 16000).unwrap();
        assert_eq!(mfcc(&clip, &cfg()).unwrap(), mfcc(&neg, &cfg()).unwrap());
    }

    #[test]
    fn silence_is_constant_log_floor() {
        let clip = AudioClip::new(vec![0.0; 4000], 16000).unwrap();
        let m = mfcc(&clip, &cfg()).unwrap();
        let expect = dct2(&[LOG_FLOOR.ln(); 26], 13).unwrap();
        for f in 0..m.n_frames {
            assert!((m.get(0, f) - expect[0]).abs() < 1e-9);
            for c in 1..13 {
                assert_eq!(m.get(c, f), 0.0);
            }
        }
    }

    #[test]
    fn n_mfcc_above_n_mels_rejected() {
        let mut c = cfg();
        c.n_mfcc = 30;
        let clip = synth_tone(440.0, 0.5, 16000, 0.5).unwrap();
        assert!(matches!(mfcc(&clip, &c), Err(Error::Config(_))));
    }

    #[test]
    fn csv_has_row_per_coefficient() {
        let clip = synth_tone(440.0, 0.2, 16000, 0.5).unwrap();
        let m = mfcc(&clip, &cfg()).unwrap();
        let csv = m.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 13);
        let parsed: Vec<f64> = lines[3].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed, m.row(3));
    }
}
