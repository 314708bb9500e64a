//! Clip preprocessing and the fixed-size MFCC feature window.
//!
//! A clip goes through per-clip z-score loudness normalization, centered
//! zero padding to the pipeline's target length, and MFCC extraction with a
//! hop chosen so that exactly [`N_FRAMES`] frames are kept. The resulting
//! `n_mfcc x 26` window is z-scored over all of its entries.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::dataset::{EmotionLabel, SampleRecord};
use crate::dsp::{MfccConfig, MfccExtractor};
use crate::error::{Error, Result};

/// Number of frame columns in every feature window.
pub const N_FRAMES: usize = 26;

pub const DEFAULT_N_MFCC: usize = 13;
pub const DEFAULT_FRAME_LENGTH: usize = 2048;
pub const DEFAULT_N_MELS: usize = 26;

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Z-scores a buffer; zero spread maps to all zeros.
fn standardize(values: &[f64]) -> Vec<f64> {
    let (mean, std) = mean_std(values);
    if !(std > 0.0) || !std.is_finite() {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

/// Per-clip z-score: (x - mean) / std. A constant clip becomes all zeros.
pub fn normalize_loudness(clip: &AudioClip) -> AudioClip {
    clip.map_samples(standardize(clip.samples()))
}

/// Zero-pads to `target` samples, ceil(pad/2) at the head and floor(pad/2)
/// at the tail.
pub fn pad_to_length(clip: &AudioClip, target: usize) -> Result<AudioClip> {
    let len = clip.len();
    if len > target {
        return Err(Error::Length { actual: len, target });
    }
    let pad = target - len;
    let head = pad.div_ceil(2);
    let mut samples = vec![0.0; target];
    samples[head..head + len].copy_from_slice(clip.samples());
    Ok(clip.map_samples(samples))
}

/// Center crop to `target` samples, dropping ceil(excess/2) from the head.
pub fn truncate_to_length(clip: &AudioClip, target: usize) -> Result<AudioClip> {
    if target == 0 {
        return Err(Error::Domain("cannot truncate to zero samples".into()));
    }
    let len = clip.len();
    if len <= target {
        return Ok(clip.clone());
    }
    let head = (len - target).div_ceil(2);
    Ok(clip.map_samples(clip.samples()[head..head + target].to_vec()))
}

/// Pads or truncates to exactly `target` samples.
pub fn fit_to_length(clip: &AudioClip, target: usize) -> Result<AudioClip> {
    if clip.len() > target {
        truncate_to_length(clip, target)
    } else {
        pad_to_length(clip, target)
    }
}

/// Time reversal.
pub fn augment_reverse(clip: &AudioClip) -> AudioClip {
    let mut s = clip.samples().to_vec();
    s.reverse();
    clip.map_samples(s)
}

/// Polarity flip.
pub fn augment_invert(clip: &AudioClip) -> AudioClip {
    clip.map_samples(clip.samples().iter().map(|x| -x).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Augmentations {
    pub reverse: bool,
    pub invert: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_mfcc: usize,
    /// Length every clip is padded to, normally the longest clip of the
    /// training manifest.
    pub target_length: usize,
    pub frame_length: usize,
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: Option<f64>,
    pub augmentations: Augmentations,
}

impl PipelineConfig {
    /// Default configuration for `n_mfcc` coefficients; the mel band count
    /// is raised to `max(26, n_mfcc)`.
    pub fn new(n_mfcc: usize, target_length: usize) -> Result<Self> {
        let cfg = Self {
            n_mfcc,
            target_length,
            frame_length: DEFAULT_FRAME_LENGTH,
            n_mels: DEFAULT_N_MELS.max(n_mfcc),
            f_min: 0.0,
            f_max: None,
            augmentations: Augmentations::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_frame_length(mut self, frame_length: usize) -> Result<Self> {
        self.frame_length = frame_length;
        self.validate()?;
        Ok(self)
    }

    /// Target length from the longest clip of a manifest.
    pub fn target_from_lengths(lengths: impl IntoIterator<Item = usize>) -> Result<usize> {
        lengths
            .into_iter()
            .max()
            .ok_or_else(|| Error::Config("cannot derive target length from an empty manifest".into()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_mfcc == 0 {
            return Err(Error::Config("n_mfcc must be at least 1".into()));
        }
        if self.n_mels < self.n_mfcc {
            return Err(Error::Config(format!(
                "n_mels ({}) must be at least n_mfcc ({})",
                self.n_mels, self.n_mfcc
            )));
        }
        if self.frame_length == 0 || self.target_length < self.frame_length {
            return Err(Error::Config(format!(
                "target_length ({}) must be at least frame_length ({})",
                self.target_length, self.frame_length
            )));
        }
        if self.hop_length() == 0 {
            return Err(Error::Config(format!(
                "target_length {} with frame_length {} cannot produce {N_FRAMES} frames",
                self.target_length, self.frame_length
            )));
        }
        Ok(())
    }

    /// floor((target - frame) / 25), which yields at least 26 frames.
    pub fn hop_length(&self) -> usize {
        (self.target_length.saturating_sub(self.frame_length)) / (N_FRAMES - 1)
    }

    pub fn mfcc_config(&self) -> MfccConfig {
        MfccConfig {
            n_mfcc: self.n_mfcc,
            frame_length: self.frame_length,
            hop_length: self.hop_length(),
            n_mels: self.n_mels,
            f_min: self.f_min,
            f_max: self.f_max,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.n_mfcc * N_FRAMES
    }
}

/// `n_mfcc x 26` MFCC window, row-major (row = coefficient).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    matrix: Vec<f64>,
    n_mfcc: usize,
    standardized: bool,
}

impl FeatureWindow {
    pub fn new(matrix: Vec<f64>, n_mfcc: usize, standardized: bool) -> Result<Self> {
        if n_mfcc == 0 || matrix.len() != n_mfcc * N_FRAMES {
            return Err(Error::Shape(format!(
                "window buffer of {} values is not {n_mfcc} x {N_FRAMES}",
                matrix.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("feature window contains non-finite values".into()));
        }
        Ok(Self {
            matrix,
            n_mfcc,
            standardized,
        })
    }

    pub fn n_mfcc(&self) -> usize {
        self.n_mfcc
    }

    pub fn n_frames(&self) -> usize {
        N_FRAMES
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn get(&self, coeff: usize, frame: usize) -> f64 {
        self.matrix[coeff * N_FRAMES + frame]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.matrix
    }

    /// Row-major flattening; entry (i, j) lands at i * 26 + j.
    pub fn flatten(&self) -> Vec<f64> {
        self.matrix.clone()
    }
}

pub fn flatten(window: &FeatureWindow) -> Vec<f64> {
    window.flatten()
}

/// Builds feature windows for one [`PipelineConfig`], caching an MFCC
/// extractor per sample rate.
#[derive(Debug)]
pub struct FeatureExtractor {
    config: PipelineConfig,
    cache: RwLock<HashMap<u32, Arc<MfccExtractor>>>,
}

impl FeatureExtractor {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn extractor_for(&self, sample_rate: u32) -> Result<Arc<MfccExtractor>> {
        if let Some(e) = self.cache.read().expect("extractor cache poisoned").get(&sample_rate) {
            return Ok(Arc::clone(e));
        }
        let built = Arc::new(MfccExtractor::new(self.config.mfcc_config(), sample_rate)?);
        let mut cache = self.cache.write().expect("extractor cache poisoned");
        Ok(Arc::clone(cache.entry(sample_rate).or_insert(built)))
    }

    /// Window of a clip that is already normalized and padded to the target
    /// length. A silent clip, or one whose MFCCs have no spread, yields the
    /// all-zero window.
    pub fn make_feature_window(&self, clip: &AudioClip) -> Result<FeatureWindow> {
        let cfg = &self.config;
        if clip.len() != cfg.target_length {
            return Err(Error::Config(format!(
                "clip has {} samples, pipeline expects exactly {}",
                clip.len(),
                cfg.target_length
            )));
        }
        if clip.samples().iter().all(|&s| s == 0.0) {
            return FeatureWindow::new(vec![0.0; cfg.input_dim()], cfg.n_mfcc, true);
        }
        let mfcc = self.extractor_for(clip.sample_rate())?.compute_frames(clip, N_FRAMES)?;
        if mfcc.n_frames < N_FRAMES {
            return Err(Error::Config(format!(
                "only {} frames produced, need {N_FRAMES}",
                mfcc.n_frames
            )));
        }
        FeatureWindow::new(standardize(&mfcc.coeffs), cfg.n_mfcc, true)
    }

    /// normalize -> pad -> window, for a clip no longer than the target.
    pub fn extract(&self, clip: &AudioClip) -> Result<FeatureWindow> {
        let padded = pad_to_length(&normalize_loudness(clip), self.config.target_length)?;
        self.make_feature_window(&padded)
    }

    /// normalize -> pad or center-crop -> window.
    pub fn extract_fitted(&self, clip: &AudioClip) -> Result<FeatureWindow> {
        let fitted = fit_to_length(&normalize_loudness(clip), self.config.target_length)?;
        self.make_feature_window(&fitted)
    }
}

/// A labelled window as stored in the feature cache.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: String,
    pub label: EmotionLabel,
    pub window: FeatureWindow,
}

/// Counts from expanding a manifest with augmentations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AugmentationReport {
    pub originals: usize,
    pub reversed: usize,
    pub inverted: usize,
    /// Inverted windows bit-identical to their source window. Polarity flip
    /// leaves magnitude spectra unchanged, so this is expected to equal
    /// `inverted`; such samples are kept and flagged, not dropped.
    pub inverted_duplicates: usize,
}

impl AugmentationReport {
    pub fn total(&self) -> usize {
        self.originals + self.reversed + self.inverted
    }

    pub fn summary(&self) -> String {
        format!(
            "originals={} reversed={} inverted={} total={} inverted_duplicates_of_original={}",
            self.originals,
            self.reversed,
            self.inverted,
            self.total(),
            self.inverted_duplicates
        )
    }
}

/// Extracts windows for every (record, clip) pair, adding reversed and
/// inverted copies per the pipeline's augmentation set. Output order is
/// original, then `#rev`, then `#inv`, per input record.
pub fn build_feature_records(
    extractor: &FeatureExtractor,
    items: &[(SampleRecord, AudioClip)],
) -> Result<(Vec<FeatureRecord>, AugmentationReport)> {
    let aug = extractor.config().augmentations;
    let per_item: Vec<Result<Vec<(FeatureRecord, bool)>>> = items
        .par_iter()
        .map(|(rec, clip)| {
            let original = extractor.extract(clip)?;
            let mut out = Vec::with_capacity(3);
            if aug.reverse {
                let w = extractor.extract(&augment_reverse(clip))?;
                out.push((
                    FeatureRecord {
                        id: format!("{}#rev", rec.id),
                        label: rec.label,
                        window: w,
                    },
                    false,
                ));
            }
            if aug.invert {
                let w = extractor.extract(&augment_invert(clip))?;
                let dup = w == original;
                out.push((
                    FeatureRecord {
                        id: format!("{}#inv", rec.id),
                        label: rec.label,
                        window: w,
                    },
                    dup,
                ));
            }
            out.insert(
                0,
                (
                    FeatureRecord {
                        id: rec.id.clone(),
                        label: rec.label,
                        window: original,
                    },
                    false,
                ),
            );
            Ok(out)
        })
        .collect();
    let mut records = Vec::new();
    let mut report = AugmentationReport::default();
    for group in per_item {
        for (r, dup) in group? {
            if r.id.ends_with("#rev") {
                report.reversed += 1;
            } else if r.id.ends_with("#inv") {
                report.inverted += 1;
                report.inverted_duplicates += usize::from(dup);
            } else {
                report.originals += 1;
            }
            records.push(r);
        }
    }
    if report.inverted_duplicates > 0 {
        log::warn!(
            "{} of {} inverted windows duplicate their originals",
            report.inverted_duplicates,
            report.inverted
        );
    }
    Ok((records, report))
}

const CACHE_MAGIC: &[u8; 8] = b"SERFEAT\0";
const CACHE_VERSION: u32 = 1;

/// Writes the binary feature cache.
///
/// Layout, all little-endian: 8-byte magic `SERFEAT\0`, u32 version, u32
/// record count; then per record u16 id length, id bytes (UTF-8), u8 label
/// code, u32 n_mfcc, u32 n_frames, and `n_mfcc * n_frames` f32 values in
/// row-major order.
pub fn write_feature_cache<W: Write>(mut out: W, records: &[FeatureRecord]) -> Result<()> {
    out.write_all(CACHE_MAGIC)?;
    out.write_all(&CACHE_VERSION.to_le_bytes())?;
    let count = u32::try_from(records.len()).map_err(|_| Error::Data("too many records".into()))?;
    out.write_all(&count.to_le_bytes())?;
    for r in records {
        let id = r.id.as_bytes();
        let id_len = u16::try_from(id.len()).map_err(|_| Error::Data(format!("id `{}` too long", r.id)))?;
        out.write_all(&id_len.to_le_bytes())?;
        out.write_all(id)?;
        out.write_all(&[r.label.code() as u8])?;
        out.write_all(&(r.window.n_mfcc() as u32).to_le_bytes())?;
        out.write_all(&(N_FRAMES as u32).to_le_bytes())?;
        for &v in r.window.as_slice() {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated feature cache: {e}")))?;
    Ok(buf)
}

pub fn read_feature_cache<R: Read>(mut input: R) -> Result<Vec<FeatureRecord>> {
    let magic: [u8; 8] = read_exact(&mut input)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Format("not a feature cache (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_exact(&mut input)?);
    if version != CACHE_VERSION {
        return Err(Error::UnsupportedFormat {
            field: "feature_cache_version",
            value: version.to_string(),
        });
    }
    let count = u32::from_le_bytes(read_exact(&mut input)?) as usize;
    let mut records = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let id_len = u16::from_le_bytes(read_exact(&mut input)?) as usize;
        let mut id = vec![0u8; id_len];
        input
            .read_exact(&mut id)
            .map_err(|e| Error::Format(format!("truncated feature cache: {e}")))?;
        let id = String::from_utf8(id).map_err(|_| Error::Format("record id is not UTF-8".into()))?;
        let [code] = read_exact::<1, _>(&mut input)?;
        let label = EmotionLabel::from_code(usize::from(code))?;
        let n_mfcc = u32::from_le_bytes(read_exact(&mut input)?) as usize;
        let n_frames = u32::from_le_bytes(read_exact(&mut input)?) as usize;
        if n_frames != N_FRAMES {
            return Err(Error::Format(format!("record `{id}` has {n_frames} frames, expected {N_FRAMES}")));
        }
        let mut matrix = Vec::with_capacity(n_mfcc * n_frames);
        for _ in 0..n_mfcc * n_frames {
            matrix.push(f64::from(f32::from_le_bytes(read_exact(&mut input)?)));
        }
        records.push(FeatureRecord {
            id,
            label,
            window: FeatureWindow::new(matrix, n_mfcc, true)?,
        });
    }
    Ok(records)
}

/// `id,label,path,split` rows accompanying a feature cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifestRow {
    pub id: String,
    pub label: EmotionLabel,
    pub path: String,
    pub split: Option<crate::dataset::Split>,
}

pub fn write_feature_manifest<W: Write>(out: W, rows: &[FeatureManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_manifest<R: Read>(input: R) -> Result<Vec<FeatureManifestRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    Ok(rdr.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}
