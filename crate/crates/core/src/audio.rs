//! In-memory audio clips and PCM WAV encoding.
//!
//! Decoding accepts RIFF/WAVE with 16-bit integer PCM or 32-bit IEEE float
//! samples, one or two channels. Stereo is downmixed to mono by the channel
//! mean. 16-bit samples are scaled by 1/32768, so the readable range is
//! [-1, 1). Encoding always writes 16-bit mono PCM.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Divisor used for 16-bit integer <-> amplitude conversion.
pub const PCM16_SCALE: f64 = 32768.0;

/// A mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
    pub source_id: Option<String>,
}

impl AudioClip {
    /// Builds a clip, rejecting a zero sample rate, an empty buffer or any
    /// non-finite sample.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Domain("sample_rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::Domain("audio clip has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Data(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            source_id: None,
        })
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = Some(id.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Replaces the samples while keeping rate and source tag. Callers must
    /// keep the buffer non-empty and finite.
    pub(crate) fn map_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
            source_id: self.source_id.clone(),
        }
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SampleCodec {
    Pcm16,
    Float32,
}

#[derive(Debug)]
struct FmtChunk {
    codec: SampleCodec,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(Error::Format(format!(
            "fmt chunk is {} bytes, need at least 16",
            body.len()
        )));
    }
    let mut format_tag = read_u16(body, 0);
    let channels = read_u16(body, 2);
    let sample_rate = read_u32(body, 4);
    let block_align = read_u16(body, 12);
    let bits = read_u16(body, 14);

    if format_tag == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) subformat GUID(16); the
        // first two GUID bytes carry the actual format tag.
        if body.len() < 40 {
            return Err(Error::Format("truncated WAVE_FORMAT_EXTENSIBLE fmt chunk".into()));
        }
        format_tag = read_u16(body, 24);
    }

    let codec = match (format_tag, bits) {
        (FORMAT_PCM, 16) => SampleCodec::Pcm16,
        (FORMAT_IEEE_FLOAT, 32) => SampleCodec::Float32,
        (FORMAT_PCM, b) | (FORMAT_IEEE_FLOAT, b) => {
            return Err(Error::UnsupportedFormat {
                field: "bits_per_sample",
                value: b.to_string(),
            })
        }
        (tag, _) => {
            return Err(Error::UnsupportedFormat {
                field: "format_tag",
                value: format!("{tag:#06x}"),
            })
        }
    };
    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedFormat {
            field: "channels",
            value: channels.to_string(),
        });
    }
    if sample_rate == 0 {
        return Err(Error::Format("sample_rate is zero".into()));
    }
    let bytes_per_sample = if codec == SampleCodec::Pcm16 { 2 } else { 4 };
    if usize::from(block_align) != bytes_per_sample * usize::from(channels) {
        return Err(Error::Format(format!(
            "block_align {block_align} inconsistent with {channels} channel(s) of {bits}-bit samples"
        )));
    }
    Ok(FmtChunk {
        codec,
        channels,
        sample_rate,
        block_align,
    })
}

/// Reads and decodes a WAV file; the clip's source id is the path.
pub fn read_wav_file(path: &std::path::Path) -> Result<AudioClip> {
    let bytes = std::fs::read(path)?;
    let clip = decode_wav(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(clip.with_source_id(path.display().to_string()))
}

/// Decodes a RIFF/WAVE byte buffer into a mono clip.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("missing RIFF/WAVE signature".into()));
    }
    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "chunk `{}` declares {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| Error::Format("missing fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("missing data chunk".into()))?;
    let frame = usize::from(fmt.block_align);
    if data.len() % frame != 0 {
        return Err(Error::Format(format!(
            "data chunk length {} is not a multiple of block_align {frame}",
            data.len()
        )));
    }
    let n_frames = data.len() / frame;
    if n_frames == 0 {
        return Err(Error::Format("data chunk is empty".into()));
    }

    let channels = usize::from(fmt.channels);
    let width = frame / channels;
    let decode_one = |at: usize| -> f64 {
        match fmt.codec {
            SampleCodec::Pcm16 => f64::from(read_u16(data, at) as i16) / PCM16_SCALE,
            SampleCodec::Float32 => f64::from(f32::from_bits(read_u32(data, at))),
        }
    };
    let mut samples = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let base = f * frame;
        let s = if channels == 1 {
            decode_one(base)
        } else {
            0.5 * (decode_one(base) + decode_one(base + width))
        };
        samples.push(s);
    }
    AudioClip::new(samples, fmt.sample_rate)
}

/// Result of [`encode_wav`]: the file bytes and how many samples fell
/// outside [-1, 1] and were clipped.
#[derive(Debug, Clone)]
pub struct EncodedWav {
    pub bytes: Vec<u8>,
    pub clipped: usize,
}

/// Quantizes one amplitude to 16-bit PCM. Returns the code and whether the
/// amplitude was outside [-1, 1].
pub fn quantize_pcm16(x: f64) -> (i16, bool) {
    let out_of_range = !(-1.0..=1.0).contains(&x);
    let code = (x * PCM16_SCALE).round().clamp(-32768.0, 32767.0);
    (code as i16, out_of_range)
}

/// Encodes a clip as a canonical 44-byte-header 16-bit mono PCM WAV file.
pub fn encode_wav(clip: &AudioClip) -> EncodedWav {
    let n = clip.len();
    let data_len = (n * 2) as u32;
    let mut bytes = Vec::with_capacity(44 + n * 2);
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&clip.sample_rate().to_le_bytes());
    bytes.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    bytes.extend_from_slice(&2u16.to_le_bytes());
    bytes.extend_from_slice(&16u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&data_len.to_le_bytes());
    let mut clipped = 0;
    for &s in clip.samples() {
        let (code, out) = quantize_pcm16(s);
        clipped += usize::from(out);
        bytes.extend_from_slice(&code.to_le_bytes());
    }
    if clipped > 0 {
        log::warn!("encode_wav: clipped {clipped} sample(s) outside [-1, 1]");
    }
    EncodedWav { bytes, clipped }
}

/// Pure sine: sample i = amplitude * sin(2*pi*freq*i/sample_rate), with
/// round(duration * sample_rate) samples.
pub fn synth_tone(freq: f64, duration: f64, sample_rate: u32, amplitude: f64) -> Result<AudioClip> {
    let nyquist = f64::from(sample_rate) / 2.0;
    if !(freq > 0.0 && freq < nyquist) {
        return Err(Error::Domain(format!(
            "tone frequency {freq} Hz must lie in (0, {nyquist}) Hz"
        )));
    }
    if !(duration > 0.0) || !amplitude.is_finite() {
        return Err(Error::Domain(format!(
            "duration must be positive and amplitude finite (got {duration}, {amplitude})"
        )));
    }
    let n = (duration * f64::from(sample_rate)).round() as usize;
    let step = 2.0 * PI * freq / f64::from(sample_rate);
    let samples = (0..n).map(|i| amplitude * (step * i as f64).sin()).collect();
    AudioClip::new(samples, sample_rate)
}

/// Linear chirp from `f0` to `f1` Hz over `duration` seconds. Time-asymmetric
/// by construction, which makes it the fixture for reversal tests.
pub fn synth_chirp(f0: f64, f1: f64, duration: f64, sample_rate: u32, amplitude: f64) -> Result<AudioClip> {
    let nyquist = f64::from(sample_rate) / 2.0;
    if !(f0 > 0.0 && f1 > 0.0 && f0 < nyquist && f1 < nyquist) || !(duration > 0.0) {
        return Err(Error::Domain(format!(
            "chirp {f0}..{f1} Hz over {duration} s invalid at {sample_rate} Hz"
        )));
    }
    let n = (duration * f64::from(sample_rate)).round() as usize;
    let sr = f64::from(sample_rate);
    let k = (f1 - f0) / duration;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            amplitude * (2.0 * PI * (f0 * t + 0.5 * k * t * t)).sin()
        })
        .collect();
    AudioClip::new(samples, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav_header(format_tag: u16, channels: u16, sr: u32, bits: u16, data: &[u8]) -> Vec<u8> {
        let block_align = channels * bits / 8;
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        b.extend_from_slice(b"WAVE");
        b.extend_from_slice(b"fmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&format_tag.to_le_bytes());
        b.extend_from_slice(&channels.to_le_bytes());
        b.extend_from_slice(&sr.to_le_bytes());
        b.extend_from_slice(&(sr * u32::from(block_align)).to_le_bytes());
        b.extend_from_slice(&block_align.to_le_bytes());
        b.extend_from_slice(&bits.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&(data.len() as u32).to_le_bytes());
        b.extend_from_slice(data);
        b
    }

    #[test]
    fn one_second_mono_48k() {
        let data = vec![0u8; 48000 * 2];
        let clip = decode_wav(&wav_header(1, 1, 48000, 16, &data)).unwrap();
        assert_eq!(clip.len(), 48000);
        assert_eq!(clip.sample_rate(), 48000);
    }

    #[test]
    fn stereo_opposite_channels_cancel() {
        let mut data = Vec::new();
        for _ in 0..100 {
            data.extend_from_slice(&0.5f32.to_le_bytes());
            data.extend_from_slice(&(-0.5f32).to_le_bytes());
        }
        let clip = decode_wav(&wav_header(3, 2, 16000, 32, &data)).unwrap();
        assert!(clip.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn most_negative_int16_is_minus_one() {
        let data = (-32768i16).to_le_bytes();
        let clip = decode_wav(&wav_header(1, 1, 8000, 16, &data)).unwrap();
        assert_eq!(clip.samples(), &[-1.0]);
    }

    #[test]
    fn unsupported_fields_are_named() {
        let err = decode_wav(&wav_header(1, 1, 8000, 24, &[0; 6])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat { field: "bits_per_sample", .. }));
        let err = decode_wav(&wav_header(2, 1, 8000, 16, &[0; 6])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat { field: "format_tag", .. }));
        let err = decode_wav(&wav_header(1, 3, 8000, 16, &[0; 6])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat { field: "channels", .. }));
    }

    #[test]
    fn malformed_headers() {
        assert!(matches!(decode_wav(b"RIFX0000WAVE"), Err(Error::Format(_))));
        assert!(matches!(decode_wav(b""), Err(Error::Format(_))));
        let mut b = wav_header(1, 1, 8000, 16, &[0; 4]);
        b.truncate(b.len() - 2);
        assert!(matches!(decode_wav(&b), Err(Error::Format(_))));
    }

    #[test]
    fn encode_sizes_and_clipping() {
        let clip = AudioClip::new(vec![0.0, 0.5, -0.5], 16000).unwrap();
        let enc = encode_wav(&clip);
        assert_eq!(enc.bytes.len(), 50);
        assert_eq!(enc.clipped, 0);

        let loud = AudioClip::new(vec![1.5, -0.25], 16000).unwrap();
        let enc = encode_wav(&loud);
        assert_eq!(enc.clipped, 1);
        assert_eq!(i16::from_le_bytes([enc.bytes[44], enc.bytes[45]]), 32767);
    }

    #[test]
    fn tone_fixtures() {
        let t = synth_tone(440.0, 1.0, 16000, 1.0).unwrap();
        assert_eq!(t.len(), 16000);
        assert_eq!(t.samples()[0], 0.0);

        let q = synth_tone(4000.0, 1.0, 16000, 1.0).unwrap();
        for (i, &s) in q.samples().iter().take(400).enumerate() {
            let expect = [0.0, 1.0, 0.0, -1.0][i % 4];
            assert!((s - expect).abs() < 1e-9, "sample {i}: {s}");
        }

        let r = synth_tone(440.0, 2.0, 16000, 0.8).unwrap();
        let rms = (r.samples().iter().map(|s| s * s).sum::<f64>() / r.len() as f64).sqrt();
        assert!((rms - 0.8 / 2f64.sqrt()).abs() < 1e-3);

        assert!(matches!(synth_tone(8000.0, 1.0, 16000, 1.0), Err(Error::Domain(_))));
        assert!(matches!(synth_tone(0.0, 1.0, 16000, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn clip_invariants() {
        assert!(AudioClip::new(vec![], 8000).is_err());
        assert!(AudioClip::new(vec![0.0], 0).is_err());
        assert!(AudioClip::new(vec![f64::NAN], 8000).is_err());
    }
}
