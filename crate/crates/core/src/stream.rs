//! Sliding-window streaming inference.
//!
//! Audio arrives in arbitrary chunks. A ring buffer keeps the most recent
//! `window_seconds` of samples; event `k` fires once the absolute sample
//! count reaches `window + k * hop`, so the number and content of events
//! depend only on the audio, never on chunk sizes or processing speed.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;
use std::sync::mpsc::sync_channel;
use std::thread;
use std::time::Instant;

use serde::Serialize;

use crate::audio::{AudioClip, PCM16_SCALE};
use crate::container;
use crate::dataset::{EmotionLabel, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::eval::Classifier;
use crate::features::{FeatureExtractor, PipelineConfig};
use crate::nn::{read_checkpoint, softmax, CnnModel};
use crate::svm::{argmax_lowest, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamConfig {
    pub window_seconds: f64,
    pub hop_seconds: f64,
    pub emit: EmitFormat,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            window_seconds: 3.0,
            hop_seconds: 0.5,
            emit: EmitFormat::Text,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hop_seconds > 0.0 && self.hop_seconds <= self.window_seconds && self.window_seconds.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < hop ({}) <= window ({})",
                self.hop_seconds, self.window_seconds
            )));
        }
        Ok(())
    }
}

/// Either trained model, with the pipeline it was trained under.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Svm(SvmModel),
    Cnn(CnnModel),
}

impl LoadedModel {
    /// Reads an SVM or CNN model file, recognised by its magic bytes.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(container::SVM_MAGIC) {
            Ok(Self::Svm(SvmModel::read(bytes)?))
        } else if bytes.starts_with(container::CNN_MAGIC) {
            Ok(Self::Cnn(read_checkpoint(bytes)?.0))
        } else {
            Err(Error::Format("not an SVM model or CNN checkpoint".into()))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn pipeline(&self) -> Option<PipelineConfig> {
        match self {
            Self::Svm(m) => m.pipeline,
            Self::Cnn(m) => m.pipeline,
        }
    }

    pub fn classifier(&self) -> &dyn Classifier {
        match self {
            Self::Svm(m) => m,
            Self::Cnn(m) => m,
        }
    }

    /// Class probabilities. SVM decision values are mapped through softmax
    /// (classes never trained get probability 0).
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let scores = self.classifier().scores(x)?;
        Ok(match self {
            Self::Svm(_) => softmax(&scores),
            Self::Cnn(_) => scores,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamEvent {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub probs: [f64; NUM_CLASSES],
    pub label: EmotionLabel,
    pub latency_ms: f64,
}

impl StreamEvent {
    /// Equality ignoring the wall-clock latency.
    pub fn same_result(&self, other: &StreamEvent) -> bool {
        self.index == other.index
            && self.t_start == other.t_start
            && self.t_end == other.t_end
            && self.probs == other.probs
            && self.label == other.label
    }

    pub fn to_text(&self) -> String {
        format!(
            "[{:>8.3}s - {:>8.3}s] {:<9} p={:.3} latency={:.2}ms",
            self.t_start,
            self.t_end,
            self.label.name(),
            self.probs[self.label.code()],
            self.latency_ms
        )
    }
}

pub const STREAM_CSV_HEADER: [&str; 12] = [
    "t_start", "t_end", "p0", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "label", "latency_ms",
];

pub fn write_events_csv<W: Write>(out: W, events: &[StreamEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STREAM_CSV_HEADER)?;
    for e in events {
        let mut rec = vec![format!("{:.6}", e.t_start), format!("{:.6}", e.t_end)];
        rec.extend(e.probs.iter().map(|p| format!("{p:.9}")));
        rec.push(e.label.name().to_string());
        rec.push(format!("{:.3}", e.latency_ms));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Ring-buffered sliding-window classifier.
pub struct StreamEngine {
    model: LoadedModel,
    extractor: FeatureExtractor,
    sample_rate: u32,
    window_samples: usize,
    hop_samples: usize,
    ring: VecDeque<f64>,
    total_samples: u64,
    next_end: u64,
    emitted: usize,
    /// Odd trailing byte of a PCM16 byte feed.
    pending_byte: Option<u8>,
    busy_seconds: f64,
}

impl StreamEngine {
    pub fn new(model: LoadedModel, cfg: &StreamConfig, sample_rate: u32) -> Result<Self> {
        cfg.validate()?;
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        let pipeline = model
            .pipeline()
            .ok_or_else(|| Error::Config("model carries no feature pipeline configuration".into()))?;
        let dim = model.classifier().input_dim();
        if dim != pipeline.input_dim() {
            return Err(Error::Config(format!(
                "model expects {dim} features but its pipeline (n_mfcc={}) produces {}",
                pipeline.n_mfcc,
                pipeline.input_dim()
            )));
        }
        let window_samples = (cfg.window_seconds * f64::from(sample_rate)).round() as usize;
        let hop_samples = (cfg.hop_seconds * f64::from(sample_rate)).round() as usize;
        if hop_samples == 0 || window_samples == 0 {
            return Err(Error::Config("window and hop must each span at least one sample".into()));
        }
        Ok(Self {
            model,
            extractor: FeatureExtractor::new(pipeline)?,
            sample_rate,
            window_samples,
            hop_samples,
            ring: VecDeque::with_capacity(window_samples),
            total_samples: 0,
            next_end: window_samples as u64,
            emitted: 0,
            pending_byte: None,
            busy_seconds: 0.0,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    /// Number of events a stream of `n` samples produces.
    pub fn expected_events(&self, n: u64) -> usize {
        let w = self.window_samples as u64;
        if n < w {
            0
        } else {
            ((n - w) / self.hop_samples as u64 + 1) as usize
        }
    }

    fn classify_window(&mut self) -> Result<StreamEvent> {
        let started = Instant::now();
        let samples: Vec<f64> = self.ring.iter().copied().collect();
        let clip = AudioClip::new(samples, self.sample_rate)?;
        let window = self.extractor.extract_fitted(&clip)?;
        let probs_vec = self.model.probabilities(window.as_slice())?;
        let mut probs = [0.0; NUM_CLASSES];
        probs.copy_from_slice(&probs_vec);
        let label = EmotionLabel::from_code(argmax_lowest(&probs))?;
        let sr = f64::from(self.sample_rate);
        let t_end = self.next_end as f64 / sr;
        let elapsed = started.elapsed().as_secs_f64();
        self.busy_seconds += elapsed;
        let event = StreamEvent {
            index: self.emitted,
            t_start: t_end - self.window_samples as f64 / sr,
            t_end,
            probs,
            label,
            latency_ms: elapsed * 1e3,
        };
        self.emitted += 1;
        self.next_end += self.hop_samples as u64;
        Ok(event)
    }

    /// Appends samples and returns every event whose window became complete.
    pub fn push_samples(&mut self, mut samples: &[f64]) -> Result<Vec<StreamEvent>> {
        let mut events = Vec::new();
        while !samples.is_empty() {
            let room = (self.next_end - self.total_samples) as usize;
            let take = room.min(samples.len());
            for &s in &samples[..take] {
                if self.ring.len() == self.window_samples {
                    self.ring.pop_front();
                }
                self.ring.push_back(s);
            }
            self.total_samples += take as u64;
            samples = &samples[take..];
            if self.total_samples == self.next_end {
                events.push(self.classify_window()?);
            }
        }
        Ok(events)
    }

    /// Little-endian PCM16 byte feed; an odd trailing byte is held until the
    /// next chunk.
    pub fn push_pcm16_bytes(&mut self, bytes: &[u8]) -> Result<Vec<StreamEvent>> {
        let mut samples = Vec::with_capacity(bytes.len() / 2 + 1);
        let mut rest = bytes;
        if let Some(lo) = self.pending_byte.take() {
            match rest.split_first() {
                Some((&hi, tail)) => {
                    samples.push(f64::from(i16::from_le_bytes([lo, hi])) / PCM16_SCALE);
                    rest = tail;
                }
                None => {
                    self.pending_byte = Some(lo);
                    return Ok(Vec::new());
                }
            }
        }
        let mut pairs = rest.chunks_exact(2);
        for p in &mut pairs {
            samples.push(f64::from(i16::from_le_bytes([p[0], p[1]])) / PCM16_SCALE);
        }
        if let [b] = pairs.remainder() {
            self.pending_byte = Some(*b);
        }
        self.push_samples(&samples)
    }

    pub fn busy_seconds(&self) -> f64 {
        self.busy_seconds
    }
}

/// End-of-stream statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamSummary {
    pub events: usize,
    pub audio_seconds: f64,
    pub processing_seconds: f64,
    /// processing time / audio duration
    pub rtf: f64,
    pub latency_p50_ms: f64,
    pub latency_p95_ms: f64,
    pub latency_max_ms: f64,
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

impl StreamSummary {
    pub fn new(events: &[StreamEvent], audio_seconds: f64, processing_seconds: f64) -> Self {
        let lat: Vec<f64> = events.iter().map(|e| e.latency_ms).collect();
        Self {
            events: events.len(),
            audio_seconds,
            processing_seconds,
            rtf: if audio_seconds > 0.0 { processing_seconds / audio_seconds } else { 0.0 },
            latency_p50_ms: percentile(&lat, 50.0),
            latency_p95_ms: percentile(&lat, 95.0),
            latency_max_ms: lat.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "events={} audio={:.3}s processing={:.3}s rtf={:.4} latency_ms p50={:.2} p95={:.2} max={:.2}",
            self.events,
            self.audio_seconds,
            self.processing_seconds,
            self.rtf,
            self.latency_p50_ms,
            self.latency_p95_ms,
            self.latency_max_ms
        )
    }
}

/// Runs a producer thread that sends `chunks` through a bounded queue of
/// `queue_capacity` while this thread classifies. `on_event` sees each
/// event as soon as it is produced.
pub fn run_stream<I, F>(
    mut engine: StreamEngine,
    chunks: I,
    queue_capacity: usize,
    mut on_event: F,
) -> Result<(Vec<StreamEvent>, StreamSummary)>
where
    I: IntoIterator<Item = Vec<f64>> + Send + 'static,
    I::IntoIter: Send,
    F: FnMut(&StreamEvent) -> Result<()>,
{
    let (tx, rx) = sync_channel::<Vec<f64>>(queue_capacity.max(1));
    let producer = thread::spawn(move || {
        for chunk in chunks {
            if tx.send(chunk).is_err() {
                break;
            }
        }
    });
    let mut events = Vec::new();
    let mut failure = None;
    for chunk in rx {
        match engine.push_samples(&chunk) {
            Ok(new) => {
                for e in new {
                    if let Err(err) = on_event(&e) {
                        failure = Some(err);
                        break;
                    }
                    events.push(e);
                }
            }
            Err(err) => failure = Some(err),
        }
        if failure.is_some() {
            break;
        }
    }
    producer
        .join()
        .map_err(|_| Error::State("audio producer thread panicked".into()))?;
    if let Some(err) = failure {
        return Err(err);
    }
    let audio_seconds = engine.total_samples() as f64 / f64::from(engine.sample_rate());
    let summary = StreamSummary::new(&events, audio_seconds, engine.busy_seconds());
    Ok((events, summary))
}

/// Streams a whole clip in chunks of `chunk_samples`.
pub fn stream_clip(
    model: LoadedModel,
    cfg: &StreamConfig,
    clip: &AudioClip,
    chunk_samples: usize,
) -> Result<(Vec<StreamEvent>, StreamSummary)> {
    if chunk_samples == 0 {
        return Err(Error::Config("chunk size must be at least one sample".into()));
    }
    let engine = StreamEngine::new(model, cfg, clip.sample_rate())?;
    let chunks: Vec<Vec<f64>> = clip.samples().chunks(chunk_samples).map(<[f64]>::to_vec).collect();
    run_stream(engine, chunks, 8, |_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{train_multiclass, KernelSpec, MulticlassStrategy, SolverConfig};

    fn toy_model(sr: u32) -> LoadedModel {
        let pipeline = PipelineConfig::new(13, sr as usize * 3).unwrap();
        let x: Vec<Vec<f64>> = (0..4)
            .map(|c| (0..pipeline.input_dim()).map(|i| ((i * (c + 1)) % 7) as f64 - 3.0).collect())
            .collect();
        let y = EmotionLabel::ALL[..4].to_vec();
        let mut m = train_multiclass(&x, &y, &KernelSpec::rbf(), MulticlassStrategy::Ovr, &SolverConfig::default()).unwrap();
        m.pipeline = Some(pipeline);
        LoadedModel::Svm(m)
    }

    #[test]
    fn config_validation() {
        assert!(StreamConfig { hop_seconds: 0.0, ..Default::default() }.validate().is_err());
        assert!(StreamConfig { hop_seconds: 4.0, ..Default::default() }.validate().is_err());
        assert!(StreamConfig::default().validate().is_ok());
    }

    #[test]
    fn pipeline_mismatch_rejected() {
        let LoadedModel::Svm(mut m) = toy_model(4000) else { unreachable!() };
        m.pipeline = Some(PipelineConfig::new(20, 12_000).unwrap());
        assert!(matches!(
            StreamEngine::new(LoadedModel::Svm(m), &StreamConfig::default(), 4000),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn event_count_and_silence() {
        let sr = 4000;
        let clip = AudioClip::new(vec![0.0; sr as usize * 10], sr).unwrap();
        let (events, summary) = stream_clip(toy_model(sr), &StreamConfig::default(), &clip, 500).unwrap();
        assert_eq!(events.len(), 15);
        assert_eq!(events[0].t_end, 3.0);
        assert_eq!(events[14].t_end, 10.0);
        assert!(events.windows(2).all(|w| w[0].probs == w[1].probs));
        for e in &events {
            assert!((e.probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        assert_eq!(summary.events, 15);
    }

    #[test]
    fn pcm_bytes_with_odd_chunks() {
        let sr = 4000;
        let samples: Vec<i16> = (0..sr as i32 * 4).map(|i| ((i * 37) % 2000 - 1000) as i16).collect();
        let bytes: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
        let mut a = StreamEngine::new(toy_model(sr), &StreamConfig::default(), sr).unwrap();
        let mut b = StreamEngine::new(toy_model(sr), &StreamConfig::default(), sr).unwrap();
        let ea: Vec<StreamEvent> = bytes.chunks(7).flat_map(|c| a.push_pcm16_bytes(c).unwrap()).collect();
        let eb = b.push_pcm16_bytes(&bytes).unwrap();
        assert_eq!(ea.len(), 3);
        assert!(ea.iter().zip(&eb).all(|(x, y)| x.same_result(y)));
    }

    #[test]
    fn percentiles() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0), 50.0);
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&[3.0], 95.0), 3.0);
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_events_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), "t_start,t_end,p0,p1,p2,p3,p4,p5,p6,p7,label,latency_ms");
    }
}
