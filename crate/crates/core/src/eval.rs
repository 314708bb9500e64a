//! Metrics, model evaluation and the SVM MFCC-count sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{stratified_split, EmotionLabel, SampleRecord, Split, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::nn::CnnModel;
use crate::svm::{train_multiclass, KernelKind, KernelSpec, MulticlassStrategy, SolverConfig, SvmModel};

/// Square count matrix, rows = true class, columns = predicted class.
pub type Confusion = [[usize; NUM_CLASSES]; NUM_CLASSES];

pub fn confusion_matrix(truth: &[EmotionLabel], predicted: &[EmotionLabel]) -> Result<Confusion> {
    if truth.len() != predicted.len() {
        return Err(Error::Data(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut m = [[0; NUM_CLASSES]; NUM_CLASSES];
    for (t, p) in truth.iter().zip(predicted) {
        m[t.code()][p.code()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Per-class precision, recall and F1 of an `n x n` count matrix. Empty
/// rows or columns give 0 rather than a division error.
pub fn precision_recall_f1<R: AsRef<[usize]>>(confusion: &[R]) -> Vec<ClassMetrics> {
    let n = confusion.len();
    (0..n)
        .map(|c| {
            let tp = confusion[c].as_ref()[c] as f64;
            let row: usize = confusion[c].as_ref().iter().sum();
            let col: usize = confusion.iter().map(|r| r.as_ref()[c]).sum();
            let precision = if col > 0 { tp / col as f64 } else { 0.0 };
            let recall = if row > 0 { tp / row as f64 } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: row,
            }
        })
        .collect()
}

/// Position of `label` when scores are sorted descending, ties ordered by
/// lower class index first.
fn rank_of(scores: &[f64], label: usize) -> usize {
    let s = scores[label];
    scores
        .iter()
        .enumerate()
        .filter(|&(j, &v)| v > s || (v == s && j < label))
        .count()
}

/// Fraction of rows whose true label is among the `k` highest scores.
pub fn top_k_accuracy(scores: &[Vec<f64>], truth: &[usize], k: usize) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::Data(format!("{} score rows for {} labels", scores.len(), truth.len())));
    }
    if scores.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for (row, &t) in scores.iter().zip(truth) {
        if t >= row.len() {
            return Err(Error::Data(format!("label {t} out of range for {} classes", row.len())));
        }
        if rank_of(row, t) < k {
            hits += 1;
        }
    }
    Ok(hits as f64 / scores.len() as f64)
}

/// Area under the ROC curve of `scores` for positives vs negatives, with
/// tied scores counted as one half (Mann-Whitney statistic). `None` when
/// either side is empty.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if positive[k] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub confusion: Confusion,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    /// `top_k[k - 1]` is top-k accuracy for k = 1..=8.
    pub top_k: Vec<f64>,
    /// One-vs-rest AUC per class; `None` for classes without positives.
    pub roc_auc: Vec<Option<f64>>,
    pub n_samples: usize,
}

impl MetricsReport {
    pub fn from_scores(scores: &[Vec<f64>], truth: &[EmotionLabel]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Config("cannot evaluate on an empty split".into()));
        }
        if let Some(row) = scores.iter().find(|r| r.len() != NUM_CLASSES) {
            return Err(Error::Shape(format!("score rows must have {NUM_CLASSES} entries, got {}", row.len())));
        }
        let truth_codes: Vec<usize> = truth.iter().map(|l| l.code()).collect();
        let predicted = scores
            .iter()
            .map(|s| EmotionLabel::from_code(crate::svm::argmax_lowest(s)))
            .collect::<Result<Vec<_>>>()?;
        let confusion = confusion_matrix(truth, &predicted)?;
        let per_class = precision_recall_f1(&confusion);
        let n = truth.len();
        let trace: usize = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
        let top_k = (1..=NUM_CLASSES)
            .map(|k| top_k_accuracy(scores, &truth_codes, k))
            .collect::<Result<Vec<_>>>()?;
        let roc_auc = (0..NUM_CLASSES)
            .map(|c| {
                let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
                let pos: Vec<bool> = truth_codes.iter().map(|&t| t == c).collect();
                roc_auc(&s, &pos)
            })
            .collect();
        Ok(Self {
            confusion,
            per_class,
            accuracy: trace as f64 / n as f64,
            top_k,
            roc_auc,
            n_samples: n,
        })
    }

    /// Recall pooled over all classes (sum of diagonals over all samples).
    pub fn micro_recall(&self) -> f64 {
        let tp: usize = (0..NUM_CLASSES).map(|c| self.confusion[c][c]).sum();
        let all: usize = self.per_class.iter().map(|m| m.support).sum();
        tp as f64 / all as f64
    }

    pub fn write_confusion_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(EmotionLabel::ALL.iter().map(|l| l.name().to_string()));
        w.write_record(&header)?;
        for (label, row) in EmotionLabel::ALL.iter().zip(&self.confusion) {
            let mut rec = vec![label.name().to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_per_class_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["class", "precision", "recall", "f1", "support"])?;
        for (label, m) in EmotionLabel::ALL.iter().zip(&self.per_class) {
            w.write_record([
                label.name().to_string(),
                format!("{:.6}", m.precision),
                format!("{:.6}", m.recall),
                format!("{:.6}", m.f1),
                m.support.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples: {}  accuracy: {:.4}", self.n_samples, self.accuracy);
        let topk: Vec<String> = self.top_k.iter().enumerate().map(|(k, v)| format!("top{}={:.4}", k + 1, v)).collect();
        let _ = writeln!(s, "{}", topk.join(" "));
        let _ = writeln!(s, "{:<10}{:>10}{:>10}{:>10}{:>9}{:>9}", "class", "precision", "recall", "f1", "support", "auc");
        for ((label, m), auc) in EmotionLabel::ALL.iter().zip(&self.per_class).zip(&self.roc_auc) {
            let _ = writeln!(
                s,
                "{:<10}{:>10.4}{:>10.4}{:>10.4}{:>9}{:>9}",
                label.name(),
                m.precision,
                m.recall,
                m.f1,
                m.support,
                auc.map_or("-".to_string(), |a| format!("{a:.4}"))
            );
        }
        s
    }
}

/// Anything that maps a flattened feature window to eight class scores.
pub trait Classifier: Sync {
    fn input_dim(&self) -> usize;
    /// Scores indexed by label code; larger means more likely.
    fn scores(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl Classifier for SvmModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.predict(x)?.1)
    }
}

impl Classifier for CnnModel {
    fn input_dim(&self) -> usize {
        self.input_shape().iter().product()
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.predict(x)?;
        if p.len() != NUM_CLASSES {
            return Err(Error::Shape(format!("model emits {} classes, expected {NUM_CLASSES}", p.len())));
        }
        Ok(p)
    }
}

/// Scores every input and builds the full report.
pub fn evaluate_model<C: Classifier + ?Sized>(model: &C, inputs: &[Vec<f64>], truth: &[EmotionLabel]) -> Result<MetricsReport> {
    if inputs.len() != truth.len() {
        return Err(Error::Data(format!("{} inputs but {} labels", inputs.len(), truth.len())));
    }
    if let Some(x) = inputs.iter().find(|x| x.len() != model.input_dim()) {
        return Err(Error::Config(format!(
            "feature dimension {} does not match the model's {}",
            x.len(),
            model.input_dim()
        )));
    }
    let scores = inputs
        .par_iter()
        .map(|x| model.scores(x))
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::from_scores(&scores, truth)
}

/// Published reference results for the same protocol. Displayed next to
/// observed values for context; never used as a pass/fail bound.
pub const REFERENCE_RESULTS: &[(&str, f64)] = &[
    ("cnn_top1_accuracy", 0.85),
    ("svm_accuracy", 0.4811),
    ("cnn_recall_angry", 0.868),
    ("cnn_recall_disgust", 0.78),
    ("cnn_recall_calm", 0.72),
];

/// `metric | reference | observed | delta` table for whichever metrics were
/// observed.
pub fn comparison_table(observed: &BTreeMap<String, f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<22}{:>11}{:>11}{:>9}", "metric", "reference", "observed", "delta");
    for (name, reference) in REFERENCE_RESULTS {
        match observed.get(*name) {
            Some(v) => {
                let _ = writeln!(s, "{name:<22}{reference:>11.4}{v:>11.4}{:>+9.4}", v - reference);
            }
            None => {
                let _ = writeln!(s, "{name:<22}{reference:>11.4}{:>11}{:>9}", "-", "-");
            }
        }
    }
    s
}

fn kernel_name(kind: KernelKind) -> &'static str {
    match kind {
        KernelKind::Linear => "linear",
        KernelKind::Rbf => "rbf",
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kernels: Vec<KernelSpec>,
    pub n_mfcc: Vec<usize>,
    /// One split seed per run.
    pub seeds: Vec<u64>,
    pub ratios: [f64; 3],
    pub strategy: MulticlassStrategy,
    pub solver: SolverConfig,
}

impl SweepConfig {
    /// Both kernels at C = 10, `runs` seeds starting at `base_seed`, 60/20/20
    /// split.
    pub fn new(n_mfcc: Vec<usize>, runs: usize, base_seed: u64) -> Self {
        Self {
            kernels: vec![KernelSpec::rbf(), KernelSpec::linear()],
            n_mfcc,
            seeds: (0..runs as u64).map(|r| base_seed.wrapping_add(r)).collect(),
            ratios: [0.6, 0.2, 0.2],
            strategy: MulticlassStrategy::Ovr,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub kernel: &'static str,
    pub n_mfcc: usize,
    pub run: usize,
    pub seed: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMean {
    pub kernel: &'static str,
    pub n_mfcc: usize,
    pub runs: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub raw: Vec<SweepRow>,
    pub means: Vec<SweepMean>,
}

impl SweepResult {
    pub fn best(&self) -> Option<&SweepMean> {
        self.means
            .iter()
            .max_by(|a, b| a.mean_accuracy.total_cmp(&b.mean_accuracy).then(b.n_mfcc.cmp(&a.n_mfcc)))
    }

    pub fn write_raw_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.raw {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_mean_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.means {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses `start:end:step` into the inclusive list of points.
pub fn parse_range(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("range must be start:end:step with positive integers, got `{spec}`"));
    let [a, b, c] = parts[..] else { return Err(bad()) };
    let (start, end, step): (usize, usize, usize) = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
        c.trim().parse().map_err(|_| bad())?,
    );
    if start == 0 || step == 0 || end < start {
        return Err(bad());
    }
    Ok((start..=end).step_by(step).collect())
}

/// Extra n_mfcc points always added to a sweep: the default 13 and the
/// best-reported 100.
pub const SWEEP_EXTRA_POINTS: [usize; 2] = [13, 100];

/// Range points plus `extras`, sorted and deduplicated.
pub fn sweep_points(range: &[usize], extras: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = range.iter().chain(extras).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// For every n_mfcc point, kernel and run: split with the run's seed, train
/// on the train part and score accuracy on the test part.
///
/// `features_for(n_mfcc)` must return one flattened window per record, in
/// record order. Points are extracted one at a time; the (kernel, run) jobs
/// within a point run in parallel, and results are merged by key so the
/// output order is fixed.
pub fn run_svm_sweep<F>(records: &[SampleRecord], features_for: F, cfg: &SweepConfig) -> Result<SweepResult>
where
    F: Fn(usize) -> Result<Vec<Vec<f64>>>,
{
    if cfg.seeds.is_empty() || cfg.kernels.is_empty() || cfg.n_mfcc.is_empty() {
        return Err(Error::Config("sweep needs at least one kernel, n_mfcc point and run".into()));
    }
    let splits = cfg
        .seeds
        .iter()
        .map(|&seed| stratified_split(records, cfg.ratios, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut results: BTreeMap<(&'static str, usize, usize), SweepRow> = BTreeMap::new();
    for &n_mfcc in &cfg.n_mfcc {
        let features = features_for(n_mfcc).map_err(|e| Error::Config(format!("n_mfcc={n_mfcc}: {e}")))?;
        if features.len() != records.len() {
            return Err(Error::Data(format!(
                "n_mfcc={n_mfcc}: {} feature rows for {} records",
                features.len(),
                records.len()
            )));
        }
        let jobs: Vec<(usize, usize)> = (0..cfg.kernels.len())
            .flat_map(|k| (0..cfg.seeds.len()).map(move |r| (k, r)))
            .collect();
        let rows = jobs
            .par_iter()
            .map(|&(k, run)| {
                let split = &splits[run];
                let mut train_x = Vec::new();
                let mut train_y = Vec::new();
                let mut test_x = Vec::new();
                let mut test_y = Vec::new();
                for (rec, x) in records.iter().zip(&features) {
                    match split.get(&rec.id) {
                        Some(Split::Train) => {
                            train_x.push(x.clone());
                            train_y.push(rec.label);
                        }
                        Some(Split::Test) => {
                            test_x.push(x.clone());
                            test_y.push(rec.label);
                        }
                        _ => {}
                    }
                }
                let spec = cfg.kernels[k];
                let model = train_multiclass(&train_x, &train_y, &spec, cfg.strategy, &cfg.solver)
                    .map_err(|e| Error::Training(format!("n_mfcc={n_mfcc}: {e}")))?;
                let mut correct = 0;
                for (x, y) in test_x.iter().zip(&test_y) {
                    if model.predict(x)?.0 == *y {
                        correct += 1;
                    }
                }
                let accuracy = if test_x.is_empty() { 0.0 } else { correct as f64 / test_x.len() as f64 };
                Ok(SweepRow {
                    kernel: kernel_name(spec.kind),
                    n_mfcc,
                    run,
                    seed: cfg.seeds[run],
                    accuracy,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for row in rows {
            log::info!("sweep kernel={} n_mfcc={} run={} accuracy={:.4}", row.kernel, row.n_mfcc, row.run, row.accuracy);
            results.insert((row.kernel, row.n_mfcc, row.run), row);
        }
    }
    let raw: Vec<SweepRow> = results.into_values().collect();
    let mut grouped: BTreeMap<(&'static str, usize), Vec<f64>> = BTreeMap::new();
    for r in &raw {
        grouped.entry((r.kernel, r.n_mfcc)).or_default().push(r.accuracy);
    }
    let means = grouped
        .into_iter()
        .map(|((kernel, n_mfcc), accs)| {
            let n = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / n;
            let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
            SweepMean {
                kernel,
                n_mfcc,
                runs: accs.len(),
                mean_accuracy: mean,
                std_accuracy: var.sqrt(),
            }
        })
        .collect();
    Ok(SweepResult { raw, means })
}
