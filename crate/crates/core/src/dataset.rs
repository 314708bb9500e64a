//! Corpus manifests: RAVDESS/TESS file-name parsing, label-count validation
//! and seeded 60/20/20 splits.
//!
//! Splits are drawn with `ChaCha8Rng::seed_from_u64(seed)` and the
//! Fisher-Yates shuffle of `rand` 0.8 (`SliceRandom::shuffle`), one shuffle
//! per class in label-code order over records sorted by id. Per-class
//! counts are set by largest-remainder rounding of the ratios, with ties
//! going to test, then val, then train.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// The eight emotion classes. Codes 0..7 follow this declaration order,
/// which is also the confusion-matrix axis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Neutral,
    Calm,
    Happy,
    Sad,
    Angry,
    Fearful,
    Disgust,
    Surprised,
}

pub const NUM_CLASSES: usize = 8;

impl EmotionLabel {
    pub const ALL: [EmotionLabel; NUM_CLASSES] = [
        EmotionLabel::Neutral,
        EmotionLabel::Calm,
        EmotionLabel::Happy,
        EmotionLabel::Sad,
        EmotionLabel::Angry,
        EmotionLabel::Fearful,
        EmotionLabel::Disgust,
        EmotionLabel::Surprised,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Result<Self> {
        Self::ALL
            .get(code)
            .copied()
            .ok_or_else(|| Error::Data(format!("label code {code} outside 0..{NUM_CLASSES}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Neutral => "neutral",
            EmotionLabel::Calm => "calm",
            EmotionLabel::Happy => "happy",
            EmotionLabel::Sad => "sad",
            EmotionLabel::Angry => "angry",
            EmotionLabel::Fearful => "fearful",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Surprised => "surprised",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name() == lower)
            .ok_or_else(|| Error::Parse {
                field: "label",
                message: format!("unknown emotion `{s}`"),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corpus {
    Ravdess,
    Tess,
}

impl Corpus {
    pub fn name(self) -> &'static str {
        match self {
            Corpus::Ravdess => "ravdess",
            Corpus::Tess => "tess",
        }
    }

    /// Per-class counts of the complete audio-only speech release.
    pub fn expected_counts(self) -> [usize; NUM_CLASSES] {
        match self {
            Corpus::Ravdess => [96, 192, 192, 192, 192, 192, 192, 192],
            Corpus::Tess => [400, 0, 400, 400, 400, 400, 400, 400],
        }
    }
}

impl fmt::Display for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Corpus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ravdess" => Ok(Corpus::Ravdess),
            "tess" => Ok(Corpus::Tess),
            other => Err(Error::Parse {
                field: "corpus",
                message: format!("unknown corpus `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub id: String,
    pub path: PathBuf,
    pub label: EmotionLabel,
    pub corpus: Corpus,
    pub actor: String,
    /// Id of the original record this one was augmented from.
    pub augmented_from: Option<String>,
}

impl SampleRecord {
    pub fn is_augmented(&self) -> bool {
        self.augmented_from.is_some()
    }

    /// Derived record for an augmentation; the id is `<source>#<suffix>`.
    pub fn derive(&self, suffix: &str, path: PathBuf) -> SampleRecord {
        SampleRecord {
            id: format!("{}#{suffix}", self.id),
            path,
            label: self.label,
            corpus: self.corpus,
            actor: self.actor.clone(),
            augmented_from: Some(self.id.clone()),
        }
    }
}

fn file_stem(name: &str) -> Result<(&str, &str)> {
    let base = name.rsplit(['/', '\\']).next().unwrap_or(name);
    let (stem, ext) = base.rsplit_once('.').ok_or_else(|| Error::Parse {
        field: "extension",
        message: format!("`{base}` has no extension"),
    })?;
    if !ext.eq_ignore_ascii_case("wav") {
        return Err(Error::Parse {
            field: "extension",
            message: format!("expected .wav, got .{ext}"),
        });
    }
    Ok((base, stem))
}

/// Parses a RAVDESS file name such as `03-01-05-02-02-02-12.wav`.
///
/// Fields: modality, vocal channel, emotion, intensity, statement,
/// repetition, actor. Only audio-only (03) speech (01) files are accepted.
pub fn parse_ravdess_filename(name: &str) -> Result<SampleRecord> {
    const FIELDS: [(&str, u8, u8); 7] = [
        ("modality", 3, 3),
        ("vocal_channel", 1, 1),
        ("emotion", 1, 8),
        ("intensity", 1, 2),
        ("statement", 1, 2),
        ("repetition", 1, 2),
        ("actor", 1, 24),
    ];
    let (_, stem) = file_stem(name)?;
    let parts: Vec<&str> = stem.split('-').collect();
    if parts.len() != FIELDS.len() {
        return Err(Error::Parse {
            field: "field_count",
            message: format!("expected 7 dash-separated fields, found {}", parts.len()),
        });
    }
    let mut values = [0u8; 7];
    for (i, (part, &(field, lo, hi))) in parts.iter().zip(FIELDS.iter()).enumerate() {
        if part.len() != 2 || !part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse {
                field,
                message: format!("`{part}` is not a two-digit code"),
            });
        }
        let v: u8 = part.parse().expect("two ascii digits");
        if v < lo || v > hi {
            return Err(Error::Parse {
                field,
                message: format!("code {part} outside {lo:02}..={hi:02}"),
            });
        }
        values[i] = v;
    }
    Ok(SampleRecord {
        id: stem.to_string(),
        path: PathBuf::from(name),
        label: EmotionLabel::from_code(usize::from(values[2] - 1))?,
        corpus: Corpus::Ravdess,
        actor: parts[6].to_string(),
        augmented_from: None,
    })
}

/// Parses a TESS file name such as `OAF_back_angry.wav`. The last
/// underscore-separated token is the emotion; `ps` (pleasant surprise) maps
/// to [`EmotionLabel::Surprised`] and `fear` to [`EmotionLabel::Fearful`].
pub fn parse_tess_filename(name: &str) -> Result<SampleRecord> {
    let (_, stem) = file_stem(name)?;
    let parts: Vec<&str> = stem.split('_').collect();
    if parts.len() < 3 {
        return Err(Error::Parse {
            field: "field_count",
            message: format!("expected <speaker>_<word>_<emotion>, got `{stem}`"),
        });
    }
    let actor = parts[0].to_ascii_uppercase();
    if actor != "OAF" && actor != "YAF" {
        return Err(Error::Parse {
            field: "speaker",
            message: format!("unknown TESS speaker `{}`", parts[0]),
        });
    }
    let emotion = parts[parts.len() - 1].to_ascii_lowercase();
    let label = match emotion.as_str() {
        "neutral" => EmotionLabel::Neutral,
        "happy" => EmotionLabel::Happy,
        "sad" => EmotionLabel::Sad,
        "angry" => EmotionLabel::Angry,
        "fear" | "fearful" => EmotionLabel::Fearful,
        "disgust" => EmotionLabel::Disgust,
        "ps" | "surprise" | "surprised" => EmotionLabel::Surprised,
        other => {
            return Err(Error::Parse {
                field: "emotion",
                message: format!("unknown TESS emotion `{other}`"),
            })
        }
    };
    Ok(SampleRecord {
        id: format!("tess-{stem}"),
        path: PathBuf::from(name),
        label,
        corpus: Corpus::Tess,
        actor,
        augmented_from: None,
    })
}

pub fn parse_filename(name: &str, corpus: Corpus) -> Result<SampleRecord> {
    match corpus {
        Corpus::Ravdess => parse_ravdess_filename(name),
        Corpus::Tess => parse_tess_filename(name),
    }
}

/// Result of walking a corpus directory.
#[derive(Debug, Clone, Default)]
pub struct CorpusScan {
    pub records: Vec<SampleRecord>,
    /// `.wav` files that did not parse (e.g. RAVDESS song files).
    pub rejected: Vec<(PathBuf, String)>,
}

/// Recursively collects `.wav` files under `root` in sorted path order.
pub fn scan_corpus(root: &Path, corpus: Corpus) -> Result<CorpusScan> {
    let mut scan = CorpusScan::default();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Io(e.into()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if !is_wav {
            continue;
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        match parse_filename(name, corpus) {
            Ok(mut rec) => {
                rec.path = path.to_path_buf();
                scan.records.push(rec);
            }
            Err(e) => scan.rejected.push((path.to_path_buf(), e.to_string())),
        }
    }
    Ok(scan)
}

/// Per-class counts of one corpus compared with the published distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub corpus: Corpus,
    pub counts: [usize; NUM_CLASSES],
    pub expected: [usize; NUM_CLASSES],
    pub total: usize,
    pub expected_total: usize,
    pub pass: bool,
    /// (label, expected, actual) for every class that differs.
    pub mismatches: Vec<(EmotionLabel, usize, usize)>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "corpus: {}\nresult: {}\ntotal: {} (expected {})\n",
            self.corpus,
            if self.pass { "PASS" } else { "FAIL" },
            self.total,
            self.expected_total
        );
        for label in EmotionLabel::ALL {
            let c = label.code();
            let mark = if self.counts[c] == self.expected[c] { "" } else { "  <-- mismatch" };
            s.push_str(&format!(
                "  {:<10} {:>5} / {:>5}{mark}\n",
                label.name(),
                self.counts[c],
                self.expected[c]
            ));
        }
        for note in &self.notes {
            s.push_str(&format!("note: {note}\n"));
        }
        s
    }

    /// `label,expected,actual` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "expected", "actual"])?;
        for label in EmotionLabel::ALL {
            let c = label.code();
            w.write_record([label.name(), &self.expected[c].to_string(), &self.counts[c].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Counts the non-augmented records of `corpus` per class.
pub fn validate_manifest(records: &[SampleRecord], corpus: Corpus) -> ValidationReport {
    let mut counts = [0usize; NUM_CLASSES];
    for r in records.iter().filter(|r| r.corpus == corpus && !r.is_augmented()) {
        counts[r.label.code()] += 1;
    }
    let expected = corpus.expected_counts();
    let mismatches: Vec<_> = EmotionLabel::ALL
        .iter()
        .filter(|l| counts[l.code()] != expected[l.code()])
        .map(|&l| (l, expected[l.code()], counts[l.code()]))
        .collect();
    let mut notes = Vec::new();
    if corpus == Corpus::Tess {
        notes.push("TESS 'pleasant surprise' (ps) is counted as surprised; TESS has no calm class".into());
    }
    ValidationReport {
        corpus,
        counts,
        expected,
        total: counts.iter().sum(),
        expected_total: expected.iter().sum(),
        pass: mismatches.is_empty(),
        mismatches,
        notes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Parse {
                field: "split",
                message: format!("unknown split `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Per-class proportional cut.
    #[default]
    Stratified,
    /// Whole actors go to one split; class balance is not enforced.
    ActorDisjoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub assignments: BTreeMap<String, Split>,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn get(&self, id: &str) -> Option<Split> {
        self.assignments.get(id).copied()
    }

    pub fn ids_in(&self, split: Split) -> impl Iterator<Item = &str> {
        self.assignments
            .iter()
            .filter(move |(_, &s)| s == split)
            .map(|(id, _)| id.as_str())
    }
}

pub const MIN_PER_CLASS: usize = 5;

/// Splits `n` items in proportion to `ratios` using largest-remainder
/// rounding; equal remainders go to the later split first.
pub fn proportional_counts(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let total: f64 = ratios.iter().sum();
    let quotas = ratios.map(|r| r / total * n as f64);
    // 1e-9 guards against 0.6 * 5 landing a hair under 3.
    let mut counts = quotas.map(|q| (q + 1e-9).floor() as usize);
    let mut leftover = n - counts.iter().sum::<usize>();
    let mut order = [2usize, 1, 0];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - counts[a] as f64;
        let fb = quotas[b] - counts[b] as f64;
        if (fa - fb).abs() <= 1e-9 {
            b.cmp(&a)
        } else {
            fb.total_cmp(&fa)
        }
    });
    for &i in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

fn check_ratios(ratios: [f64; 3]) -> Result<()> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || ratios.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Split(format!("invalid split ratios {ratios:?}")));
    }
    Ok(())
}

fn assign_augmented(records: &[SampleRecord], assignments: &mut BTreeMap<String, Split>) -> Result<()> {
    for r in records {
        if let Some(src) = &r.augmented_from {
            let split = assignments.get(src).copied().ok_or_else(|| {
                Error::Split(format!("augmented sample `{}` has unknown source `{src}`", r.id))
            })?;
            assignments.insert(r.id.clone(), split);
        }
    }
    Ok(())
}

fn check_unique_ids(records: &[SampleRecord]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::Data(format!("duplicate sample id `{}`", r.id)));
        }
    }
    Ok(())
}

/// Seeded stratified split. Augmented records are excluded from the draw
/// and inherit the split of their source.
pub fn stratified_split(records: &[SampleRecord], ratios: [f64; 3], seed: u64) -> Result<SplitAssignment> {
    check_ratios(ratios)?;
    check_unique_ids(records)?;
    let mut by_class: BTreeMap<EmotionLabel, Vec<&str>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.is_augmented()) {
        by_class.entry(r.label).or_default().push(r.id.as_str());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    for (label, ids) in by_class.iter_mut() {
        if ids.len() < MIN_PER_CLASS {
            return Err(Error::Split(format!(
                "class {label} has {} samples, need at least {MIN_PER_CLASS}",
                ids.len()
            )));
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let [n_train, n_val, _] = proportional_counts(ids.len(), ratios);
        for (i, id) in ids.iter().enumerate() {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            assignments.insert(id.to_string(), split);
        }
    }
    assign_augmented(records, &mut assignments)?;
    Ok(SplitAssignment { assignments, seed })
}

/// Seeded split that keeps every actor's recordings in a single split.
pub fn actor_disjoint_split(records: &[SampleRecord], ratios: [f64; 3], seed: u64) -> Result<SplitAssignment> {
    check_ratios(ratios)?;
    check_unique_ids(records)?;
    let mut actors: Vec<(Corpus, &str)> = records
        .iter()
        .filter(|r| !r.is_augmented())
        .map(|r| (r.corpus, r.actor.as_str()))
        .collect();
    actors.sort_unstable();
    actors.dedup();
    if actors.len() < 3 {
        return Err(Error::Split(format!(
            "actor-disjoint split needs at least 3 actors, found {}",
            actors.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    actors.shuffle(&mut rng);
    let [n_train, n_val, _] = proportional_counts(actors.len(), ratios);
    let actor_split: BTreeMap<(Corpus, &str), Split> = actors
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let s = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            (a, s)
        })
        .collect();
    let mut assignments = BTreeMap::new();
    for r in records.iter().filter(|r| !r.is_augmented()) {
        assignments.insert(r.id.clone(), actor_split[&(r.corpus, r.actor.as_str())]);
    }
    assign_augmented(records, &mut assignments)?;
    Ok(SplitAssignment { assignments, seed })
}

pub fn split_records(
    records: &[SampleRecord],
    ratios: [f64; 3],
    seed: u64,
    mode: SplitMode,
) -> Result<SplitAssignment> {
    match mode {
        SplitMode::Stratified => stratified_split(records, ratios, seed),
        SplitMode::ActorDisjoint => actor_disjoint_split(records, ratios, seed),
    }
}

/// One row of the manifest CSV (`id,path,corpus,label,actor,split`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub path: String,
    pub corpus: Corpus,
    pub label: EmotionLabel,
    pub actor: String,
    /// Empty when unassigned.
    pub split: Option<Split>,
}

impl ManifestRow {
    pub fn to_record(&self) -> SampleRecord {
        // augmented ids are `<source>#<suffix>`
        let augmented_from = self.id.rsplit_once('#').map(|(src, _)| src.to_string());
        SampleRecord {
            id: self.id.clone(),
            path: PathBuf::from(&self.path),
            label: self.label,
            corpus: self.corpus,
            actor: self.actor.clone(),
            augmented_from,
        }
    }
}

pub fn write_manifest<W: Write>(out: W, records: &[SampleRecord], split: Option<&SplitAssignment>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(ManifestRow {
            id: r.id.clone(),
            path: r.path.to_string_lossy().into_owned(),
            corpus: r.corpus,
            label: r.label,
            actor: r.actor.clone(),
            split: split.and_then(|s| s.get(&r.id)),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest<R: Read>(input: R) -> Result<Vec<ManifestRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<ManifestRow>, _>>()?;
    Ok(rows)
}

/// Rebuilds a split assignment from manifest rows; every row must carry a split.
pub fn assignment_from_manifest(rows: &[ManifestRow], seed: u64) -> Result<SplitAssignment> {
    let assignments = rows
        .iter()
        .map(|r| {
            r.split
                .map(|s| (r.id.clone(), s))
                .ok_or_else(|| Error::Split(format!("manifest row `{}` has no split", r.id)))
        })
        .collect::<Result<_>>()?;
    Ok(SplitAssignment { assignments, seed })
}
