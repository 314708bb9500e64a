use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use ser_core::audio::{encode_wav, read_wav_file};
use ser_core::dataset::{
    read_manifest, scan_corpus, split_records, validate_manifest, write_manifest, Corpus, EmotionLabel, ManifestRow,
    SampleRecord, Split, SplitAssignment, SplitMode,
};
use ser_core::eval::{
    comparison_table, evaluate_model, parse_range, run_svm_sweep, sweep_points, MetricsReport, SweepConfig,
    SWEEP_EXTRA_POINTS,
};
use ser_core::features::{
    augment_invert, augment_reverse, build_feature_records, read_feature_cache, read_feature_manifest,
    write_feature_cache, write_feature_manifest, Augmentations, FeatureExtractor, FeatureManifestRow, FeatureRecord,
    PipelineConfig, N_FRAMES,
};
use ser_core::nn::{
    build_cnn, gradient_check, write_checkpoint, write_history, CnnArch, RmsPropConfig, Samples, TrainConfig, Trainer,
};
use ser_core::stream::{run_stream, write_events_csv, EmitFormat, LoadedModel, StreamConfig, StreamEngine, STREAM_CSV_HEADER};
use ser_core::svm::{train_multiclass, GammaMode, KernelKind, KernelSpec, MulticlassStrategy, SolverConfig};
use ser_core::{AudioClip, Error, Result};

use crate::config::{pick, RunConfig};
use crate::run_dir::RunDir;
use crate::{Cli, Command, GlobalArgs};

const DEFAULT_OUT_DIR: &str = "ser-out";
const DEFAULT_SEED: u64 = 0;

struct Ctx<'a> {
    global: &'a GlobalArgs,
    cfg: RunConfig,
}

impl Ctx<'_> {
    fn seed(&self) -> u64 {
        pick(self.global.seed, self.cfg.seed, DEFAULT_SEED)
    }

    /// Output directory, created on demand; commands that only print pass
    /// `required = false` and get `None` unless `--out-dir` was given.
    fn run_dir(&self, required: bool) -> Result<Option<RunDir>> {
        match (&self.global.out_dir, required) {
            (Some(p), _) => RunDir::create(p).map(Some),
            (None, true) => RunDir::create(Path::new(DEFAULT_OUT_DIR)).map(Some),
            (None, false) => Ok(None),
        }
    }

    fn finish(&self, dir: Option<RunDir>, command: &str) -> Result<()> {
        if let Some(dir) = dir {
            let path = dir.finish(command, Some(self.seed()), self.global.config.as_deref())?;
            println!("run manifest: {}", path.display());
        }
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx {
        global: &cli.global,
        cfg: RunConfig::load(cli.global.config.as_deref())?,
    };
    match &cli.command {
        Command::Extract(a) => extract(&ctx, a),
        Command::ValidateDataset(a) => validate_dataset(&ctx, a),
        Command::Split(a) => split(&ctx, a),
        Command::TrainSvm(a) => train_svm(&ctx, a),
        Command::TrainCnn(a) => train_cnn(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::SweepSvm(a) => sweep_svm(&ctx, a),
        Command::Augment(a) => augment(&ctx, a),
        Command::Stream(a) => stream(&ctx, a),
        Command::GradientCheck(a) => grad_check(&ctx, a),
        Command::AuditParams(a) => audit_params(a),
        Command::Reproduce(a) => reproduce(&ctx, a),
    }
}

// ---------------------------------------------------------------- helpers

fn load_manifest(path: &Path) -> Result<Vec<(ManifestRow, PathBuf)>> {
    let rows = read_manifest(BufReader::new(File::open(path)?))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(rows
        .into_iter()
        .map(|r| {
            let p = PathBuf::from(&r.path);
            let resolved = if p.is_absolute() { p } else { base.join(p) };
            (r, resolved)
        })
        .collect())
}

fn load_clips(rows: &[(ManifestRow, PathBuf)]) -> Result<Vec<(SampleRecord, AudioClip)>> {
    rows.par_iter()
        .map(|(row, path)| Ok((row.to_record(), read_wav_file(path)?)))
        .collect()
}

fn manifest_assignment(rows: &[ManifestRow], seed: u64) -> SplitAssignment {
    SplitAssignment {
        assignments: rows.iter().filter_map(|r| r.split.map(|s| (r.id.clone(), s))).collect(),
        seed,
    }
}

fn parse_kernel(name: &str) -> Result<KernelKind> {
    match name.trim().to_ascii_lowercase().as_str() {
        "rbf" => Ok(KernelKind::Rbf),
        "linear" => Ok(KernelKind::Linear),
        other => Err(Error::Config(format!("unknown kernel `{other}` (use rbf or linear)"))),
    }
}

fn parse_strategy(name: &str) -> Result<MulticlassStrategy> {
    match name.trim().to_ascii_lowercase().as_str() {
        "ovr" | "one-vs-rest" => Ok(MulticlassStrategy::Ovr),
        "ovo" | "one-vs-one" => Ok(MulticlassStrategy::Ovo),
        other => Err(Error::Config(format!("unknown multiclass strategy `{other}` (use ovr or ovo)"))),
    }
}

fn parse_split_mode(name: &str) -> Result<SplitMode> {
    match name.trim().to_ascii_lowercase().as_str() {
        "stratified" => Ok(SplitMode::Stratified),
        "actor-disjoint" | "actor" => Ok(SplitMode::ActorDisjoint),
        other => Err(Error::Config(format!("unknown split mode `{other}`"))),
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct PipelineArgs {
    /// MFCC coefficients per frame [default: 13].
    #[arg(long)]
    pub n_mfcc: Option<usize>,
    /// Samples every clip is padded to [default: longest clip].
    #[arg(long)]
    pub target_length: Option<usize>,
    /// STFT frame length in samples [default: 2048].
    #[arg(long)]
    pub frame_length: Option<usize>,
    /// Mel bands [default: max(26, n_mfcc)].
    #[arg(long)]
    pub n_mels: Option<usize>,
}

fn pipeline_config(ctx: &Ctx<'_>, a: &PipelineArgs, n_mfcc_override: Option<usize>, lengths: &[usize]) -> Result<PipelineConfig> {
    let n_mfcc = n_mfcc_override.unwrap_or(pick(a.n_mfcc, ctx.cfg.n_mfcc, 13));
    let target = match a.target_length.or(ctx.cfg.target_length) {
        Some(t) => t,
        None => PipelineConfig::target_from_lengths(lengths.iter().copied())?,
    };
    let mut p = PipelineConfig::new(n_mfcc, target)?;
    if let Some(f) = a.frame_length.or(ctx.cfg.frame_length) {
        p = p.with_frame_length(f)?;
    }
    if let Some(m) = a.n_mels.or(ctx.cfg.n_mels) {
        p.n_mels = m;
    }
    if let Some(f) = ctx.cfg.f_min {
        p.f_min = f;
    }
    if let Some(f) = ctx.cfg.f_max {
        p.f_max = Some(f);
    }
    p.validate()?;
    Ok(p)
}

/// Contents of an `extract` output directory.
struct FeatureSet {
    pipeline: PipelineConfig,
    records: Vec<FeatureRecord>,
    splits: HashMap<String, Option<Split>>,
}

impl FeatureSet {
    fn load(dir: &Path) -> Result<Self> {
        let pipeline: PipelineConfig = serde_json::from_reader(BufReader::new(File::open(dir.join("pipeline.json"))?))
            .map_err(|e| Error::Format(format!("pipeline.json: {e}")))?;
        let records = read_feature_cache(BufReader::new(File::open(dir.join("features.bin"))?))?;
        let rows = read_feature_manifest(BufReader::new(File::open(dir.join("features.csv"))?))?;
        let splits = rows.into_iter().map(|r| (r.id, r.split)).collect();
        Ok(Self {
            pipeline,
            records,
            splits,
        })
    }

    /// Inputs and labels of one split (`None` = every record).
    fn select(&self, split: Option<Split>) -> (Vec<Vec<f64>>, Vec<EmotionLabel>) {
        self.records
            .iter()
            .filter(|r| split.is_none() || self.splits.get(&r.id).copied().flatten() == split)
            .map(|r| (r.window.flatten(), r.label))
            .unzip()
    }
}

fn write_report(dir: &mut RunDir, prefix: &str, report: &MetricsReport) -> Result<()> {
    report.write_confusion_csv(dir.create_file(&format!("{prefix}confusion.csv"))?)?;
    report.write_per_class_csv(dir.create_file(&format!("{prefix}per_class.csv"))?)?;
    dir.write_json(&format!("{prefix}metrics.json"), report)
}

// ---------------------------------------------------------------- extract

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Manifest CSV (id,path,corpus,label,actor,split).
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Add a time-reversed copy of every clip.
    #[arg(long)]
    pub augment_reverse: bool,
    /// Add a polarity-inverted copy of every clip.
    #[arg(long)]
    pub augment_invert: bool,
}

fn extract(ctx: &Ctx<'_>, a: &ExtractArgs) -> Result<()> {
    let rows = load_manifest(&a.manifest)?;
    let clips = load_clips(&rows)?;
    let lengths: Vec<usize> = clips.iter().map(|(_, c)| c.len()).collect();
    let mut pipeline = pipeline_config(ctx, &a.pipeline, None, &lengths)?;
    pipeline.augmentations = Augmentations {
        reverse: a.augment_reverse || ctx.cfg.augment_reverse.unwrap_or(false),
        invert: a.augment_invert || ctx.cfg.augment_invert.unwrap_or(false),
    };
    if let Some((_, c)) = clips.iter().find(|(_, c)| c.len() > pipeline.target_length) {
        return Err(Error::Length {
            actual: c.len(),
            target: pipeline.target_length,
        });
    }
    let extractor = FeatureExtractor::new(pipeline)?;
    let started = Instant::now();
    let (records, report) = build_feature_records(&extractor, &clips)?;
    let split_of: HashMap<&str, Option<Split>> = rows.iter().map(|(r, _)| (r.id.as_str(), r.split)).collect();
    let path_of: HashMap<&str, String> = rows.iter().map(|(r, p)| (r.id.as_str(), p.display().to_string())).collect();
    let manifest_rows: Vec<FeatureManifestRow> = records
        .iter()
        .map(|r| {
            let source = r.id.split('#').next().unwrap_or(&r.id);
            FeatureManifestRow {
                id: r.id.clone(),
                label: r.label,
                path: path_of.get(source).cloned().unwrap_or_default(),
                split: split_of.get(source).copied().flatten(),
            }
        })
        .collect();
    let mut dir = ctx.run_dir(true)?.expect("required run dir");
    write_feature_cache(dir.create_file("features.bin")?, &records)?;
    write_feature_manifest(dir.create_file("features.csv")?, &manifest_rows)?;
    dir.write_json("pipeline.json", &pipeline)?;
    println!(
        "extracted {} windows ({}x{}) from {} clips in {:.2}s; target_length={} hop={}",
        records.len(),
        pipeline.n_mfcc,
        N_FRAMES,
        clips.len(),
        started.elapsed().as_secs_f64(),
        pipeline.target_length,
        pipeline.hop_length()
    );
    println!("{}", report.summary());
    ctx.finish(Some(dir), "extract")
}

// ---------------------------------------------------------------- validate

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Corpus root directory (searched recursively for .wav files).
    #[arg(long)]
    pub root: PathBuf,
    /// ravdess or tess.
    #[arg(long)]
    pub corpus: String,
}

fn validate_dataset(ctx: &Ctx<'_>, a: &ValidateArgs) -> Result<()> {
    let corpus: Corpus = a.corpus.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
    if !a.root.is_dir() {
        return Err(Error::Data(format!("corpus root {} is not a directory", a.root.display())));
    }
    let scan = scan_corpus(&a.root, corpus)?;
    let report = validate_manifest(&scan.records, corpus);
    print!("{}", report.to_text());
    if !scan.rejected.is_empty() {
        println!("skipped {} unparseable .wav files", scan.rejected.len());
    }
    let mut dir = ctx.run_dir(true)?.expect("required run dir");
    write_manifest(dir.create_file("manifest.csv")?, &scan.records, None)?;
    report.write_csv(dir.create_file("validation.csv")?)?;
    ctx.finish(Some(dir), "validate-dataset")?;
    if report.pass {
        Ok(())
    } else {
        Err(Error::Data(format!(
            "{} class counts differ from the expected distribution",
            report.mismatches.len()
        )))
    }
}

// ---------------------------------------------------------------- split

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// stratified or actor-disjoint.
    #[arg(long)]
    pub mode: Option<String>,
    /// train:val:test ratios, e.g. 0.6:0.2:0.2.
    #[arg(long)]
    pub ratios: Option<String>,
}

fn split_ratios(ctx: &Ctx<'_>, flag: Option<&str>) -> Result<[f64; 3]> {
    if let Some(s) = flag {
        let v: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("ratios must be train:val:test numbers, got `{s}`")))?;
        let [a, b, c] = v[..] else {
            return Err(Error::Config(format!("ratios must have three parts, got `{s}`")));
        };
        return Ok([a, b, c]);
    }
    Ok([
        ctx.cfg.train_ratio.unwrap_or(0.6),
        ctx.cfg.val_ratio.unwrap_or(0.2),
        ctx.cfg.test_ratio.unwrap_or(0.2),
    ])
}

fn split(ctx: &Ctx<'_>, a: &SplitArgs) -> Result<()> {
    let rows = load_manifest(&a.manifest)?;
    let records: Vec<SampleRecord> = rows
        .iter()
        .map(|(r, p)| {
            let mut rec = r.to_record();
            rec.path = p.clone();
            rec
        })
        .collect();
    let mode = parse_split_mode(&pick(a.mode.clone(), ctx.cfg.split_mode.clone(), "stratified".into()))?;
    let ratios = split_ratios(ctx, a.ratios.as_deref())?;
    let assignment = split_records(&records, ratios, ctx.seed(), mode)?;
    let mut counts: BTreeMap<(Split, EmotionLabel), usize> = BTreeMap::new();
    for r in &records {
        if let Some(s) = assignment.get(&r.id) {
            *counts.entry((s, r.label)).or_default() += 1;
        }
    }
    println!("{:<10}{:>8}{:>8}{:>8}", "class", "train", "val", "test");
    for label in EmotionLabel::ALL {
        let c = |s| counts.get(&(s, label)).copied().unwrap_or(0);
        println!("{:<10}{:>8}{:>8}{:>8}", label.name(), c(Split::Train), c(Split::Val), c(Split::Test));
    }
    let mut dir = ctx.run_dir(true)?.expect("required run dir");
    write_manifest(dir.create_file("manifest.csv")?, &records, Some(&assignment))?;
    ctx.finish(Some(dir), "split")
}

// ---------------------------------------------------------------- augment

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write time-reversed copies (default: both kinds when neither flag is given).
    #[arg(long)]
    pub reverse: bool,
    /// Write polarity-inverted copies.
    #[arg(long)]
    pub invert: bool,
}

fn safe_name(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn augment(ctx: &Ctx<'_>, a: &AugmentArgs) -> Result<()> {
    let (reverse, invert) = if a.reverse || a.invert { (a.reverse, a.invert) } else { (true, true) };
    let rows = load_manifest(&a.manifest)?;
    let clips = load_clips(&rows)?;
    let mut dir = ctx.run_dir(true)?.expect("required run dir");
    let mut records = Vec::new();
    let mut assignment = manifest_assignment(&rows.iter().map(|(r, _)| r.clone()).collect::<Vec<_>>(), ctx.seed());
    let mut clipped = 0;
    for ((row, path), (rec, clip)) in rows.iter().zip(&clips) {
        let mut original = rec.clone();
        original.path = path.clone();
        records.push(original);
        let mut variants = Vec::new();
        if reverse {
            variants.push(("rev", augment_reverse(clip)));
        }
        if invert {
            variants.push(("inv", augment_invert(clip)));
        }
        for (suffix, c) in variants {
            let name = format!("audio/{}_{suffix}.wav", safe_name(&rec.id));
            let encoded = encode_wav(&c);
            clipped += usize::from(encoded.clipped > 0);
            dir.write_bytes(&name, &encoded.bytes)?;
            let derived = rec.derive(suffix, dir.path(&name));
            if let Some(s) = row.split {
                assignment.assignments.insert(derived.id.clone(), s);
            }
            records.push(derived);
        }
    }
    write_manifest(dir.create_file("manifest.csv")?, &records, Some(&assignment))?;
    println!(
        "originals={} augmented={} (reverse={reverse} invert={invert})",
        rows.len(),
        records.len() - rows.len()
    );
    if clipped > 0 {
        println!("warning: {clipped} augmented files needed PCM16 clipping");
    }
    ctx.finish(Some(dir), "augment")
}

// ---------------------------------------------------------------- svm

#[derive(Args, Debug)]
pub struct SvmArgs {
    /// rbf or linear [default: rbf].
    #[arg(long)]
    pub kernel: Option<String>,
    /// Soft-margin penalty [default: 10].
    #[arg(long = "c")]
    pub c: Option<f64>,
    /// Fixed RBF gamma [default: 1 / (n_features * var)].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// ovr or ovo [default: ovr].
    #[arg(long)]
    pub strategy: Option<String>,
}

fn kernel_spec(ctx: &Ctx<'_>, a: &SvmArgs) -> Result<(KernelSpec, MulticlassStrategy)> {
    let kind = parse_kernel(&pick(a.kernel.clone(), ctx.cfg.kernel.clone(), "rbf".into()))?;
    let spec = KernelSpec {
        kind,
        gamma: a.gamma.or(ctx.cfg.gamma).map_or(GammaMode::Scale, GammaMode::Fixed),
        c: pick(a.c, ctx.cfg.c, 10.0),
    };
    spec.validate()?;
    let strategy = parse_strategy(&pick(a.strategy.clone(), ctx.cfg.strategy.clone(), "ovr".into()))?;
    Ok((spec, strategy))
}

#[derive(Args, Debug)]
pub struct TrainSvmArgs {
    /// Output directory of `extract`.
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub svm: SvmArgs,
}

fn train_svm(ctx: &Ctx<'_>, a: &TrainSvmArgs) -> Result<()> {
    let set = FeatureSet::load(&a.features)?;
    let (spec, strategy) = kernel_spec(ctx, &a.svm)?;
    let (x, y) = set.select(Some(Split::Train));
    if x.is_empty() {
        return Err(Error::Data("no training rows; run `split` before `extract`".into()));
    }
    let started = Instant::now();
    let mut model = train_multiclass(&x, &y, &spec, strategy, &SolverConfig::default())?;
    model.pipeline = Some(set.pipeline);
    println!(
        "trained on {} windows in {:.2}s: {} support vectors",
        x.len(),
        started.elapsed().as_secs_f64(),
        model.support_vector_count()
    );
    let mut dir = ctx.run_dir(true)?.expect("required run dir");
    let mut buf = Vec::new();
    model.write(&mut buf)?;
    dir.write_bytes("model.svm", &buf)?;
    dir.write_bytes("model_summary.txt", model.summary().as_bytes())?;
    for split in [Split::Val, Split::Test] {
        let (xs, ys) = set.select(Some(split));
        if xs.is_empty() {
            continue;
        }
        let report = evaluate_model(&model, &xs, &ys)?;
        println!("{split} accuracy: {:.4} ({} samples)", report.accuracy, report.n_samples);
        write_report(&mut dir, &format!("{split}_"), &report)?;
    }
    ctx.finish(Some(dir), "train-svm")
}

// ---------------------------------------------------------------- cnn

#[derive(Args, Debug)]
pub struct TrainCnnArgs {
    /// Output directory of `extract`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
}

fn train_config(ctx: &Ctx<'_>, epochs: Option<usize>, batch: Option<usize>, lr: Option<f64>, decay: Option<f64>) -> TrainConfig {
    let d = RmsPropConfig::default();
    TrainConfig {
        optimizer: RmsPropConfig {
            lr: pick(lr, ctx.cfg.lr, d.lr),
            decay: pick(decay, ctx.cfg.decay, d.decay),
            rho: ctx.cfg.rho.unwrap_or(d.rho),
            epsilon: ctx.cfg.epsilon.unwrap_or(d.epsilon),
        },
        batch_size: pick(batch, ctx.cfg.batch_size, 32),
        epochs: pick(epochs, ctx.cfg.epochs, 500),
        seed: ctx.seed(),
    }
}

fn labels_as_codes(y: &[EmotionLabel]) -> Vec<usize> {
    y.iter().map(|l| l.code()).collect()
}

fn train_cnn(ctx: &Ctx<'_>, a: &TrainCnnArgs) -> Result<()> {
    let set = FeatureSet::load(&a.features)?;
    let config = train_config(ctx, a.epochs, a.batch_size, a.lr, a.decay);
    let (x, y) = set.select(Some(Split::Train));
    if x.is_empty() {
        return Err(Error::Data("no training rows; run `split` before `extract`".into()));
    }
    let (vx, vy) = set.select(Some(Split::Val));
    let (y, vy) = (labels_as_codes(&y), labels_as_codes(&vy));
    let mut model = build_cnn(set.pipeline.n_mfcc, N_FRAMES, &CnnArch::default(), config.seed)?;
    model.pipeline = Some(set.pipeline);
    let mut trainer = Trainer::new(&model, config)?;
    let train = Samples::new(&x, &y)?;
    let val = if vx.is_empty() { None } else { Some(Samples::new(&vx, &vy)?) };
    let started = Instant::now();
    for _ in 0..config.epochs {
        let row = trainer.run_epoch(&mut model, train, val)?;
        log::info!(
            "epoch {} loss={:.5} acc={:.4} val_loss={:?} val_acc={:?}",
            row.epoch,
            row.train_loss,
            row.train_acc,
            row.val_loss,
            row.val_acc
        );
    }
    let last = trainer.history.last().copied();
    println!("trained {} epochs in {:.1}s", config.epochs, started.elapsed().as_secs_f64());
    if let Some(r) = last {
        println!(
            "final train_loss={:.5} train_acc={:.4} val_acc={}",
            r.train_loss,
            r.train_acc,
            r.val_acc.map_or("-".into(), |v| format!("{v:.4}"))
        );
    }
    let mut dir = ctx.run_dir(true)?.expect("required run dir");
    write_history(dir.create_file("history.csv")?, &trainer.history)?;
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &model, Some(&trainer.optimizer))?;
    dir.write_bytes("model.cnn", &buf)?;
    let (tx, ty) = set.select(Some(Split::Test));
    if !tx.is_empty() {
        let report = evaluate_model(&model, &tx, &ty)?;
        println!("test accuracy: {:.4} ({} samples)", report.accuracy, report.n_samples);
        write_report(&mut dir, "test_", &report)?;
    }
    ctx.finish(Some(dir), "train-cnn")
}

// ---------------------------------------------------------------- eval

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// model.svm or model.cnn.
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory of `extract`.
    #[arg(long)]
    pub features: PathBuf,
    /// train, val, test or all.
    #[arg(long, default_value = "test")]
    pub split: String,
}

fn eval(ctx: &Ctx<'_>, a: &EvalArgs) -> Result<()> {
    let model = LoadedModel::load(&a.model)?;
    let set = FeatureSet::load(&a.features)?;
    let split = match a.split.as_str() {
        "all" => None,
        s => Some(s.parse::<Split>().map_err(|e| Error::Config(e.to_string()))?),
    };
    let (x, y) = set.select(split);
    if x.is_empty() {
        return Err(Error::Config(format!("split `{}` is empty", a.split)));
    }
    let report = evaluate_model(model.classifier(), &x, &y)?;
    print!("{}", report.to_text());
    let mut dir = ctx.run_dir(false)?;
    if let Some(d) = dir.as_mut() {
        write_report(d, "", &report)?;
    }
    ctx.finish(dir, "eval")
}

// ---------------------------------------------------------------- sweep

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// start:end:step of MFCC counts; 13 and 100 are always added.
    #[arg(long)]
    pub range: Option<String>,
    /// Runs (split seeds) per point.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Comma-separated kernels.
    #[arg(long, default_value = "rbf,linear")]
    pub kernels: String,
    #[arg(long)]
    pub target_length: Option<usize>,
    #[arg(long = "c")]
    pub c: Option<f64>,
}

fn sweep_svm(ctx: &Ctx<'_>, a: &SweepArgs) -> Result<()> {
    let range = parse_range(&pick(a.range.clone(), ctx.cfg.sweep_range.clone(), "10:120:10".into()))?;
    let points = sweep_points(&range, &SWEEP_EXTRA_POINTS);
    let runs = pick(a.runs, ctx.cfg.runs, 10);
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    let rows = load_manifest(&a.manifest)?;
    let clips = load_clips(&rows)?;
    let lengths: Vec<usize> = clips.iter().map(|(_, c)| c.len()).collect();
    let target = match a.target_length.or(ctx.cfg.target_length) {
        Some(t) => t,
        None => PipelineConfig::target_from_lengths(lengths.iter().copied())?,
    };
    let mut cfg = SweepConfig::new(points.clone(), runs, ctx.seed());
    let c = pick(a.c, ctx.cfg.c, 10.0);
    cfg.kernels = a
        .kernels
        .split(',')
        .map(|k| {
            Ok(KernelSpec {
                kind: parse_kernel(k)?,
                gamma: ctx.cfg.gamma.map_or(GammaMode::Scale, GammaMode::Fixed),
                c,
            })
        })
        .collect::<Result<_>>()?;
    let records: Vec<SampleRecord> = clips.iter().map(|(r, _)| r.clone()).collect();
    let frame_length = ctx.cfg.frame_length;
    let features_for = |n: usize| -> Result<Vec<Vec<f64>>> {
        let mut p = PipelineConfig::new(n, target)?;
        if let Some(f) = frame_length {
            p = p.with_frame_length(f)?;
        }
        let ex = FeatureExtractor::new(p)?;
        clips.par_iter().map(|(_, c)| Ok(ex.extract(c)?.flatten())).collect()
    };
    println!("sweeping n_mfcc {:?} x {} kernels x {} runs", points, cfg.kernels.len(), runs);
    let started = Instant::now();
    let result = run_svm_sweep(&records, features_for, &cfg)?;
    println!("{:<8}{:>8}{:>10}{:>10}", "kernel", "n_mfcc", "mean_acc", "std");
    for m in &result.means {
        println!("{:<8}{:>8}{:>10.4}{:>10.4}", m.kernel, m.n_mfcc, m.mean_accuracy, m.std_accuracy);
    }
    if let Some(b) = result.best() {
        println!("best: {} kernel, n_mfcc={} mean accuracy {:.4}", b.kernel, b.n_mfcc, b.mean_accuracy);
    }
    println!("sweep took {:.1}s", started.elapsed().as_secs_f64());
    let mut dir = ctx.run_dir(true)?.expect("required run dir");
    result.write_raw_csv(dir.create_file("sweep_raw.csv")?)?;
    result.write_mean_csv(dir.create_file("sweep_mean.csv")?)?;
    ctx.finish(Some(dir), "sweep-svm")
}

// ---------------------------------------------------------------- stream

#[derive(Args, Debug)]
pub struct StreamArgs {
    /// model.svm or model.cnn trained with a pipeline config.
    #[arg(long)]
    pub model: PathBuf,
    /// WAV file fed as a live source.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long)]
    pub hop: Option<f64>,
    /// text or csv.
    #[arg(long, default_value = "text")]
    pub emit: String,
    /// Samples per chunk pushed by the producer.
    #[arg(long)]
    pub chunk_samples: Option<usize>,
    /// Bounded queue depth between producer and classifier.
    #[arg(long, default_value_t = 8)]
    pub queue: usize,
}

fn stream(ctx: &Ctx<'_>, a: &StreamArgs) -> Result<()> {
    let emit = match a.emit.as_str() {
        "text" => EmitFormat::Text,
        "csv" => EmitFormat::Csv,
        other => return Err(Error::Config(format!("unknown emit format `{other}` (use text or csv)"))),
    };
    let cfg = StreamConfig {
        window_seconds: pick(a.window, ctx.cfg.window_seconds, 3.0),
        hop_seconds: pick(a.hop, ctx.cfg.hop_seconds, 0.5),
        emit,
    };
    let model = LoadedModel::load(&a.model)?;
    let clip = read_wav_file(&a.input)?;
    let engine = StreamEngine::new(model, &cfg, clip.sample_rate())?;
    let chunk = pick(a.chunk_samples, ctx.cfg.chunk_samples, 4096).max(1);
    let chunks: Vec<Vec<f64>> = clip.samples().chunks(chunk).map(<[f64]>::to_vec).collect();
    let stdout = std::io::stdout();
    if emit == EmitFormat::Csv {
        println!("{}", STREAM_CSV_HEADER.join(","));
    }
    let (events, summary) = run_stream(engine, chunks, a.queue, |e| {
        let mut out = stdout.lock();
        match emit {
            EmitFormat::Text => writeln!(out, "{}", e.to_text())?,
            EmitFormat::Csv => {
                let probs: Vec<String> = e.probs.iter().map(|p| format!("{p:.9}")).collect();
                writeln!(
                    out,
                    "{:.6},{:.6},{},{},{:.3}",
                    e.t_start,
                    e.t_end,
                    probs.join(","),
                    e.label.name(),
                    e.latency_ms
                )?
            }
        }
        Ok(())
    })?;
    eprintln!("{}", summary.to_text());
    let mut dir = ctx.run_dir(false)?;
    if let Some(d) = dir.as_mut() {
        write_events_csv(d.create_file("events.csv")?, &events)?;
        d.write_json("stream_summary.json", &summary)?;
    }
    ctx.finish(dir, "stream")
}

// ---------------------------------------------------------------- gradcheck / audit

#[derive(Args, Debug)]
pub struct GradCheckArgs {
    /// Check the full-width network (sampled entries per tensor) instead of
    /// the 8/8/16 reduced one.
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value_t = 1e-5)]
    pub h: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Entries checked per tensor with --full.
    #[arg(long, default_value_t = 32)]
    pub max_per_tensor: usize,
    #[arg(long, default_value_t = 13)]
    pub n_mfcc: usize,
}

fn grad_check(ctx: &Ctx<'_>, a: &GradCheckArgs) -> Result<()> {
    use rand::{Rng, SeedableRng};
    let seed = ctx.seed();
    let arch = if a.full { CnnArch::default() } else { CnnArch::reduced() };
    let model = build_cnn(a.n_mfcc, N_FRAMES, &arch, seed)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let dim = a.n_mfcc * N_FRAMES;
    let inputs: Vec<Vec<f64>> = (0..2).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let labels = vec![rng.gen_range(0..8), rng.gen_range(0..8)];
    let started = Instant::now();
    let report = gradient_check(
        &model,
        &inputs,
        &labels,
        a.h,
        Some(seed),
        a.full.then_some(a.max_per_tensor),
    )?;
    print!("{}", report.to_text());
    println!("elapsed {:.2}s", started.elapsed().as_secs_f64());
    let mut dir = ctx.run_dir(false)?;
    if let Some(d) = dir.as_mut() {
        d.write_bytes("gradient_check.txt", report.to_text().as_bytes())?;
    }
    ctx.finish(dir, "gradient-check")?;
    if report.passes(a.tol) {
        println!("PASS (max relative error < {:e})", a.tol);
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "max relative error {:.3e} exceeds {:e}",
            report.max_rel_err, a.tol
        )))
    }
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 13)]
    pub n_mfcc: usize,
    #[arg(long, default_value_t = N_FRAMES)]
    pub n_frames: usize,
}

fn audit_params(a: &AuditArgs) -> Result<()> {
    let model = build_cnn(a.n_mfcc, a.n_frames, &CnnArch::default(), 0)?;
    print!("{}", model.summary_table());
    Ok(())
}

// ---------------------------------------------------------------- reproduce

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    /// RAVDESS root directory.
    #[arg(long)]
    pub ravdess: PathBuf,
    /// Optional TESS root directory, merged into the same protocol.
    #[arg(long)]
    pub tess: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub range: Option<String>,
}

#[derive(Serialize)]
struct ReproduceSummary {
    observed: BTreeMap<String, f64>,
    epochs: usize,
    sweep_runs: usize,
    samples: usize,
}

fn reproduce(ctx: &Ctx<'_>, a: &ReproduceArgs) -> Result<()> {
    let seed = ctx.seed();
    let mut records = Vec::new();
    let mut corpora = vec![(Corpus::Ravdess, a.ravdess.clone())];
    if let Some(t) = &a.tess {
        corpora.push((Corpus::Tess, t.clone()));
    }
    for (corpus, root) in &corpora {
        let scan = scan_corpus(root, *corpus)?;
        let report = validate_manifest(&scan.records, *corpus);
        print!("{}", report.to_text());
        records.extend(scan.records);
    }
    let assignment = split_records(&records, [0.6, 0.2, 0.2], seed, SplitMode::Stratified)?;
    let clips: Vec<(SampleRecord, AudioClip)> = records
        .par_iter()
        .map(|r| Ok((r.clone(), read_wav_file(&r.path)?)))
        .collect::<Result<_>>()?;
    let target = PipelineConfig::target_from_lengths(clips.iter().map(|(_, c)| c.len()))?;
    let pipeline = PipelineConfig::new(ctx.cfg.n_mfcc.unwrap_or(13), target)?;
    let extractor = FeatureExtractor::new(pipeline)?;
    let (feats, _) = build_feature_records(&extractor, &clips)?;
    let pick_split = |s: Split| -> (Vec<Vec<f64>>, Vec<EmotionLabel>) {
        feats
            .iter()
            .filter(|f| assignment.get(&f.id) == Some(s))
            .map(|f| (f.window.flatten(), f.label))
            .unzip()
    };
    let (x, y) = pick_split(Split::Train);
    let (vx, vy) = pick_split(Split::Val);
    let (tx, ty) = pick_split(Split::Test);
    let config = train_config(ctx, a.epochs, None, None, None);
    let mut model = build_cnn(pipeline.n_mfcc, N_FRAMES, &CnnArch::default(), seed)?;
    model.pipeline = Some(pipeline);
    let (yc, vyc) = (labels_as_codes(&y), labels_as_codes(&vy));
    let mut trainer = Trainer::new(&model, config)?;
    for _ in 0..config.epochs {
        let row = trainer.run_epoch(&mut model, Samples::new(&x, &yc)?, Some(Samples::new(&vx, &vyc)?))?;
        log::info!("epoch {} train_acc={:.4} val_acc={:?}", row.epoch, row.train_acc, row.val_acc);
    }
    let report = evaluate_model(&model, &tx, &ty)?;
    let mut observed = BTreeMap::new();
    observed.insert("cnn_top1_accuracy".to_string(), report.accuracy);
    for label in [EmotionLabel::Angry, EmotionLabel::Disgust, EmotionLabel::Calm] {
        observed.insert(format!("cnn_recall_{}", label.name()), report.per_class[label.code()].recall);
    }
    let range = parse_range(&pick(a.range.clone(), ctx.cfg.sweep_range.clone(), "10:120:10".into()))?;
    let runs = pick(a.runs, ctx.cfg.runs, 10);
    let sweep_cfg = SweepConfig::new(sweep_points(&range, &SWEEP_EXTRA_POINTS), runs, seed);
    let originals: Vec<SampleRecord> = clips.iter().map(|(r, _)| r.clone()).collect();
    let sweep = run_svm_sweep(
        &originals,
        |n| {
            let ex = FeatureExtractor::new(PipelineConfig::new(n, target)?)?;
            clips.par_iter().map(|(_, c)| Ok(ex.extract(c)?.flatten())).collect()
        },
        &sweep_cfg,
    )?;
    if let Some(best) = sweep.best() {
        observed.insert("svm_accuracy".to_string(), best.mean_accuracy);
    }
    let table = comparison_table(&observed);
    println!("non-binding comparison against published reference values:\n{table}");
    let mut dir = ctx.run_dir(true)?.expect("required run dir");
    write_history(dir.create_file("history.csv")?, &trainer.history)?;
    write_report(&mut dir, "test_", &report)?;
    sweep.write_raw_csv(dir.create_file("sweep_raw.csv")?)?;
    sweep.write_mean_csv(dir.create_file("sweep_mean.csv")?)?;
    dir.write_bytes("comparison.txt", table.as_bytes())?;
    dir.write_json(
        "reproduce.json",
        &ReproduceSummary {
            observed,
            epochs: config.epochs,
            sweep_runs: runs,
            samples: records.len(),
        },
    )?;
    ctx.finish(Some(dir), "reproduce")
}
