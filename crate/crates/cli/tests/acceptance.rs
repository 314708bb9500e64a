//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! binding criterion fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ser_core::audio::synth_chirp;
use ser_core::dataset::{scan_corpus, stratified_split, validate_manifest, Corpus, EmotionLabel};
use ser_core::dsp::{fft, inverse_mel_scale, mel_scale, Complex64};
use ser_core::eval::{precision_recall_f1, run_svm_sweep, top_k_accuracy, MetricsReport, SweepConfig};
use ser_core::features::{augment_invert, augment_reverse};
use ser_core::nn::{
    build_cnn, conv2d_forward, evaluate, gradient_check, CnnArch, Padding, RmsPropConfig, Samples, Tensor,
    TrainConfig, Trainer,
};
use ser_core::stream::{stream_clip, EmitFormat};
use ser_core::svm::{
    train_binary, train_multiclass, GammaMode, KernelKind, KernelSpec, MulticlassStrategy, SolverConfig,
};
use ser_core::{build_paper_cnn, AudioClip, FeatureExtractor, LoadedModel, PipelineConfig, StreamConfig};
use support::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64()))
    }
}

fn ser() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ser"))
}

fn c1_architecture_audit() -> Outcome {
    let t = Instant::now();
    let out = ser().arg("audit-params").output().map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure!(out.status.success(), "exit status {}", out.status);
    let text = String::from_utf8_lossy(&out.stdout);
    ensure!(text.trim_end().ends_with("Total params: 233448"), "table does not end with the total:\n{text}");
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| l.contains("(None")).collect();
    let params: Vec<u64> = rows
        .iter()
        .filter_map(|l| l.split_whitespace().last()?.parse().ok())
        .filter(|&p| p > 0)
        .collect();
    ensure!(params == [320, 9248, 18496, 36928, 164352, 4104], "per-layer params {params:?}");
    let shapes: Vec<String> = rows
        .iter()
        .filter(|l| !l.starts_with("dropout"))
        .map(|l| {
            let s = &l[l.find("(None").unwrap()..];
            s[..=s.find(')').unwrap()].to_string()
        })
        .collect();
    let want = [
        "(None, 13, 26, 32)",
        "(None, 11, 24, 32)",
        "(None, 5, 12, 32)",
        "(None, 5, 12, 64)",
        "(None, 3, 10, 64)",
        "(None, 1, 5, 64)",
        "(None, 320)",
        "(None, 512)",
        "(None, 8)",
    ];
    ensure!(shapes == want, "shapes {shapes:?}");
    within(elapsed, 1.0)?;
    Ok(format!("6 weighted layers and 9 shapes match, total 233448 ({:.3}s)", elapsed.as_secs_f64()))
}

fn c2_gradient_check() -> Outcome {
    let t = Instant::now();
    let model = build_cnn(13, 26, &CnnArch::reduced(), 3).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inputs: Vec<Vec<f64>> = (0..2).map(|_| random_signal(&mut rng, 13 * 26)).collect();
    let report = gradient_check(&model, &inputs, &[2, 5], 1e-5, Some(11), None).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure!(report.tensors.len() == 12, "{} tensors checked", report.tensors.len());
    ensure!(report.passes(1e-4), "max relative error {:.3e}", report.max_rel_err);
    within(elapsed, 60.0)?;
    Ok(format!(
        "max relative error {:.3e} over {} tensors ({:.2}s)",
        report.max_rel_err,
        report.tensors.len(),
        elapsed.as_secs_f64()
    ))
}

fn c3_dsp_oracles() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut fft_err: f64 = 0.0;
    for i in 0..100 {
        let n = 1usize << (1 + i % 10);
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let got = fft(&x).map_err(|e| e.to_string())?;
        let want = naive_dft(&x);
        let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        fft_err = fft_err.max(err);
    }
    let mut conv_err: f64 = 0.0;
    for i in 0..100 {
        let (h, w) = (rng.gen_range(3..10), rng.gen_range(3..10));
        let (cin, cout) = (rng.gen_range(1..4), rng.gen_range(1..5));
        let padding = if i % 2 == 0 { Padding::Same } else { Padding::Valid };
        let x = random_signal(&mut rng, h * w * cin);
        let k = random_signal(&mut rng, 9 * cin * cout);
        let b = random_signal(&mut rng, cout);
        let got = conv2d_forward(
            &Tensor::new(vec![h, w, cin], x.clone()).unwrap(),
            &Tensor::new(vec![3, 3, cin, cout], k.clone()).unwrap(),
            &Tensor::new(vec![cout], b.clone()).unwrap(),
            padding,
        )
        .map_err(|e| e.to_string())?;
        let (_, _, want) = naive_conv(&x, h, w, cin, &k, &b, padding);
        ensure!(got.data().len() == want.len(), "conv output length differs");
        let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let err = got.data().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        conv_err = conv_err.max(err);
    }
    let elapsed = t.elapsed();
    ensure!(fft_err < 1e-9, "fft relative error {fft_err:.3e}");
    ensure!(conv_err < 1e-12, "conv relative error {conv_err:.3e}");
    within(elapsed, 30.0)?;
    Ok(format!(
        "fft max rel err {fft_err:.2e}, conv max rel err {conv_err:.2e} ({:.2}s)",
        elapsed.as_secs_f64()
    ))
}

fn c4_mel_formula() -> Outcome {
    let m = |f| mel_scale(f).map_err(|e| e.to_string());
    ensure!(m(0.0)? == 0.0, "mel(0) = {}", m(0.0)?);
    let d700 = (m(700.0)? - 2595.0 * 2f64.log10()).abs();
    ensure!(d700 < 1e-3, "mel(700) off by {d700}");
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let f = 8000.0 * i as f64 / 99.0;
        let back = inverse_mel_scale(m(f)?).map_err(|e| e.to_string())?;
        worst = worst.max(if f == 0.0 { back.abs() } else { ((back - f) / f).abs() });
    }
    ensure!(worst < 1e-6, "round trip relative error {worst:.3e}");
    Ok(format!("mel(700) error {d700:.1e}, round-trip max rel err {worst:.1e}"))
}

fn c5_polarity_invariance() -> Outcome {
    let ex = FeatureExtractor::new(PipelineConfig::new(13, 16_000).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for i in 0..50 {
        let len = rng.gen_range(4000..16_000);
        let mut s = random_signal(&mut rng, len);
        let tone = rng.gen_range(100.0..3000.0);
        for (j, v) in s.iter_mut().enumerate() {
            *v = 0.3 * *v + 0.5 * (2.0 * std::f64::consts::PI * tone * j as f64 / 16_000.0).sin();
        }
        let clip = AudioClip::new(s, 16_000).unwrap();
        let a = ex.extract(&clip).map_err(|e| e.to_string())?;
        let b = ex.extract(&augment_invert(&clip)).map_err(|e| e.to_string())?;
        ensure!(
            a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()),
            "clip {i}: inverted window differs"
        );
    }
    let chirp = synth_chirp(200.0, 3000.0, 1.0, 16_000, 0.5).unwrap();
    let a = ex.extract(&chirp).map_err(|e| e.to_string())?;
    let b = ex.extract(&augment_reverse(&chirp)).map_err(|e| e.to_string())?;
    let diff = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ensure!(diff > 0.0, "reversed chirp gave an identical window");
    Ok(format!("50/50 inverted clips bit-identical; reversed chirp differs by up to {diff:.3}"))
}

fn c6_svm() -> Outcome {
    let t = Instant::now();
    let cfg = SolverConfig::default();
    let xor_x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let xor_y = [1.0, 1.0, -1.0, -1.0];
    let rbf_spec = KernelSpec::rbf();
    let (sol, gamma) = train_binary(&xor_x, &xor_y, &rbf_spec, &cfg).map_err(|e| e.to_string())?;
    ensure!(sol.converged, "XOR did not converge");
    let labels = [EmotionLabel::Neutral, EmotionLabel::Neutral, EmotionLabel::Calm, EmotionLabel::Calm];
    let xor_model = train_multiclass(&xor_x, &labels, &rbf_spec, MulticlassStrategy::Ovr, &cfg)
        .map_err(|e| e.to_string())?;
    for (x, l) in xor_x.iter().zip(labels) {
        ensure!(xor_model.predict(x).map_err(|e| e.to_string())?.0 == l, "XOR point {x:?} misclassified");
    }
    for m in &xor_model.machines {
        ensure!(m.is_dual_feasible(rbf_spec.c), "XOR machine violates the box or equality constraint");
    }

    let mut worst_gap: f64 = 0.0;
    let mut n = 0;
    for kind in [KernelKind::Rbf, KernelKind::Linear] {
        let spec = KernelSpec {
            kind,
            gamma: GammaMode::Fixed(0.5),
            c: 10.0,
        };
        for (pts, y) in four_point_problems() {
            let mut k = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    k[i][j] = match kind {
                        KernelKind::Rbf => rbf(&pts[i], &pts[j], 0.5),
                        KernelKind::Linear => linear(&pts[i], &pts[j]),
                    };
                }
            }
            let x: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
            let (sol, _) = train_binary(&x, &y, &spec, &cfg).map_err(|e| e.to_string())?;
            ensure!(sol.converged, "4-point problem {pts:?} {y:?} did not converge");
            let sum_ay: f64 = sol.alpha.iter().zip(&sol.y).map(|(a, y)| a * y).sum();
            ensure!(
                sol.alpha.iter().all(|&a| (-1e-12..=spec.c + 1e-12).contains(&a)) && sum_ay.abs() < 1e-9,
                "KKT feasibility violated on {pts:?} {y:?}"
            );
            ensure!(sol.kkt_violation <= cfg.tol, "KKT gap {} on {pts:?}", sol.kkt_violation);
            worst_gap = worst_gap.max((sol.objective - four_point_oracle(&k, &y, spec.c)).abs());
            n += 1;
        }
    }
    let elapsed = t.elapsed();
    ensure!(worst_gap < 1e-2, "objective differs from the oracle by {worst_gap:.3e}");
    within(elapsed, 60.0)?;
    Ok(format!(
        "XOR 4/4 (gamma {gamma}), {n} toy problems feasible, worst oracle gap {worst_gap:.2e} ({:.2}s)",
        elapsed.as_secs_f64()
    ))
}

fn c7_overfit() -> Outcome {
    let t = Instant::now();
    let (x, y) = overfit_fixture();
    let mut model = build_paper_cnn(13, 26).map_err(|e| e.to_string())?;
    let samples = Samples::new(&x, &y).map_err(|e| e.to_string())?;
    let (initial, _) = evaluate(&model, samples).map_err(|e| e.to_string())?;
    let ln8 = 8f64.ln();
    ensure!((initial - ln8).abs() < 0.05, "initial loss {initial} vs ln 8 {ln8}");
    let config = TrainConfig {
        optimizer: RmsPropConfig {
            lr: 1e-4,
            decay: 1e-6,
            ..RmsPropConfig::default()
        },
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(&model, config).map_err(|e| e.to_string())?;
    let mut reached = None;
    for epoch in 1..=500 {
        let row = trainer.run_epoch(&mut model, samples, None).map_err(|e| format!("epoch {epoch}: {e}"))?;
        ensure!(row.train_loss.is_finite(), "non-finite loss at epoch {epoch}");
        ensure!(model.params().iter().all(|p| p.is_finite()), "non-finite parameter at epoch {epoch}");
        if row.train_acc == 1.0 {
            reached = Some(epoch);
            break;
        }
    }
    let elapsed = t.elapsed();
    let Some(epoch) = reached else {
        return Err("did not reach 100% training accuracy in 500 epochs".into());
    };
    let report = ser_core::evaluate_model(&model, &x, &EmotionLabel::ALL).map_err(|e| e.to_string())?;
    ensure!(report.accuracy == 1.0, "evaluation accuracy {}", report.accuracy);
    within(elapsed, 300.0)?;
    Ok(format!(
        "initial loss {initial:.4} (ln 8 = {ln8:.4}), 100% at epoch {epoch}, all values finite ({:.1}s)",
        elapsed.as_secs_f64()
    ))
}

fn c8_harness_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let scores: Vec<Vec<f64>> = (0..300).map(|_| (0..8).map(|_| rng.gen::<f64>()).collect()).collect();
    let codes: Vec<usize> = (0..300).map(|_| rng.gen_range(0..8)).collect();
    let truth: Vec<EmotionLabel> = codes.iter().map(|&c| EmotionLabel::from_code(c).unwrap()).collect();
    let r = MetricsReport::from_scores(&scores, &truth).map_err(|e| e.to_string())?;
    let trace: usize = (0..8).map(|i| r.confusion[i][i]).sum();
    ensure!(trace as f64 / 300.0 == r.accuracy, "trace/N != accuracy");
    ensure!((r.micro_recall() - r.accuracy).abs() < 1e-15, "micro recall != accuracy");
    ensure!(r.top_k[0] == r.accuracy, "top-1 != accuracy");
    ensure!(r.top_k.windows(2).all(|w| w[0] <= w[1]), "top-k decreases: {:?}", r.top_k);
    ensure!(top_k_accuracy(&scores, &codes, 8).unwrap() == 1.0, "top-8 below 1");
    let m = precision_recall_f1(&[vec![8usize, 2], vec![4, 6]]);
    let want = [(8.0 / 12.0, 0.8, 0.7273), (0.75, 0.6, 0.6667)];
    for (got, (p, rc, f)) in m.iter().zip(want) {
        ensure!(
            (got.precision - p).abs() < 1e-3 && (got.recall - rc).abs() < 1e-3 && (got.f1 - f).abs() < 1e-3,
            "per-class metrics {got:?}"
        );
    }
    Ok(format!(
        "identities hold on 300 random rows (acc {:.3}); [[8,2],[4,6]] gives p/r/f1 {:.3}/{:.3}/{:.3}",
        r.accuracy, m[0].precision, m[0].recall, m[0].f1
    ))
}

fn stream_model(sr: u32) -> LoadedModel {
    let mut m = build_paper_cnn(13, 26).unwrap();
    m.pipeline = Some(PipelineConfig::new(13, 3 * sr as usize).unwrap());
    LoadedModel::Cnn(m)
}

fn stream_cfg() -> StreamConfig {
    StreamConfig {
        window_seconds: 3.0,
        hop_seconds: 0.5,
        emit: EmitFormat::Csv,
    }
}

fn c9_determinism() -> Outcome {
    let records = synthetic_records(10);
    let a = stratified_split(&records, [0.6, 0.2, 0.2], 42).map_err(|e| e.to_string())?;
    let b = stratified_split(&records, [0.6, 0.2, 0.2], 42).map_err(|e| e.to_string())?;
    ensure!(a == b, "split assignments differ");

    let (x, y) = overfit_fixture();
    let history = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        pool.install(|| {
            let mut model = build_cnn(13, 26, &CnnArch::reduced(), 4).map_err(|e| e.to_string())?;
            let config = TrainConfig {
                batch_size: 3,
                seed: 4,
                ..TrainConfig::default()
            };
            let mut trainer = Trainer::new(&model, config).map_err(|e| e.to_string())?;
            let s = Samples::new(&x, &y).map_err(|e| e.to_string())?;
            for _ in 0..5 {
                trainer.run_epoch(&mut model, s, Some(s)).map_err(|e| e.to_string())?;
            }
            Ok(format!("{:?}{:?}", trainer.history, model.params()))
        })
    };
    let h1 = history(1)?;
    ensure!(h1 == history(1)?, "single-threaded training histories differ");
    ensure!(h1 == history(2)?, "history depends on the thread count");

    let sweep_csv = || -> Result<Vec<u8>, String> {
        let cfg = SweepConfig::new(vec![10, 20], 2, 7);
        let r = run_svm_sweep(&records, |n| Ok(additive_signal_features(&records, n, 3)), &cfg)
            .map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        r.write_raw_csv(&mut buf).map_err(|e| e.to_string())?;
        r.write_mean_csv(&mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    ensure!(sweep_csv()? == sweep_csv()?, "sweep CSVs differ");

    let clip = synth_chirp(150.0, 2500.0, 6.0, 8000, 0.4).unwrap();
    let (e1, _) = stream_clip(stream_model(8000), &stream_cfg(), &clip, 700).map_err(|e| e.to_string())?;
    let (e2, _) = stream_clip(stream_model(8000), &stream_cfg(), &clip, 700).map_err(|e| e.to_string())?;
    ensure!(
        e1.len() == e2.len() && e1.iter().zip(&e2).all(|(a, b)| a.same_result(b)),
        "stream events differ"
    );
    Ok(format!(
        "splits, 5-epoch histories (1 and 2 threads), sweep CSVs and {} stream events reproduce exactly",
        e1.len()
    ))
}

fn c10_streaming() -> Outcome {
    let sr = 16_000;
    let clip = synth_chirp(100.0, 4000.0, 10.0, sr, 0.4).unwrap();
    let (small, _) = stream_clip(stream_model(sr), &stream_cfg(), &clip, 64).map_err(|e| e.to_string())?;
    let (large, summary) = stream_clip(stream_model(sr), &stream_cfg(), &clip, 4096).map_err(|e| e.to_string())?;
    ensure!(large.len() == 15, "{} events", large.len());
    ensure!(
        (large[0].t_end - 3.0).abs() < 1e-9 && (large[14].t_end - 10.0).abs() < 1e-9,
        "event times {}..{}",
        large[0].t_end,
        large[14].t_end
    );
    ensure!(
        small.len() == large.len() && small.iter().zip(&large).all(|(a, b)| a.same_result(b)),
        "64- and 4096-sample chunks disagree"
    );
    ensure!(
        large.iter().all(|e| (e.probs.iter().sum::<f64>() - 1.0).abs() < 1e-6),
        "probabilities do not sum to 1"
    );
    ensure!(summary.rtf.is_finite() && summary.latency_max_ms >= summary.latency_p95_ms, "bad summary");
    ensure!(summary.rtf < 0.25, "real-time factor {:.3} above the 0.25 target", summary.rtf);
    Ok(format!(
        "15 events, chunk-size independent; RTF {:.4}, latency p50 {:.2} ms p95 {:.2} ms max {:.2} ms",
        summary.rtf, summary.latency_p50_ms, summary.latency_p95_ms, summary.latency_max_ms
    ))
}

/// Corpus checks are binding only when the corpora are present; the full
/// reproduction additionally needs SER_REPRODUCE=1 and is never binding.
fn c11_corpora() -> Result<Option<String>, String> {
    let corpora: Vec<(Corpus, PathBuf)> = [("SER_RAVDESS_DIR", Corpus::Ravdess), ("SER_TESS_DIR", Corpus::Tess)]
        .into_iter()
        .filter_map(|(var, c)| std::env::var_os(var).map(|p| (c, PathBuf::from(p))))
        .collect();
    if corpora.is_empty() {
        return Ok(None);
    }
    let mut notes = Vec::new();
    for (corpus, root) in &corpora {
        let scan = scan_corpus(root, *corpus).map_err(|e| e.to_string())?;
        let report = validate_manifest(&scan.records, *corpus);
        ensure!(report.pass, "{} validation failed:\n{}", corpus.name(), report.to_text());
        notes.push(format!("{} {} files", corpus.name(), report.total));
    }
    if std::env::var_os("SER_REPRODUCE").is_some() {
        if let Some((_, ravdess)) = corpora.iter().find(|(c, _)| *c == Corpus::Ravdess) {
            let out_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut cmd = ser();
            cmd.arg("reproduce").arg("--ravdess").arg(ravdess).arg("--out-dir").arg(out_dir.path());
            if let Some((_, tess)) = corpora.iter().find(|(c, _)| *c == Corpus::Tess) {
                cmd.arg("--tess").arg(tess);
            }
            let out = cmd.output().map_err(|e| e.to_string())?;
            println!("{}", String::from_utf8_lossy(&out.stdout));
            notes.push(format!("reproduction exit status {}", out.status));
        }
    }
    Ok(Some(notes.join("; ")))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 architecture audit", c1_architecture_audit),
        ("2 gradient correctness", c2_gradient_check),
        ("3 dsp oracle equivalence", c3_dsp_oracles),
        ("4 mel formula", c4_mel_formula),
        ("5 mfcc polarity invariance", c5_polarity_invariance),
        ("6 svm correctness", c6_svm),
        ("7 overfit fixture", c7_overfit),
        ("8 harness identities", c8_harness_identities),
        ("9 determinism", c9_determinism),
        ("10 streaming", c10_streaming),
    ];
    let mut failed = BTreeMap::new();
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS {detail}"),
            Err(why) => {
                println!("criterion {name}: FAIL {why}");
                failed.insert(name, why);
            }
        }
    }
    match catch_unwind(c11_corpora) {
        Ok(Ok(None)) => println!("criterion 11 corpus validation: SKIP (SER_RAVDESS_DIR / SER_TESS_DIR not set)"),
        Ok(Ok(Some(detail))) => println!("criterion 11 corpus validation: PASS {detail}"),
        Ok(Err(why)) => {
            println!("criterion 11 corpus validation: FAIL {why}");
            failed.insert("11 corpus validation", why);
        }
        Err(_) => {
            println!("criterion 11 corpus validation: FAIL panicked");
            failed.insert("11 corpus validation", "panicked".into());
        }
    }
    if !failed.is_empty() {
        eprintln!("{} acceptance criteria failed", failed.len());
        std::process::exit(1);
    }
}
