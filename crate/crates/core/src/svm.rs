//! Soft-margin kernel SVM trained on flattened feature windows.
//!
//! Binary problems are solved in the dual,
//!
//! ```text
//! max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! s.t. 0 <= a_i <= C,  sum(a_i y_i) = 0
//! ```
//!
//! by sequential minimal optimization: each step picks the maximal violating
//! pair (second-order selection for the partner) and solves the two-variable
//! subproblem analytically. Selection is deterministic, so no seed is
//! involved. Multiclass uses one-vs-rest by default, one-vs-one on request.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::container::{BinReader, BinWriter};
use crate::dataset::{EmotionLabel, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::features::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMode {
    /// 1 / (n_features * var(X)).
    Scale,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: GammaMode,
    pub c: f64,
}

impl KernelSpec {
    pub fn rbf() -> Self {
        Self {
            kind: KernelKind::Rbf,
            gamma: GammaMode::Scale,
            c: 10.0,
        }
    }

    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            ..Self::rbf()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if let GammaMode::Fixed(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("fixed gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MulticlassStrategy {
    #[default]
    Ovr,
    Ovo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    /// Iteration cap is `max_passes * n`.
    pub max_passes: usize,
    /// Duals at or below this are not kept as support vectors.
    pub support_threshold: f64,
    /// Precompute the full Gram matrix up to this many samples; above it
    /// kernel rows are recomputed on demand.
    pub dense_kernel_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_passes: 10_000,
            support_threshold: 1e-8,
            dense_kernel_limit: 6000,
        }
    }
}

fn check_matrix(x: &[Vec<f64>]) -> Result<usize> {
    let d = x.first().map(Vec::len).ok_or_else(|| Error::Data("empty feature matrix".into()))?;
    if d == 0 {
        return Err(Error::Data("feature vectors have zero dimension".into()));
    }
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Shape(format!("row {i} has {} features, expected {d}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {i} contains non-finite features")));
        }
    }
    Ok(d)
}

/// Resolves the RBF width. `Scale` is 1 / (d * var) with the population
/// variance over every entry of `x`.
pub fn resolve_gamma(x: &[Vec<f64>], spec: &KernelSpec) -> Result<f64> {
    match spec.gamma {
        GammaMode::Fixed(g) if g > 0.0 => Ok(g),
        GammaMode::Fixed(g) => Err(Error::Domain(format!("fixed gamma must be positive, got {g}"))),
        GammaMode::Scale => {
            let d = check_matrix(x)?;
            let count = (x.len() * d) as f64;
            let mean = x.iter().flatten().sum::<f64>() / count;
            let var = x.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
            if !(var > 0.0) {
                return Err(Error::Domain("gamma=scale undefined for zero-variance features".into()));
            }
            Ok(1.0 / (d as f64 * var))
        }
    }
}

/// linear: <x, z>; rbf: exp(-gamma * |x - z|^2).
pub fn kernel_eval(x: &[f64], z: &[f64], kind: KernelKind, gamma: f64) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::Shape(format!("kernel inputs of length {} and {}", x.len(), z.len())));
    }
    Ok(kernel_unchecked(x, z, kind, gamma))
}

#[inline]
fn kernel_unchecked(x: &[f64], z: &[f64], kind: KernelKind, gamma: f64) -> f64 {
    match kind {
        KernelKind::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
        KernelKind::Rbf => {
            let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            (-gamma * d2).exp()
        }
    }
}

/// Gram matrix over a sample set, dense or computed row by row.
struct Gram<'a> {
    x: &'a [Vec<f64>],
    kind: KernelKind,
    gamma: f64,
    dense: Option<Vec<f64>>,
}

impl<'a> Gram<'a> {
    fn new(x: &'a [Vec<f64>], kind: KernelKind, gamma: f64, dense_limit: usize) -> Self {
        let n = x.len();
        let dense = (n <= dense_limit).then(|| {
            let mut k = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = kernel_unchecked(&x[i], &x[j], kind, gamma);
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
            k
        });
        Self { x, kind, gamma, dense }
    }

    /// Kernel values between sample `i` and each of `idx`.
    fn row(&self, i: usize, idx: &[usize]) -> Cow<'_, [f64]> {
        let n = self.x.len();
        match &self.dense {
            Some(k) if idx.len() == n => Cow::Borrowed(&k[i * n..(i + 1) * n]),
            Some(k) => Cow::Owned(idx.iter().map(|&j| k[i * n + j]).collect()),
            None => Cow::Owned(
                idx.iter()
                    .map(|&j| kernel_unchecked(&self.x[i], &self.x[j], self.kind, self.gamma))
                    .collect(),
            ),
        }
    }

    fn diag(&self, i: usize) -> f64 {
        match &self.dense {
            Some(k) => k[i * self.x.len() + i],
            None => kernel_unchecked(&self.x[i], &self.x[i], self.kind, self.gamma),
        }
    }
}

/// Raw dual solution of one binary problem over the full training set.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub y: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// max over I_up of -y G minus min over I_low of -y G at exit.
    pub kkt_violation: f64,
}

impl DualSolution {
    pub fn dual_sum(&self) -> f64 {
        self.alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum()
    }
}

const TAU: f64 = 1e-12;

fn solve_dual(gram: &Gram<'_>, idx: &[usize], y: &[f64], c: f64, cfg: &SolverConfig) -> DualSolution {
    let n = idx.len();
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0; n];
    let qd: Vec<f64> = idx.iter().map(|&i| gram.diag(i)).collect();
    let max_iter = cfg.max_passes.saturating_mul(n.max(1));
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    let mut violation;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if in_low(alpha[t], y[t]) {
                gmin = gmin.min(-y[t] * grad[t]);
            }
        }
        violation = (gmax - gmin).max(0.0);
        if i_sel == usize::MAX || gmax - gmin < cfg.tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        let i = i_sel;
        let k_i = gram.row(idx[i], idx);
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let mut a = qd[i] + qd[t] - 2.0 * k_i[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j_sel = t;
                }
            }
        }
        if j_sel == usize::MAX {
            converged = true;
            break;
        }
        let j = j_sel;
        let k_j = gram.row(idx[j], idx);
        let q_ij = y[i] * y[j] * k_i[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k_i[t] * di + y[j] * k_j[t] * dj);
        }
        iterations += 1;
    }

    // bias = -rho, rho from free vectors or the midpoint of the feasible band
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 { free_sum / free_count as f64 } else { (ub + lb) / 2.0 };
    let objective = alpha.iter().sum::<f64>()
        - 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g + 1.0)).sum::<f64>();
    DualSolution {
        alpha,
        y: y.to_vec(),
        bias: -rho,
        objective,
        iterations,
        converged,
        kkt_violation: violation,
    }
}

/// One trained two-class machine: decision(x) = sum_k coef_k K(sv_k, x) + bias.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMachine {
    /// Class treated as +1.
    pub positive: EmotionLabel,
    /// Class treated as -1; `None` means all other classes.
    pub negative: Option<EmotionLabel>,
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_k * y_k per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    /// sum(alpha_i y_i) over all training points, before support filtering.
    pub dual_sum: f64,
}

impl BinaryMachine {
    pub fn decision(&self, x: &[f64], kind: KernelKind, gamma: f64) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, coef)| coef * kernel_unchecked(sv, x, kind, gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Box and equality constraints of the dual.
    pub fn is_dual_feasible(&self, c: f64) -> bool {
        self.dual_coef.iter().all(|a| a.abs() <= c && a.abs() >= 0.0) && self.dual_sum.abs() < 1e-6
    }
}

fn machine_from_solution(
    sol: &DualSolution,
    x: &[Vec<f64>],
    idx: &[usize],
    positive: EmotionLabel,
    negative: Option<EmotionLabel>,
    cfg: &SolverConfig,
) -> BinaryMachine {
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > cfg.support_threshold {
            support_vectors.push(x[idx[t]].clone());
            dual_coef.push(a * sol.y[t]);
        }
    }
    BinaryMachine {
        positive,
        negative,
        support_vectors,
        dual_coef,
        bias: sol.bias,
        objective: sol.objective,
        iterations: sol.iterations,
        converged: sol.converged,
        kkt_violation: sol.kkt_violation,
        dual_sum: sol.dual_sum(),
    }
}

/// Trains a single binary SVM on labels in {-1, +1}. Returns the raw dual
/// solution (alpha over every training point) alongside the resolved gamma.
pub fn train_binary(x: &[Vec<f64>], y: &[f64], spec: &KernelSpec, cfg: &SolverConfig) -> Result<(DualSolution, f64)> {
    spec.validate()?;
    check_matrix(x)?;
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Training("need at least two training points".into()));
    }
    if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::Data(format!("binary labels must be +1 or -1, got {v}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Training("both classes must be present".into()));
    }
    let gamma = resolve_gamma(x, spec)?;
    let gram = Gram::new(x, spec.kind, gamma, cfg.dense_kernel_limit);
    let idx: Vec<usize> = (0..x.len()).collect();
    Ok((solve_dual(&gram, &idx, y, spec.c, cfg), gamma))
}

/// Trained multiclass model.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub spec: KernelSpec,
    pub gamma: f64,
    pub strategy: MulticlassStrategy,
    pub classes: Vec<EmotionLabel>,
    pub dim: usize,
    pub machines: Vec<BinaryMachine>,
    /// Feature pipeline the model was trained with, when known.
    pub pipeline: Option<PipelineConfig>,
}

/// Multiclass training (one-vs-rest or one-vs-one). Subproblems share one
/// Gram matrix and are solved in parallel.
pub fn train_multiclass(
    x: &[Vec<f64>],
    labels: &[EmotionLabel],
    spec: &KernelSpec,
    strategy: MulticlassStrategy,
    cfg: &SolverConfig,
) -> Result<SvmModel> {
    spec.validate()?;
    let dim = check_matrix(x)?;
    if x.len() != labels.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.len(), labels.len())));
    }
    let mut classes: Vec<EmotionLabel> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Training(format!("need at least 2 classes, found {}", classes.len())));
    }
    let gamma = resolve_gamma(x, spec)?;
    let gram = Gram::new(x, spec.kind, gamma, cfg.dense_kernel_limit);

    let problems: Vec<(EmotionLabel, Option<EmotionLabel>)> = match strategy {
        MulticlassStrategy::Ovr => classes.iter().map(|&c| (c, None)).collect(),
        MulticlassStrategy::Ovo => {
            let mut p = Vec::new();
            for (a, &ca) in classes.iter().enumerate() {
                for &cb in &classes[a + 1..] {
                    p.push((ca, Some(cb)));
                }
            }
            p
        }
    };
    let machines = problems
        .par_iter()
        .map(|&(pos, neg)| {
            let idx: Vec<usize> = (0..x.len())
                .filter(|&i| neg.is_none_or(|n| labels[i] == pos || labels[i] == n))
                .collect();
            let y: Vec<f64> = idx.iter().map(|&i| if labels[i] == pos { 1.0 } else { -1.0 }).collect();
            let sol = solve_dual(&gram, &idx, &y, spec.c, cfg);
            if !sol.converged {
                log::warn!(
                    "SVM subproblem {pos} vs {} hit the iteration cap (violation {:.3e})",
                    neg.map_or("rest".to_string(), |n| n.to_string()),
                    sol.kkt_violation
                );
            }
            machine_from_solution(&sol, x, &idx, pos, neg, cfg)
        })
        .collect();
    Ok(SvmModel {
        spec: *spec,
        gamma,
        strategy,
        classes,
        dim,
        machines,
        pipeline: None,
    })
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl SvmModel {
    /// Per-class decision values indexed by label code (classes absent from
    /// training score -inf) and the winning label.
    ///
    /// One-vs-rest scores are the machine outputs. One-vs-one scores are
    /// vote counts plus a bounded confidence term,
    /// `votes + conf / (3 (|conf| + 1))`, which never overturns a vote lead.
    pub fn predict(&self, x: &[f64]) -> Result<(EmotionLabel, Vec<f64>)> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!("input has {} features, model expects {}", x.len(), self.dim)));
        }
        let mut scores = vec![f64::NEG_INFINITY; NUM_CLASSES];
        match self.strategy {
            MulticlassStrategy::Ovr => {
                for m in &self.machines {
                    scores[m.positive.code()] = m.decision(x, self.spec.kind, self.gamma);
                }
            }
            MulticlassStrategy::Ovo => {
                let mut votes = [0.0; NUM_CLASSES];
                let mut conf = [0.0; NUM_CLASSES];
                for m in &self.machines {
                    let neg = m.negative.expect("one-vs-one machine has a negative class");
                    let d = m.decision(x, self.spec.kind, self.gamma);
                    if d > 0.0 {
                        votes[m.positive.code()] += 1.0;
                    } else {
                        votes[neg.code()] += 1.0;
                    }
                    conf[m.positive.code()] += d;
                    conf[neg.code()] -= d;
                }
                for c in &self.classes {
                    let k = c.code();
                    scores[k] = votes[k] + conf[k] / (3.0 * (conf[k].abs() + 1.0));
                }
            }
        }
        let label = EmotionLabel::from_code(argmax_lowest(&scores))?;
        Ok((label, scores))
    }

    pub fn support_vector_count(&self) -> usize {
        self.machines.iter().map(|m| m.support_vectors.len()).sum()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "kernel={:?} C={} gamma={:.6e} strategy={:?} dim={} classes={}",
            self.spec.kind,
            self.spec.c,
            self.gamma,
            self.strategy,
            self.dim,
            self.classes.iter().map(|c| c.name()).collect::<Vec<_>>().join("/")
        );
        for m in &self.machines {
            let _ = writeln!(
                s,
                "  {} vs {}: support_vectors={} objective={:.6} iterations={} converged={} kkt_violation={:.3e}",
                m.positive,
                m.negative.map_or("rest", |n| n.name()),
                m.support_vectors.len(),
                m.objective,
                m.iterations,
                m.converged,
                m.kkt_violation
            );
        }
        s
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BinWriter::new(out, crate::container::SVM_MAGIC)?;
        w.u8(match self.spec.kind {
            KernelKind::Linear => 0,
            KernelKind::Rbf => 1,
        })?;
        match self.spec.gamma {
            GammaMode::Scale => {
                w.u8(0)?;
                w.f64(0.0)?;
            }
            GammaMode::Fixed(g) => {
                w.u8(1)?;
                w.f64(g)?;
            }
        }
        w.f64(self.spec.c)?;
        w.f64(self.gamma)?;
        w.u8(match self.strategy {
            MulticlassStrategy::Ovr => 0,
            MulticlassStrategy::Ovo => 1,
        })?;
        w.u32(self.dim as u32)?;
        w.u8(self.classes.len() as u8)?;
        for c in &self.classes {
            w.u8(c.code() as u8)?;
        }
        w.pipeline(self.pipeline.as_ref())?;
        w.u32(self.machines.len() as u32)?;
        for m in &self.machines {
            w.u8(m.positive.code() as u8)?;
            w.u8(m.negative.map_or(u8::MAX, |n| n.code() as u8))?;
            w.f64(m.bias)?;
            w.f64(m.objective)?;
            w.f64(m.dual_sum)?;
            w.f64(m.kkt_violation)?;
            w.u64(m.iterations as u64)?;
            w.u8(u8::from(m.converged))?;
            w.u32(m.support_vectors.len() as u32)?;
            for (sv, coef) in m.support_vectors.iter().zip(&m.dual_coef) {
                w.f64(*coef)?;
                for &v in sv {
                    w.f64(v)?;
                }
            }
        }
        w.finish()
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut r = BinReader::new(input, crate::container::SVM_MAGIC)?;
        let kind = match r.u8()? {
            0 => KernelKind::Linear,
            1 => KernelKind::Rbf,
            k => return Err(Error::Format(format!("unknown kernel kind {k}"))),
        };
        let gamma_mode = r.u8()?;
        let fixed = r.f64()?;
        let gamma_spec = match gamma_mode {
            0 => GammaMode::Scale,
            1 => GammaMode::Fixed(fixed),
            g => return Err(Error::Format(format!("unknown gamma mode {g}"))),
        };
        let c = r.f64()?;
        let gamma = r.f64()?;
        let strategy = match r.u8()? {
            0 => MulticlassStrategy::Ovr,
            1 => MulticlassStrategy::Ovo,
            s => return Err(Error::Format(format!("unknown multiclass strategy {s}"))),
        };
        let dim = r.u32()? as usize;
        let n_classes = r.u8()? as usize;
        let classes = (0..n_classes)
            .map(|_| EmotionLabel::from_code(usize::from(r.u8()?)))
            .collect::<Result<Vec<_>>>()?;
        let pipeline = r.pipeline()?;
        let n_machines = r.u32()? as usize;
        let mut machines = Vec::with_capacity(n_machines);
        for _ in 0..n_machines {
            let positive = EmotionLabel::from_code(usize::from(r.u8()?))?;
            let neg = r.u8()?;
            let negative = if neg == u8::MAX { None } else { Some(EmotionLabel::from_code(usize::from(neg))?) };
            let bias = r.f64()?;
            let objective = r.f64()?;
            let dual_sum = r.f64()?;
            let kkt_violation = r.f64()?;
            let iterations = r.u64()? as usize;
            let converged = r.u8()? != 0;
            let n_sv = r.u32()? as usize;
            let mut support_vectors = Vec::with_capacity(n_sv);
            let mut dual_coef = Vec::with_capacity(n_sv);
            for _ in 0..n_sv {
                dual_coef.push(r.f64()?);
                support_vectors.push((0..dim).map(|_| r.f64()).collect::<Result<Vec<_>>>()?);
            }
            machines.push(BinaryMachine {
                positive,
                negative,
                support_vectors,
                dual_coef,
                bias,
                objective,
                iterations,
                converged,
                kkt_violation,
                dual_sum,
            });
        }
        let spec = KernelSpec {
            kind,
            gamma: gamma_spec,
            c,
        };
        spec.validate()?;
        Ok(SvmModel {
            spec,
            gamma,
            strategy,
            classes,
            dim,
            machines,
            pipeline,
        })
    }
}
