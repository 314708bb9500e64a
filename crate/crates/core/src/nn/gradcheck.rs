//! Central finite-difference verification of `CnnModel::backward`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{softmax_ce_grad, CnnModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub layer: String,
    /// "kernel" or "bias".
    pub param: &'static str,
    pub checked: usize,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
    pub max_rel_err: f64,
    pub h: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tensors {
            s.push_str(&format!(
                "{:<16}{:<8}checked={:<7}max_rel_err={:.3e}\n",
                t.layer, t.param, t.checked, t.max_rel_err
            ));
        }
        s.push_str(&format!("max relative error {:.3e} (h={:e})\n", self.max_rel_err, self.h));
        s
    }
}

/// `|a - n| / max(|a|, |n|)`, with the denominator floored at `1e-7` so
/// gradients at round-off scale compare in absolute terms.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7)
}

fn dropout_rng(seed: Option<u64>, sample: usize) -> Option<ChaCha8Rng> {
    seed.map(|s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        rng.set_stream(sample as u64);
        rng
    })
}

fn batch_loss(model: &CnnModel, inputs: &[Vec<f64>], labels: &[usize], seed: Option<u64>) -> Result<f64> {
    let mut total = 0.0;
    for (i, (x, &y)) in inputs.iter().zip(labels).enumerate() {
        let mut rng = dropout_rng(seed, i);
        let trace = model.forward(x, rng.as_mut())?;
        total -= trace.output()[y].max(1e-12).ln();
    }
    Ok(total / inputs.len() as f64)
}

/// Compares analytic gradients of the mean cross-entropy with central
/// differences. With `dropout_seed` the network runs in training mode with
/// masks fixed by the seed; otherwise dropout is inactive.
/// `max_per_tensor` limits the check to evenly spaced entries.
pub fn gradient_check(
    model: &CnnModel,
    inputs: &[Vec<f64>],
    labels: &[usize],
    h: f64,
    dropout_seed: Option<u64>,
    max_per_tensor: Option<usize>,
) -> Result<GradCheckReport> {
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::Config("gradient check needs a non-empty labelled batch".into()));
    }
    let n_classes = model.output_len();
    if let Some(&y) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::Data(format!("label {y} out of range for {n_classes} classes")));
    }
    let mut grads = model.zero_gradients();
    let scale = 1.0 / inputs.len() as f64;
    for (i, (x, &y)) in inputs.iter().zip(labels).enumerate() {
        let mut rng = dropout_rng(dropout_seed, i);
        let trace = model.forward(x, rng.as_mut())?;
        let mut g = softmax_ce_grad(trace.output(), y)?;
        g.iter_mut().for_each(|v| *v *= scale);
        model.backward(&trace, &g, &mut grads)?;
    }

    let names: Vec<String> = model
        .layer_summaries()
        .into_iter()
        .filter(|l| l.params > 0)
        .map(|l| l.name)
        .collect();
    let mut work = model.clone();
    let mut tensors = Vec::new();
    let mut max_rel_err: f64 = 0.0;
    for (ti, analytic) in grads.tensors.iter().enumerate() {
        let n = analytic.len();
        let step = max_per_tensor.map_or(1, |m| n.div_ceil(m.max(1)).max(1));
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for k in (0..n).step_by(step) {
            let orig = work.params()[ti].data()[k];
            work.params_mut()[ti].data_mut()[k] = orig + h;
            let plus = batch_loss(&work, inputs, labels, dropout_seed)?;
            work.params_mut()[ti].data_mut()[k] = orig - h;
            let minus = batch_loss(&work, inputs, labels, dropout_seed)?;
            work.params_mut()[ti].data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(relative_error(analytic[k], numeric));
            checked += 1;
        }
        max_rel_err = max_rel_err.max(worst);
        tensors.push(TensorCheck {
            layer: names[ti / 2].clone(),
            param: if ti % 2 == 0 { "kernel" } else { "bias" },
            checked,
            max_rel_err: worst,
        });
    }
    Ok(GradCheckReport { tensors, max_rel_err, h })
}
