//! Layer kernels. Spatial tensors are HWC; conv weights are laid out
//! `[ky][kx][cin][cout]` and dense weights `[in][out]`, so the innermost
//! loops always run over output channels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const KERNEL: usize = 3;
pub const POOL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Same,
    Valid,
}

impl Padding {
    fn amount(self) -> usize {
        match self {
            Padding::Same => KERNEL / 2,
            Padding::Valid => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    None,
    Relu,
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LayerSpec {
    Conv2D {
        filters: usize,
        padding: Padding,
        activation: Activation,
    },
    MaxPool2D,
    Dropout {
        rate: f64,
    },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

fn spatial(shape: &[usize]) -> Result<(usize, usize, usize)> {
    match *shape {
        [h, w, c] => Ok((h, w, c)),
        _ => Err(Error::Shape(format!("expected an HxWxC tensor, got shape {shape:?}"))),
    }
}

pub(crate) fn conv_output_dims(h: usize, w: usize, padding: Padding) -> Result<(usize, usize)> {
    let p = padding.amount();
    if h + 2 * p < KERNEL || w + 2 * p < KERNEL {
        return Err(Error::Shape(format!("{h}x{w} input too small for a {KERNEL}x{KERNEL} valid convolution")));
    }
    Ok((h + 2 * p - KERNEL + 1, w + 2 * p - KERNEL + 1))
}

pub(crate) fn pool_output_dims(h: usize, w: usize) -> Result<(usize, usize)> {
    if h < POOL || w < POOL {
        return Err(Error::Shape(format!("{h}x{w} input too small for {POOL}x{POOL} pooling")));
    }
    Ok((h / POOL, w / POOL))
}

/// Shape-checked raw convolution; `x` is `h x w x cin`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_forward_raw(
    x: &[f64],
    h: usize,
    w: usize,
    cin: usize,
    weights: &[f64],
    bias: &[f64],
    padding: Padding,
    out: &mut Vec<f64>,
) -> (usize, usize) {
    let cout = bias.len();
    let pad = padding.amount();
    let (ho, wo) = (h + 2 * pad - KERNEL + 1, w + 2 * pad - KERNEL + 1);
    out.clear();
    out.resize(ho * wo * cout, 0.0);
    for oy in 0..ho {
        for ox in 0..wo {
            let o = &mut out[(oy * wo + ox) * cout..][..cout];
            o.copy_from_slice(bias);
            for ky in 0..KERNEL {
                let Some(iy) = (oy + ky).checked_sub(pad).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..KERNEL {
                    let Some(ix) = (ox + kx).checked_sub(pad).filter(|&v| v < w) else {
                        continue;
                    };
                    let xin = &x[(iy * w + ix) * cin..][..cin];
                    let wk = &weights[(ky * KERNEL + kx) * cin * cout..][..cin * cout];
                    for (ci, &v) in xin.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        let wrow = &wk[ci * cout..][..cout];
                        for (acc, &wv) in o.iter_mut().zip(wrow) {
                            *acc += v * wv;
                        }
                    }
                }
            }
        }
    }
    (ho, wo)
}

/// Accumulates weight/bias gradients and, when `dx` is given, the input
/// gradient of a convolution.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward_raw(
    x: &[f64],
    h: usize,
    w: usize,
    cin: usize,
    weights: &[f64],
    cout: usize,
    padding: Padding,
    dout: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let pad = padding.amount();
    let (ho, wo) = (h + 2 * pad - KERNEL + 1, w + 2 * pad - KERNEL + 1);
    for oy in 0..ho {
        for ox in 0..wo {
            let g = &dout[(oy * wo + ox) * cout..][..cout];
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (b, &gv) in db.iter_mut().zip(g) {
                *b += gv;
            }
            for ky in 0..KERNEL {
                let Some(iy) = (oy + ky).checked_sub(pad).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..KERNEL {
                    let Some(ix) = (ox + kx).checked_sub(pad).filter(|&v| v < w) else {
                        continue;
                    };
                    let base = (iy * w + ix) * cin;
                    let koff = (ky * KERNEL + kx) * cin * cout;
                    for ci in 0..cin {
                        let v = x[base + ci];
                        let wrow = &weights[koff + ci * cout..][..cout];
                        let dwrow = &mut dw[koff + ci * cout..][..cout];
                        let mut acc = 0.0;
                        for co in 0..cout {
                            dwrow[co] += v * g[co];
                            acc += wrow[co] * g[co];
                        }
                        if let Some(dx) = dx.as_deref_mut() {
                            dx[base + ci] += acc;
                        }
                    }
                }
            }
        }
    }
}

/// 3x3 cross-correlation plus bias. `weights` has shape `[3, 3, cin, cout]`.
pub fn conv2d_forward(input: &Tensor, weights: &Tensor, bias: &Tensor, padding: Padding) -> Result<Tensor> {
    let (h, w, cin) = spatial(input.shape())?;
    let cout = bias.len();
    if weights.shape() != [KERNEL, KERNEL, cin, cout] {
        return Err(Error::Shape(format!(
            "weights {:?} do not match input channels {cin} and {cout} filters",
            weights.shape()
        )));
    }
    conv_output_dims(h, w, padding)?;
    let mut out = Vec::new();
    let (ho, wo) = conv_forward_raw(input.data(), h, w, cin, weights.data(), bias.data(), padding, &mut out);
    Tensor::new(vec![ho, wo, cout], out)
}

pub(crate) fn maxpool_forward_raw(x: &[f64], h: usize, w: usize, c: usize, out: &mut Vec<f64>, argmax: &mut Vec<u32>) {
    let (ho, wo) = (h / POOL, w / POOL);
    out.clear();
    argmax.clear();
    for oy in 0..ho {
        for ox in 0..wo {
            for ch in 0..c {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for dy in 0..POOL {
                    for dx in 0..POOL {
                        let idx = ((oy * POOL + dy) * w + ox * POOL + dx) * c + ch;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.push(best);
                argmax.push(best_idx as u32);
            }
        }
    }
}

/// Non-overlapping 2x2 max pooling; trailing odd rows/columns are dropped.
/// The mask holds, per output value, the flat index of the winning input.
pub fn maxpool2d_forward(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let (h, w, c) = spatial(input.shape())?;
    let (ho, wo) = pool_output_dims(h, w)?;
    let mut out = Vec::new();
    let mut argmax = Vec::new();
    maxpool_forward_raw(input.data(), h, w, c, &mut out, &mut argmax);
    Ok((Tensor::new(vec![ho, wo, c], out)?, argmax.into_iter().map(|i| i as usize).collect()))
}

pub(crate) fn dense_forward_raw(x: &[f64], weights: &[f64], bias: &[f64], out: &mut Vec<f64>) {
    let units = bias.len();
    out.clear();
    out.extend_from_slice(bias);
    for (i, &v) in x.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(&weights[i * units..][..units]) {
            *o += v * wv;
        }
    }
}

pub(crate) fn dense_backward_raw(
    x: &[f64],
    weights: &[f64],
    dout: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let units = dout.len();
    for (b, &g) in db.iter_mut().zip(dout) {
        *b += g;
    }
    for (i, &v) in x.iter().enumerate() {
        let wrow = &weights[i * units..][..units];
        let dwrow = &mut dw[i * units..][..units];
        let mut acc = 0.0;
        for o in 0..units {
            dwrow[o] += v * dout[o];
            acc += wrow[o] * dout[o];
        }
        if let Some(dx) = dx.as_deref_mut() {
            dx[i] = acc;
        }
    }
}

/// Affine map `x W + b` with `weights` shaped `[in, units]`.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    if input.shape().len() != 1 || weights.shape() != [input.len(), bias.len()] {
        return Err(Error::Shape(format!(
            "dense weights {:?} incompatible with input {:?} and {} units",
            weights.shape(),
            input.shape(),
            bias.len()
        )));
    }
    let mut out = Vec::new();
    dense_forward_raw(input.data(), weights.data(), bias.data(), &mut out);
    Tensor::new(vec![bias.len()], out)
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    relu_in_place(out.data_mut());
    out
}

pub fn softmax_in_place(x: &mut [f64]) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in x.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in x.iter_mut() {
        *v /= sum;
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    out
}

pub fn flatten(input: &Tensor) -> Tensor {
    let n = input.len();
    Tensor::new(vec![n], input.data().to_vec()).expect("flatten keeps the element count")
}

/// Inverted dropout mask: each entry is 0 with probability `rate`, else
/// `1 / (1 - rate)`.
pub(crate) fn dropout_mask<R: Rng + ?Sized>(n: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..n).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect()
}

/// Inverted dropout. Inference mode and rate 0 are the identity.
pub fn dropout<R: Rng + ?Sized>(input: &Tensor, rate: f64, mode: Mode, rng: &mut R) -> Result<Tensor> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    if mode == Mode::Infer || rate == 0.0 {
        return Ok(input.clone());
    }
    let mask = dropout_mask(input.len(), rate, rng);
    let data = input.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
    Tensor::new(input.shape().to_vec(), data)
}

/// Mean of `-ln p_true` with probabilities clamped to at least 1e-12.
pub fn cross_entropy_loss(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if probs.len() != labels.len() || probs.is_empty() {
        return Err(Error::Shape(format!("{} probability rows for {} labels", probs.len(), labels.len())));
    }
    let mut total = 0.0;
    for (p, &y) in probs.iter().zip(labels) {
        let pt = *p
            .get(y)
            .ok_or_else(|| Error::Data(format!("label {y} out of range for {} classes", p.len())))?;
        total -= pt.max(1e-12).ln();
    }
    Ok(total / probs.len() as f64)
}
