use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    conv_backward_raw, conv_forward_raw, conv_output_dims, dense_backward_raw, dense_forward_raw, dropout_mask,
    maxpool_forward_raw, pool_output_dims, relu_in_place, softmax_in_place, Activation, LayerSpec, Padding, KERNEL,
};
use super::tensor::Tensor;
use crate::dataset::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::features::PipelineConfig;

/// Widths and dropout rates of the two-block CNN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CnnArch {
    pub block1_filters: usize,
    pub block2_filters: usize,
    pub dense_units: usize,
    pub dropout: [f64; 3],
    pub n_classes: usize,
}

impl Default for CnnArch {
    fn default() -> Self {
        Self {
            block1_filters: 32,
            block2_filters: 64,
            dense_units: 512,
            dropout: [0.25, 0.25, 0.5],
            n_classes: NUM_CLASSES,
        }
    }
}

impl CnnArch {
    /// 8/8 filters and 16 dense units; used for gradient checks.
    pub fn reduced() -> Self {
        Self {
            block1_filters: 8,
            block2_filters: 8,
            dense_units: 16,
            ..Self::default()
        }
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        let conv = |filters, padding| LayerSpec::Conv2D {
            filters,
            padding,
            activation: Activation::Relu,
        };
        vec![
            conv(self.block1_filters, Padding::Same),
            conv(self.block1_filters, Padding::Valid),
            LayerSpec::MaxPool2D,
            LayerSpec::Dropout { rate: self.dropout[0] },
            conv(self.block2_filters, Padding::Same),
            conv(self.block2_filters, Padding::Valid),
            LayerSpec::MaxPool2D,
            LayerSpec::Dropout { rate: self.dropout[1] },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                units: self.dense_units,
                activation: Activation::Relu,
            },
            LayerSpec::Dropout { rate: self.dropout[2] },
            LayerSpec::Dense {
                units: self.n_classes,
                activation: Activation::Softmax,
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    pub spec: LayerSpec,
    pub input_shape: Vec<usize>,
    pub output_shape: Vec<usize>,
    /// Index of this layer's weight tensor in `CnnModel::params`; the bias
    /// follows it.
    pub param_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSummary {
    pub name: String,
    pub kind: &'static str,
    pub output_shape: Vec<usize>,
    pub params: usize,
}

/// Sequential network over one `H x W x C` input at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    params: Vec<Tensor>,
    /// Bumped on every parameter update; traces from older versions are
    /// stale.
    version: u64,
    pub seed: u64,
    pub pipeline: Option<PipelineConfig>,
}

/// Per-sample forward record used by `backward`.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
    aux: Vec<Aux>,
    version: u64,
}

#[derive(Debug, Clone)]
enum Aux {
    None,
    Mask(Vec<f64>),
    Argmax(Vec<u32>),
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace holds the input")
    }
}

/// Gradient buffers aligned with `CnnModel::params`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in &mut self.tensors {
            for v in t {
                *v *= s;
            }
        }
    }

    /// Sums in a fixed pairwise tree: (g0+g1)+(g2+g3), ... so the result is
    /// independent of how the inputs were computed.
    pub fn tree_sum(mut items: Vec<Gradients>) -> Option<Gradients> {
        while items.len() > 1 {
            let mut next = Vec::with_capacity(items.len().div_ceil(2));
            let mut it = items.into_iter();
            while let Some(mut a) = it.next() {
                if let Some(b) = it.next() {
                    a.add_assign(&b);
                }
                next.push(a);
            }
            items = next;
        }
        items.pop()
    }
}

fn layer_kind(spec: &LayerSpec) -> &'static str {
    match spec {
        LayerSpec::Conv2D { .. } => "conv2d",
        LayerSpec::MaxPool2D => "max_pooling2d",
        LayerSpec::Dropout { .. } => "dropout",
        LayerSpec::Flatten => "flatten",
        LayerSpec::Dense { .. } => "dense",
    }
}

impl CnnModel {
    /// Builds the layer stack and checks every shape; parameters start at
    /// zero until `initialize`.
    pub fn from_specs(input_shape: Vec<usize>, specs: &[LayerSpec]) -> Result<Self> {
        if input_shape.len() != 3 || input_shape.contains(&0) {
            return Err(Error::Shape(format!("input shape must be HxWxC, got {input_shape:?}")));
        }
        let mut shape = input_shape.clone();
        let mut layers = Vec::with_capacity(specs.len());
        let mut params = Vec::new();
        for (i, spec) in specs.iter().enumerate() {
            let mut param_index = None;
            let out = match *spec {
                LayerSpec::Conv2D { filters, padding, activation } => {
                    let [h, w, c] = shape[..] else {
                        return Err(Error::Shape(format!("layer {i}: conv2d needs a spatial input, got {shape:?}")));
                    };
                    if filters == 0 || activation == Activation::Softmax {
                        return Err(Error::Config(format!("layer {i}: unsupported conv2d configuration")));
                    }
                    let (ho, wo) = conv_output_dims(h, w, padding)?;
                    param_index = Some(params.len());
                    params.push(Tensor::zeros(vec![KERNEL, KERNEL, c, filters]));
                    params.push(Tensor::zeros(vec![filters]));
                    vec![ho, wo, filters]
                }
                LayerSpec::MaxPool2D => {
                    let [h, w, c] = shape[..] else {
                        return Err(Error::Shape(format!("layer {i}: pooling needs a spatial input, got {shape:?}")));
                    };
                    let (ho, wo) = pool_output_dims(h, w)?;
                    vec![ho, wo, c]
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(Error::Config(format!("layer {i}: dropout rate {rate} not in [0, 1)")));
                    }
                    shape.clone()
                }
                LayerSpec::Flatten => vec![shape.iter().product()],
                LayerSpec::Dense { units, activation } => {
                    let [n] = shape[..] else {
                        return Err(Error::Shape(format!("layer {i}: dense needs a flat input, got {shape:?}")));
                    };
                    if units == 0 {
                        return Err(Error::Config(format!("layer {i}: dense layer with zero units")));
                    }
                    if activation == Activation::Softmax && i + 1 != specs.len() {
                        return Err(Error::Config(format!("layer {i}: softmax is only supported on the last layer")));
                    }
                    param_index = Some(params.len());
                    params.push(Tensor::zeros(vec![n, units]));
                    params.push(Tensor::zeros(vec![units]));
                    vec![units]
                }
            };
            layers.push(Layer {
                spec: *spec,
                input_shape: shape,
                output_shape: out.clone(),
                param_index,
            });
            shape = out;
        }
        Ok(Self {
            input_shape,
            layers,
            params,
            version: 0,
            seed: 0,
            pipeline: None,
        })
    }

    /// Seeded Glorot-uniform weights (fan in/out include the 3x3 receptive
    /// field for convolutions), zero biases.
    pub fn initialize(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &self.layers {
            let Some(pi) = layer.param_index else { continue };
            let shape = self.params[pi].shape().to_vec();
            let (fan_in, fan_out) = match shape[..] {
                [kh, kw, cin, cout] => (kh * kw * cin, kh * kw * cout),
                [n, units] => (n, units),
                _ => unreachable!("weight tensors are rank 2 or 4"),
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in self.params[pi].data_mut() {
                *v = rng.gen_range(-limit..limit);
            }
            self.params[pi + 1].data_mut().fill(0.0);
        }
        self.seed = seed;
        self.version += 1;
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().map_or(self.input_shape.iter().product(), |l| l.output_shape.iter().product())
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    /// Mutable parameter access; invalidates outstanding traces.
    pub fn params_mut(&mut self) -> &mut [Tensor] {
        self.version += 1;
        &mut self.params
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            tensors: self.params.iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn layer_summaries(&self) -> Vec<LayerSummary> {
        let mut seen = std::collections::HashMap::new();
        self.layers
            .iter()
            .map(|l| {
                let kind = layer_kind(&l.spec);
                let n = seen.entry(kind).or_insert(0usize);
                let name = if *n == 0 { kind.to_string() } else { format!("{kind}_{n}") };
                *n += 1;
                let params = l
                    .param_index
                    .map_or(0, |pi| self.params[pi].len() + self.params[pi + 1].len());
                LayerSummary {
                    name,
                    kind,
                    output_shape: l.output_shape.clone(),
                    params,
                }
            })
            .collect()
    }

    pub fn total_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Layer table ending with the total parameter count.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<34}{:<22}{:>10}", "Layer (type)", "Output Shape", "Param #");
        for l in self.layer_summaries() {
            let shape = l.output_shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ");
            let _ = writeln!(s, "{:<34}{:<22}{:>10}", format!("{} ({})", l.name, l.kind), format!("(None, {shape})"), l.params);
        }
        let _ = writeln!(s, "Total params: {}", self.total_params());
        s
    }

    /// Forward pass for one sample. With `dropout_rng` the network runs in
    /// training mode (dropout active), otherwise in inference mode.
    pub fn forward(&self, input: &[f64], mut dropout_rng: Option<&mut ChaCha8Rng>) -> Result<Trace> {
        let expected: usize = self.input_shape.iter().product();
        if input.len() != expected {
            return Err(Error::Shape(format!("input has {} values, model expects {expected}", input.len())));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut aux = Vec::with_capacity(self.layers.len());
        acts.push(input.to_vec());
        for layer in &self.layers {
            let x = acts.last().expect("input pushed");
            let mut out = Vec::new();
            let mut a = Aux::None;
            match layer.spec {
                LayerSpec::Conv2D { padding, activation, .. } => {
                    let [h, w, c] = layer.input_shape[..] else { unreachable!() };
                    let pi = layer.param_index.expect("conv has params");
                    conv_forward_raw(x, h, w, c, self.params[pi].data(), self.params[pi + 1].data(), padding, &mut out);
                    if activation == Activation::Relu {
                        relu_in_place(&mut out);
                    }
                }
                LayerSpec::MaxPool2D => {
                    let [h, w, c] = layer.input_shape[..] else { unreachable!() };
                    let mut idx = Vec::new();
                    maxpool_forward_raw(x, h, w, c, &mut out, &mut idx);
                    a = Aux::Argmax(idx);
                }
                LayerSpec::Dropout { rate } => match dropout_rng.as_deref_mut() {
                    Some(rng) if rate > 0.0 => {
                        let mask = dropout_mask(x.len(), rate, rng);
                        out = x.iter().zip(&mask).map(|(v, m)| v * m).collect();
                        a = Aux::Mask(mask);
                    }
                    _ => out = x.clone(),
                },
                LayerSpec::Flatten => out = x.clone(),
                LayerSpec::Dense { activation, .. } => {
                    let pi = layer.param_index.expect("dense has params");
                    dense_forward_raw(x, self.params[pi].data(), self.params[pi + 1].data(), &mut out);
                    match activation {
                        Activation::Relu => relu_in_place(&mut out),
                        Activation::Softmax => softmax_in_place(&mut out),
                        Activation::None => {}
                    }
                }
            }
            debug_assert!(out.iter().all(|v| v.is_finite()), "non-finite activation in {:?}", layer.spec);
            acts.push(out);
            aux.push(a);
        }
        Ok(Trace {
            acts,
            aux,
            version: self.version,
        })
    }

    /// Inference-mode output (class probabilities for the softmax head).
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward(input, None)?;
        Ok(trace.acts.pop().expect("trace holds the output"))
    }

    /// Accumulates parameter gradients of one sample into `grads`.
    ///
    /// `grad_out` is the loss gradient with respect to the final layer's
    /// pre-activation when that layer ends in softmax (for cross-entropy this
    /// is `probs - onehot`), and with respect to the output otherwise.
    pub fn backward(&self, trace: &Trace, grad_out: &[f64], grads: &mut Gradients) -> Result<()> {
        if trace.version != self.version || trace.acts.len() != self.layers.len() + 1 {
            return Err(Error::State("forward cache is stale; parameters changed since the forward pass".into()));
        }
        if grad_out.len() != self.output_len() {
            return Err(Error::Shape(format!(
                "output gradient has {} values, expected {}",
                grad_out.len(),
                self.output_len()
            )));
        }
        let mut g = grad_out.to_vec();
        let last = self.layers.len().saturating_sub(1);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let x = &trace.acts[l];
            let y = &trace.acts[l + 1];
            let need_dx = l > 0;
            match layer.spec {
                LayerSpec::Conv2D { padding, activation, .. } => {
                    if activation == Activation::Relu {
                        relu_mask(&mut g, y);
                    }
                    let [h, w, c] = layer.input_shape[..] else { unreachable!() };
                    let pi = layer.param_index.expect("conv has params");
                    let cout = self.params[pi + 1].len();
                    let mut dx = if need_dx { vec![0.0; x.len()] } else { Vec::new() };
                    let (dw, rest) = grads.tensors.split_at_mut(pi + 1);
                    conv_backward_raw(
                        x,
                        h,
                        w,
                        c,
                        self.params[pi].data(),
                        cout,
                        padding,
                        &g,
                        &mut dw[pi],
                        &mut rest[0],
                        need_dx.then_some(dx.as_mut_slice()),
                    );
                    g = dx;
                }
                LayerSpec::MaxPool2D => {
                    let Aux::Argmax(idx) = &trace.aux[l] else { unreachable!() };
                    let mut dx = vec![0.0; x.len()];
                    for (&i, &gv) in idx.iter().zip(&g) {
                        dx[i as usize] += gv;
                    }
                    g = dx;
                }
                LayerSpec::Dropout { .. } => {
                    if let Aux::Mask(mask) = &trace.aux[l] {
                        for (gv, m) in g.iter_mut().zip(mask) {
                            *gv *= m;
                        }
                    }
                }
                LayerSpec::Flatten => {}
                LayerSpec::Dense { activation, .. } => {
                    match activation {
                        Activation::Relu => relu_mask(&mut g, y),
                        Activation::Softmax if l != last => {
                            return Err(Error::Config("softmax is only supported on the last layer".into()))
                        }
                        _ => {}
                    }
                    let pi = layer.param_index.expect("dense has params");
                    let mut dx = if need_dx { vec![0.0; x.len()] } else { Vec::new() };
                    let (dw, rest) = grads.tensors.split_at_mut(pi + 1);
                    dense_backward_raw(
                        x,
                        self.params[pi].data(),
                        &g,
                        &mut dw[pi],
                        &mut rest[0],
                        need_dx.then_some(dx.as_mut_slice()),
                    );
                    g = dx;
                }
            }
        }
        Ok(())
    }
}

fn relu_mask(g: &mut [f64], y: &[f64]) {
    for (gv, &yv) in g.iter_mut().zip(y) {
        if yv <= 0.0 {
            *gv = 0.0;
        }
    }
}

/// Two-block CNN with the given widths, Glorot-initialised from `seed`.
pub fn build_cnn(n_mfcc: usize, n_frames: usize, arch: &CnnArch, seed: u64) -> Result<CnnModel> {
    let mut model = CnnModel::from_specs(vec![n_mfcc, n_frames, 1], &arch.layers())?;
    model.initialize(seed);
    Ok(model)
}

/// The reference architecture: 32/32 conv, pool, 64/64 conv, pool, 512 dense,
/// 8-way softmax.
pub fn build_paper_cnn(n_mfcc: usize, n_frames: usize) -> Result<CnnModel> {
    build_cnn(n_mfcc, n_frames, &CnnArch::default(), 0)
}

/// One-hot helper for cross-entropy gradients.
pub fn softmax_ce_grad(probs: &[f64], label: usize) -> Result<Vec<f64>> {
    if label >= probs.len() {
        return Err(Error::Data(format!("label {label} out of range for {} classes", probs.len())));
    }
    let mut g = probs.to_vec();
    g[label] -= 1.0;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shapes_and_counts() {
        let m = build_paper_cnn(13, 26).unwrap();
        let s = m.layer_summaries();
        let shapes: Vec<Vec<usize>> = s.iter().map(|l| l.output_shape.clone()).collect();
        assert_eq!(shapes[0], vec![13, 26, 32]);
        assert_eq!(shapes[1], vec![11, 24, 32]);
        assert_eq!(shapes[2], vec![5, 12, 32]);
        assert_eq!(shapes[4], vec![5, 12, 64]);
        assert_eq!(shapes[5], vec![3, 10, 64]);
        assert_eq!(shapes[6], vec![1, 5, 64]);
        assert_eq!(shapes[8], vec![320]);
        assert_eq!(shapes[9], vec![512]);
        assert_eq!(shapes[11], vec![8]);
        let counts: Vec<usize> = s.iter().filter(|l| l.params > 0).map(|l| l.params).collect();
        assert_eq!(counts, vec![320, 9248, 18496, 36928, 164352, 4104]);
        assert_eq!(m.total_params(), 233_448);
        assert!(m.summary_table().trim_end().ends_with("Total params: 233448"));
        assert_eq!(s[3].name, "dropout");
        assert_eq!(s[10].name, "dropout_2");
    }

    #[test]
    fn input_too_small() {
        assert!(matches!(build_paper_cnn(4, 26), Err(Error::Shape(_))));
    }

    #[test]
    fn stale_trace_rejected() {
        let mut m = build_cnn(13, 26, &CnnArch::reduced(), 1).unwrap();
        let x = vec![0.1; 13 * 26];
        let trace = m.forward(&x, None).unwrap();
        let mut g = m.zero_gradients();
        m.backward(&trace, &[0.0; 8], &mut g).unwrap();
        m.params_mut()[0].data_mut()[0] += 1.0;
        assert!(matches!(m.backward(&trace, &[0.0; 8], &mut g), Err(Error::State(_))));
    }

    #[test]
    fn tree_sum_order() {
        let g = |v: f64| Gradients { tensors: vec![vec![v]] };
        let s = Gradients::tree_sum(vec![g(1.0), g(2.0), g(3.0), g(4.0), g(5.0)]).unwrap();
        assert_eq!(s.tensors[0][0], 15.0);
        assert!(Gradients::tree_sum(Vec::new()).is_none());
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = build_paper_cnn(13, 26).unwrap();
        let x: Vec<f64> = (0..13 * 26).map(|i| ((i * 37) % 11) as f64 / 5.0 - 1.0).collect();
        let p = m.predict(&x).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
