//! Miniature fully connected classifier with analytic gradients.
//!
//! The model is a stack of dense layers with `tanh` hidden activations and a
//! sigmoid (binary) or softmax (multiclass) head. One hidden activation is
//! designated as the *feature map*: a perturbed forward pass multiplies it
//! elementwise by `1 + t`, where the entries of `t` are uniform on
//! `[-gamma, +gamma]`. That is how prediction robustness is probed elsewhere
//! in this crate; plain training forwards never carry a disturbance.
//!
//! Everything is `f64`. Gradients are exact backpropagation and are checked
//! against the central finite-difference oracle in the test and acceptance
//! suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Probability floor applied before any logarithm.
pub const PROB_EPS: f64 = 1e-12;

/// Output head of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Scalar sigmoid output; binary labels `{0, 1}`.
    Sigmoid,
    /// Softmax over `C >= 2` classes.
    Softmax,
}

#[derive(Debug, Clone)]
struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major, shape `(out_dim, in_dim)`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl DenseLayer {
    fn affine(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.in_dim);
        let mut out = self.biases.clone();
        for (o, z) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            for (w, x) in row.iter().zip(input) {
                *z += w * x;
            }
        }
        out
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

/// A small dense classifier: `input -> tanh hidden layers -> head`.
#[derive(Debug, Clone)]
pub struct MicroModel {
    layer_dims: Vec<usize>,
    layers: Vec<DenseLayer>,
    perturbation_layer: usize,
    head: Head,
}

impl MicroModel {
    /// Builds a model with seeded fan-in-scaled uniform weights and zero
    /// biases. `layer_dims` lists every width from the input to the head;
    /// `perturbation_layer` picks which hidden activation acts as the feature
    /// map (a model with no hidden layer accepts only index 0 and uses its
    /// input row as the disturbance site, the only vector feeding the head).
    pub fn init(layer_dims: &[usize], head: Head, perturbation_layer: usize, seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least input and output dims, got {:?}",
                layer_dims
            )));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidSpec("layer dims must be positive".into()));
        }
        let out_dim = *layer_dims.last().unwrap();
        match head {
            Head::Sigmoid if out_dim != 1 => {
                return Err(Error::InvalidSpec(format!(
                    "sigmoid head requires a single output, got {out_dim}"
                )))
            }
            Head::Softmax if out_dim < 2 => {
                return Err(Error::InvalidSpec(
                    "softmax head requires at least 2 outputs".into(),
                ))
            }
            _ => {}
        }
        let hidden_count = layer_dims.len() - 2;
        if perturbation_layer >= hidden_count.max(1) {
            return Err(Error::InvalidSpec(format!(
                "perturbation layer {perturbation_layer} does not index a hidden activation \
                 ({hidden_count} hidden layers)"
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (in_dim, out_dim) = (pair[0], pair[1]);
            let limit = 1.0 / (in_dim as f64).sqrt();
            let weights = (0..in_dim * out_dim)
                .map(|_| rng.random_range(-limit..=limit))
                .collect();
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                weights,
                biases: vec![0.0; out_dim],
            });
        }

        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
            perturbation_layer,
            head,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn perturbation_layer(&self) -> usize {
        self.perturbation_layer
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Number of classes the model distinguishes.
    pub fn num_classes(&self) -> usize {
        match self.head {
            Head::Sigmoid => 2,
            Head::Softmax => *self.layer_dims.last().unwrap(),
        }
    }

    /// Width of the designated feature map.
    pub fn feature_map_dim(&self) -> usize {
        if self.layer_dims.len() > 2 {
            self.layer_dims[self.perturbation_layer + 1]
        } else {
            self.layer_dims[0]
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// All parameters flattened layer by layer (weights row-major, then biases).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} params, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let w = layer.weights.len();
            layer.weights.copy_from_slice(&params[offset..offset + w]);
            offset += w;
            let b = layer.biases.len();
            layer.biases.copy_from_slice(&params[offset..offset + b]);
            offset += b;
        }
        Ok(())
    }

    /// Reads one parameter by flat index (see [`MicroModel::params`] layout).
    pub fn param(&self, index: usize) -> f64 {
        let (layer, offset) = self.locate(index);
        let l = &self.layers[layer];
        if offset < l.weights.len() {
            l.weights[offset]
        } else {
            l.biases[offset - l.weights.len()]
        }
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let (layer, offset) = self.locate(index);
        let l = &mut self.layers[layer];
        if offset < l.weights.len() {
            l.weights[offset] = value;
        } else {
            l.biases[offset - l.weights.len()] = value;
        }
    }

    fn locate(&self, index: usize) -> (usize, usize) {
        let mut rest = index;
        for (k, layer) in self.layers.iter().enumerate() {
            if rest < layer.param_count() {
                return (k, rest);
            }
            rest -= layer.param_count();
        }
        panic!("parameter index {index} out of range {}", self.param_count());
    }

    /// Plain evaluation forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.forward_disturbed(x, None)
    }

    /// Forward pass with an optional multiplicative disturbance applied at
    /// the feature map: `f <- f * (1 + t)` before the subsequent layers. The
    /// trace records the values actually propagated.
    pub fn forward_disturbed(&self, x: &[f64], disturbance: Option<&[f64]>) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} entries, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        if let Some(t) = disturbance {
            if t.len() != self.feature_map_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "disturbance has {} entries, feature map has {}",
                    t.len(),
                    self.feature_map_dim()
                )));
            }
        }

        let head_only = self.layers.len() == 1;
        let mut activation: Vec<f64> = match (head_only, disturbance) {
            (true, Some(t)) => apply_disturbance(x, t),
            _ => x.to_vec(),
        };
        let input = activation.clone();
        let mut feature_map = if head_only { input.clone() } else { Vec::new() };

        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut hidden = Vec::with_capacity(self.layers.len().saturating_sub(1));
        let mut output = Vec::new();

        for (k, layer) in self.layers.iter().enumerate() {
            let z = layer.affine(&activation);
            pre_activations.push(z.clone());
            if k + 1 < self.layers.len() {
                let mut a: Vec<f64> = z.iter().map(|v| v.tanh()).collect();
                if k == self.perturbation_layer {
                    if let Some(t) = disturbance {
                        a = apply_disturbance(&a, t);
                    }
                    feature_map = a.clone();
                }
                hidden.push(a.clone());
                activation = a;
            } else {
                output = match self.head {
                    Head::Sigmoid => vec![sigmoid(z[0])],
                    Head::Softmax => softmax(&z),
                };
            }
        }

        Ok(ForwardTrace {
            head: self.head,
            input,
            pre_activations,
            hidden,
            output,
            feature_map,
            disturbed: disturbance.is_some(),
        })
    }

    /// Backpropagates the cross-entropy loss for `label` through a trace
    /// produced by [`MicroModel::forward`] on this model. Disturbed traces
    /// are rejected: training never runs under a disturbance.
    pub fn backward(&self, trace: &ForwardTrace, label: usize) -> Result<Gradients> {
        if trace.disturbed {
            return Err(Error::StaleTrace(
                "gradients of a disturbed forward are not supported".into(),
            ));
        }
        self.check_trace(trace)?;

        let mut values = vec![0.0; self.param_count()];
        let mut delta = output_delta(trace, label)?;

        let mut offset = self.param_count();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let input: &[f64] = if k == 0 { &trace.input } else { &trace.hidden[k - 1] };
            offset -= layer.param_count();
            for (o, &dz) in delta.iter().enumerate() {
                let row = offset + o * layer.in_dim;
                for (i, &a) in input.iter().enumerate() {
                    values[row + i] = dz * a;
                }
                values[offset + layer.weights.len() + o] = dz;
            }
            if k > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for (o, &dz) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * dz;
                    }
                }
                // tanh'(z) expressed through the stored activation a = tanh(z).
                for (p, &a) in prev.iter_mut().zip(input) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }

        Ok(Gradients { values })
    }

    /// One SGD step: every parameter decremented by `eta * gradient`.
    pub fn sgd_step(&mut self, gradients: &Gradients, eta: f64) -> Result<()> {
        if gradients.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "gradient has {} entries, model has {} params",
                gradients.len(),
                self.param_count()
            )));
        }
        if !gradients.values.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w -= eta * gradients.values[offset];
                offset += 1;
            }
        }
        Ok(())
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<()> {
        let hidden_ok = trace.hidden.len() == self.layers.len() - 1
            && trace
                .hidden
                .iter()
                .zip(&self.layers)
                .all(|(a, l)| a.len() == l.out_dim);
        let ok = trace.head == self.head
            && trace.input.len() == self.input_dim()
            && trace.output.len() == *self.layer_dims.last().unwrap()
            && hidden_ok;
        if ok {
            Ok(())
        } else {
            Err(Error::StaleTrace("trace shapes do not match the model".into()))
        }
    }
}

/// All intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    head: Head,
    input: Vec<f64>,
    pre_activations: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
    output: Vec<f64>,
    feature_map: Vec<f64>,
    disturbed: bool,
}

impl ForwardTrace {
    /// Raw head output: `[p]` for a sigmoid head, the full simplex for softmax.
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Per-class probabilities; a sigmoid head expands to `[1 - p, p]`.
    pub fn class_probs(&self) -> Vec<f64> {
        match self.head {
            Head::Sigmoid => vec![1.0 - self.output[0], self.output[0]],
            Head::Softmax => self.output.clone(),
        }
    }

    /// Argmax class, ties broken by the smallest class index.
    pub fn predicted_class(&self) -> usize {
        let probs = self.class_probs();
        let mut best = 0;
        for (c, &p) in probs.iter().enumerate().skip(1) {
            if p > probs[best] {
                best = c;
            }
        }
        best
    }

    /// The feature-map activation as propagated (perturbed when a
    /// disturbance was supplied).
    pub fn feature_map(&self) -> &[f64] {
        &self.feature_map
    }

    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre_activations
    }

    pub fn disturbed(&self) -> bool {
        self.disturbed
    }
}

/// Flat parameter gradients, laid out exactly like [`MicroModel::params`].
#[derive(Debug, Clone)]
pub struct Gradients {
    values: Vec<f64>,
}

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Gradients) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "gradient lengths {} vs {}",
                self.len(),
                other.len()
            )));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Cross-entropy of a head output against an integer label. A length-1
/// output is treated as the sigmoid probability of class 1; longer outputs
/// as a simplex indexed by class. Probabilities are clipped to
/// `[PROB_EPS, 1 - PROB_EPS]` before the logarithm.
pub fn ce_loss(output: &[f64], label: usize) -> Result<f64> {
    match output.len() {
        0 => Err(Error::ShapeMismatch("empty prediction".into())),
        1 => {
            if label > 1 {
                return Err(Error::LabelOutOfRange { label, classes: 2 });
            }
            let p = output[0].clamp(PROB_EPS, 1.0 - PROB_EPS);
            let y = label as f64;
            Ok(-(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
        }
        classes => {
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
            Ok(-output[label].clamp(PROB_EPS, 1.0 - PROB_EPS).ln())
        }
    }
}

/// The head-layer error term `y_hat - y` (softmax: probabilities minus the
/// one-hot label; sigmoid: `[p - y]`).
pub fn output_delta(trace: &ForwardTrace, label: usize) -> Result<Vec<f64>> {
    match trace.head {
        Head::Sigmoid => {
            if label > 1 {
                return Err(Error::LabelOutOfRange { label, classes: 2 });
            }
            Ok(vec![trace.output[0] - label as f64])
        }
        Head::Softmax => {
            let classes = trace.output.len();
            if label >= classes {
                return Err(Error::LabelOutOfRange { label, classes });
            }
            let mut d = trace.output.clone();
            d[label] -= 1.0;
            Ok(d)
        }
    }
}

/// Central finite-difference gradient of the cross-entropy loss, the
/// independent oracle for [`MicroModel::backward`]. Each parameter is moved
/// by `±h` and the loss re-evaluated through the ordinary forward pass.
pub fn finite_diff_gradient(model: &MicroModel, x: &[f64], label: usize, h: f64) -> Result<Gradients> {
    if !(h > 0.0) {
        return Err(Error::InvalidSpec(format!("step size must be positive, got {h}")));
    }
    let mut probe = model.clone();
    let n = probe.param_count();
    let mut values = vec![0.0; n];
    for i in 0..n {
        let orig = probe.param(i);
        probe.set_param(i, orig + h);
        let plus = ce_loss(probe.forward(x)?.output(), label)?;
        probe.set_param(i, orig - h);
        let minus = ce_loss(probe.forward(x)?.output(), label)?;
        probe.set_param(i, orig);
        values[i] = (plus - minus) / (2.0 * h);
    }
    Ok(Gradients { values })
}

/// How many disturbance draws to take and how wide the uniform noise is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    /// Number of disturbance draws `G`.
    pub count: usize,
    /// Half-width of the uniform noise.
    pub gamma: f64,
    /// Seed; together with the draw index it fully determines each noise vector.
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidSpec("need at least one disturbance draw".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// The noise vector `t` for draw `g`: i.i.d. uniform on `[-gamma, +gamma]`,
/// a pure function of `(spec.seed, g, len)`.
pub fn disturbance(spec: &PerturbationSpec, draw: usize, len: usize) -> Vec<f64> {
    if spec.gamma == 0.0 {
        return vec![0.0; len];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(draw as u64);
    (0..len)
        .map(|_| rng.random_range(-spec.gamma..=spec.gamma))
        .collect()
}

/// Elementwise `f * (1 + t)`.
pub fn apply_disturbance(f: &[f64], t: &[f64]) -> Vec<f64> {
    assert_eq!(f.len(), t.len(), "disturbance length mismatch");
    f.iter().zip(t).map(|(v, n)| v * (1.0 + n)).collect()
}

/// Draw `g` of the perturbed feature map `f * (1 + t^g)`.
pub fn perturb_features(f: &[f64], spec: &PerturbationSpec, draw: usize) -> Vec<f64> {
    apply_disturbance(f, &disturbance(spec, draw, f.len()))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
