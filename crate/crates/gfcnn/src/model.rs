//! Layered models on graph signals: graph-filter layers with bias and ReLU,
//! fully-connected layers, and a linear readout over the flattened last
//! hidden signal.
//!
//! Three layer kinds compose: `hybrid` (a node-grouped graph filter with a
//! scalar bias), `bank` (a bank of node-invariant graph filters mapping
//! feature channels to feature channels, per-feature bias), and `dense`
//! (fully connected, per-unit bias). No pooling exists anywhere — signals
//! keep their full node dimension until the readout flattens them.
//!
//! Gradients are hand-derived, not autodifferentiated: `backward` walks the
//! layers in reverse, gating through dropout masks and ReLU, and produces
//! one gradient tensor per parameter tensor in a fixed canonical order
//! (per layer: weights then bias; finally readout weights, readout bias).

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::{build_membership, for_each_shift, MembershipMatrix};
use crate::graph::{self, build_unit_radius_shift, Graph, ShiftKind, ShiftOperator};
use crate::seeds::{self, Purpose};

/// Ceiling on total trainable scalars, to fail fast on absurd architectures.
const MAX_PARAMETERS: usize = 100_000_000;

/// Declaration of one hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// Apply ReLU after the affine map; `false` leaves the layer linear.
    pub relu: bool,
}

impl LayerSpec {
    /// The common case: the given kind followed by ReLU.
    pub fn relu(kind: LayerKind) -> LayerSpec {
        LayerSpec { kind, relu: true }
    }
}

/// What one hidden layer computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// Node-grouped graph filter of the given order with `num_groups` shared
    /// tap vectors, plus one scalar bias. Input and output are
    /// single-feature graph signals.
    HybridGf { order: usize, num_groups: usize },
    /// Bank of node-invariant graph filters of the given order mapping the
    /// incoming feature channels to `features_out` channels, plus a
    /// per-channel bias.
    GfBank { order: usize, features_out: usize },
    /// Fully-connected map from the flattened input to `width` units, plus a
    /// per-unit bias.
    FullyConnected { width: usize },
}

/// Layer dimensions after shapes have been resolved against the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LayerDims {
    Hybrid {
        order: usize,
        groups: usize,
    },
    Bank {
        order: usize,
        features_in: usize,
        features_out: usize,
    },
    Dense {
        d_in: usize,
        d_out: usize,
    },
}

impl LayerDims {
    /// (weight count, bias count, fan-in used for initialization).
    fn tensor_shape(self) -> (usize, usize, usize) {
        match self {
            LayerDims::Hybrid { order, groups } => (groups * order, 1, order),
            LayerDims::Bank {
                order,
                features_in,
                features_out,
            } => (order * features_in * features_out, features_out, order),
            LayerDims::Dense { d_in, d_out } => (d_in * d_out, d_out, d_in),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerState {
    relu: bool,
    dims: LayerDims,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Resolve layer shapes left to right. Signals start as (N nodes, 1 feature);
/// graph-filter layers require a graph-shaped signal (and the hybrid kind a
/// single feature); a fully-connected layer flattens and leaves the graph
/// behind. Returns the resolved dims and the flattened width feeding the
/// readout.
fn resolve_dims(specs: &[LayerSpec], n: usize) -> Result<(Vec<LayerDims>, usize)> {
    let mut nodes = n;
    let mut channels = 1usize;
    let mut graph_shaped = true;
    let mut shared_groups: Option<usize> = None;
    let mut dims = Vec::with_capacity(specs.len());
    for (idx, spec) in specs.iter().enumerate() {
        match spec.kind {
            LayerKind::HybridGf { order, num_groups } => {
                if order == 0 || num_groups == 0 {
                    return Err(Error::Config(format!(
                        "layer {idx}: order and group count must be positive"
                    )));
                }
                if !graph_shaped {
                    return Err(Error::Config(format!(
                        "layer {idx}: a graph-filter layer cannot follow a fully-connected layer"
                    )));
                }
                if channels != 1 {
                    return Err(Error::Config(format!(
                        "layer {idx}: a node-grouped filter needs a single-feature signal, got {channels} features"
                    )));
                }
                if num_groups > nodes {
                    return Err(Error::Config(format!(
                        "layer {idx}: {num_groups} groups exceed {nodes} nodes"
                    )));
                }
                match shared_groups {
                    Some(b) if b != num_groups => {
                        return Err(Error::Config(format!(
                            "layer {idx}: all node-grouped layers share one grouping; \
                             conflicting group counts {b} and {num_groups}"
                        )));
                    }
                    _ => shared_groups = Some(num_groups),
                }
                dims.push(LayerDims::Hybrid {
                    order,
                    groups: num_groups,
                });
            }
            LayerKind::GfBank {
                order,
                features_out,
            } => {
                if order == 0 || features_out == 0 {
                    return Err(Error::Config(format!(
                        "layer {idx}: order and feature count must be positive"
                    )));
                }
                if !graph_shaped {
                    return Err(Error::Config(format!(
                        "layer {idx}: a graph-filter layer cannot follow a fully-connected layer"
                    )));
                }
                dims.push(LayerDims::Bank {
                    order,
                    features_in: channels,
                    features_out,
                });
                channels = features_out;
            }
            LayerKind::FullyConnected { width } => {
                if width == 0 {
                    return Err(Error::Config(format!(
                        "layer {idx}: width must be positive"
                    )));
                }
                let d_in = nodes.checked_mul(channels).ok_or_else(|| {
                    Error::Config(format!("layer {idx}: input width overflows"))
                })?;
                dims.push(LayerDims::Dense { d_in, d_out: width });
                nodes = width;
                channels = 1;
                graph_shaped = false;
            }
        }
    }
    let d_flat = nodes
        .checked_mul(channels)
        .ok_or_else(|| Error::Config("flattened width overflows".into()))?;
    Ok((dims, d_flat))
}

/// Closed-form parameter count for resolved dims plus the readout.
fn count_from_dims(dims: &[LayerDims], d_flat: usize, num_classes: usize) -> Result<usize> {
    let mut total = 0usize;
    let mut add = |w: usize, b: usize| -> Result<()> {
        total = total
            .checked_add(w)
            .and_then(|t| t.checked_add(b))
            .ok_or_else(|| Error::Config("parameter count overflows".into()))?;
        Ok(())
    };
    for &d in dims {
        let (w, b) = match d {
            LayerDims::Hybrid { order, groups } => {
                let w = groups
                    .checked_mul(order)
                    .ok_or_else(|| Error::Config("parameter count overflows".into()))?;
                (w, 1)
            }
            LayerDims::Bank {
                order,
                features_in,
                features_out,
            } => {
                let w = order
                    .checked_mul(features_in)
                    .and_then(|x| x.checked_mul(features_out))
                    .ok_or_else(|| Error::Config("parameter count overflows".into()))?;
                (w, features_out)
            }
            LayerDims::Dense { d_in, d_out } => {
                let w = d_in
                    .checked_mul(d_out)
                    .ok_or_else(|| Error::Config("parameter count overflows".into()))?;
                (w, d_out)
            }
        };
        add(w, b)?;
    }
    let rw = d_flat
        .checked_mul(num_classes)
        .ok_or_else(|| Error::Config("parameter count overflows".into()))?;
    add(rw, num_classes)?;
    if total > MAX_PARAMETERS {
        return Err(Error::Config(format!(
            "architecture has {total} parameters, exceeding the supported maximum {MAX_PARAMETERS}"
        )));
    }
    Ok(total)
}

/// A trained or trainable model: a graph, its shift operator (rescaled to
/// unit spectral radius, see [`build_unit_radius_shift`]), hidden layers, and
/// the linear readout producing one logit per class.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    graph: Graph,
    shift: ShiftOperator,
    num_classes: usize,
    init_seed: u64,
    membership: Option<MembershipMatrix>,
    layers: Vec<LayerState>,
    d_flat: usize,
    readout_w: Vec<f64>,
    readout_b: Vec<f64>,
}

/// Cache of one train-mode forward pass, consumed by [`Model::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input consumed by each layer.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each layer.
    pre: Vec<Vec<f64>>,
    /// Dropout scale per element (0 or 1/(1-p)), parallel to the layers;
    /// `None` for graph-filter layers and whenever dropout is off.
    masks: Vec<Option<Vec<f64>>>,
    /// Flattened input of the readout.
    readout_input: Vec<f64>,
    logits: Vec<f64>,
}

impl ForwardTrace {
    /// The logits this pass produced.
    pub fn logits(&self) -> &[f64] {
        &self.logits
    }
}

/// Gradients for every trainable tensor of a model, in the model's canonical
/// tensor order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    tensors: Vec<Vec<f64>>,
}

impl GradientSet {
    /// All-zero gradients shaped like the model's parameters.
    pub fn zeros_like(m: &Model) -> GradientSet {
        GradientSet {
            tensors: m.tensor_lens().iter().map(|&l| vec![0.0; l]).collect(),
        }
    }

    /// self += other, elementwise.
    pub fn accumulate(&mut self, other: &GradientSet) {
        assert_eq!(self.tensors.len(), other.tensors.len(), "tensor count mismatch");
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            assert_eq!(a.len(), b.len(), "tensor shape mismatch");
            for (ai, bi) in a.iter_mut().zip(b) {
                *ai += bi;
            }
        }
    }

    /// self *= factor, elementwise.
    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            for v in t {
                *v *= factor;
            }
        }
    }

    /// The gradient tensors in canonical order.
    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }
}

fn draw_uniform(rng: &mut ChaCha8Rng, len: usize, fan_in: usize) -> Vec<f64> {
    // Uniform on [-a, a] with a = sqrt(3/fan_in), giving variance 1/fan_in.
    let a = (3.0 / fan_in as f64).sqrt();
    (0..len).map(|_| a * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

impl Model {
    /// Build a model with freshly initialized parameters.
    ///
    /// Weights and taps are drawn i.i.d. uniform on [-a, a] with
    /// a = sqrt(3/fan_in) — fan-in is the filter order for graph-filter taps
    /// and the input width for dense weights — and all biases start at zero.
    /// The node grouping shared by the hybrid layers is derived from `seed`
    /// as well, so the whole model is a deterministic function of
    /// (graph, kind, specs, num_classes, seed).
    pub fn init(
        graph: Graph,
        kind: ShiftKind,
        specs: &[LayerSpec],
        num_classes: usize,
        seed: u64,
    ) -> Result<Model> {
        if num_classes == 0 {
            return Err(Error::Config("model needs at least one class".into()));
        }
        let n = graph.num_nodes();
        let (dims, d_flat) = resolve_dims(specs, n)?;
        count_from_dims(&dims, d_flat, num_classes)?;
        let shared_groups = dims.iter().find_map(|d| match d {
            LayerDims::Hybrid { groups, .. } => Some(*groups),
            _ => None,
        });
        let membership = match shared_groups {
            Some(b) => Some(build_membership(
                &graph,
                b,
                seeds::child(seed, 0, 0, Purpose::Membership),
            )?),
            None => None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(dims.len());
        for (&d, spec) in dims.iter().zip(specs) {
            let (wlen, blen, fan_in) = d.tensor_shape();
            layers.push(LayerState {
                relu: spec.relu,
                dims: d,
                weights: draw_uniform(&mut rng, wlen, fan_in),
                bias: vec![0.0; blen],
            });
        }
        let readout_w = draw_uniform(&mut rng, d_flat * num_classes, d_flat);
        let readout_b = vec![0.0; num_classes];
        let shift = build_unit_radius_shift(&graph, kind);
        Ok(Model {
            graph,
            shift,
            num_classes,
            init_seed: seed,
            membership,
            layers,
            d_flat,
            readout_w,
            readout_b,
        })
    }

    /// The graph the model was built on.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// The shift operator used by the graph-filter layers.
    pub fn shift(&self) -> &ShiftOperator {
        &self.shift
    }

    /// Number of output classes.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// The node grouping shared by the hybrid layers, if any exist.
    pub fn membership(&self) -> Option<&MembershipMatrix> {
        self.membership.as_ref()
    }

    /// Flattened width of the signal entering the readout.
    pub fn flattened_width(&self) -> usize {
        self.d_flat
    }

    /// Total number of trainable scalars: per hybrid layer B·T + 1, per bank
    /// layer T·F_in·F_out + F_out, per dense layer d_in·d_out + d_out, plus
    /// the readout's d_flat·C + C.
    pub fn count_parameters(&self) -> usize {
        self.tensor_lens().iter().sum()
    }

    /// Lengths of the parameter tensors in canonical order.
    pub fn tensor_lens(&self) -> Vec<usize> {
        let mut lens = Vec::with_capacity(2 * self.layers.len() + 2);
        for layer in &self.layers {
            lens.push(layer.weights.len());
            lens.push(layer.bias.len());
        }
        lens.push(self.readout_w.len());
        lens.push(self.readout_b.len());
        lens
    }

    /// Mutable views of the parameter tensors in canonical order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * self.layers.len() + 2);
        for layer in &mut self.layers {
            out.push(layer.weights.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out.push(self.readout_w.as_mut_slice());
        out.push(self.readout_b.as_mut_slice());
        out
    }

    /// Read-only views of the parameter tensors in canonical order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(2 * self.layers.len() + 2);
        for layer in &self.layers {
            out.push(layer.weights.as_slice());
            out.push(layer.bias.as_slice());
        }
        out.push(self.readout_w.as_slice());
        out.push(self.readout_b.as_slice());
        out
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.graph.num_nodes() {
            return Err(Error::Dimension(format!(
                "input has {} entries, graph has {} nodes",
                x.len(),
                self.graph.num_nodes()
            )));
        }
        Ok(())
    }

    /// Pre-activation output of layer `idx` on `input`.
    fn layer_preactivation(&self, idx: usize, input: &[f64]) -> Vec<f64> {
        let layer = &self.layers[idx];
        let n = self.graph.num_nodes();
        match layer.dims {
            LayerDims::Hybrid { order, .. } => {
                let assign = self
                    .membership
                    .as_ref()
                    .expect("hybrid layer without membership")
                    .assignment();
                let mut z = vec![layer.bias[0]; n];
                for_each_shift(&self.shift, input, order, |t, shifted| {
                    for i in 0..n {
                        z[i] += layer.weights[assign[i] * order + t] * shifted[i];
                    }
                });
                z
            }
            LayerDims::Bank {
                order,
                features_in,
                features_out,
            } => {
                let mut z = vec![0.0; n * features_out];
                for f in 0..features_in {
                    let channel = &input[f * n..(f + 1) * n];
                    for_each_shift(&self.shift, channel, order, |t, shifted| {
                        for g in 0..features_out {
                            let h = layer.weights[(t * features_in + f) * features_out + g];
                            let zg = &mut z[g * n..(g + 1) * n];
                            for (zi, &si) in zg.iter_mut().zip(shifted) {
                                *zi += h * si;
                            }
                        }
                    });
                }
                for g in 0..features_out {
                    for zi in &mut z[g * n..(g + 1) * n] {
                        *zi += layer.bias[g];
                    }
                }
                z
            }
            LayerDims::Dense { d_in, d_out } => {
                debug_assert_eq!(input.len(), d_in);
                let mut z = Vec::with_capacity(d_out);
                for o in 0..d_out {
                    let row = &layer.weights[o * d_in..(o + 1) * d_in];
                    let dot: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
                    z.push(dot + layer.bias[o]);
                }
                z
            }
        }
    }

    fn readout_logits(&self, flat: &[f64]) -> Vec<f64> {
        debug_assert_eq!(flat.len(), self.d_flat);
        let mut logits = Vec::with_capacity(self.num_classes);
        for k in 0..self.num_classes {
            let row = &self.readout_w[k * self.d_flat..(k + 1) * self.d_flat];
            let dot: f64 = row.iter().zip(flat).map(|(w, x)| w * x).sum();
            logits.push(dot + self.readout_b[k]);
        }
        logits
    }

    /// Deterministic forward pass without dropout; returns the logits.
    pub fn forward_eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        for idx in 0..self.layers.len() {
            let mut z = self.layer_preactivation(idx, &cur);
            if self.layers[idx].relu {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            cur = z;
        }
        Ok(self.readout_logits(&cur))
    }

    /// Forward pass with dropout applied to the post-activation output of
    /// each fully-connected hidden layer (keep probability 1-p, inverted
    /// scaling), plus a trace retained for [`Model::backward`].
    /// `dropout_p = 0` keeps every unit and draws nothing from `rng`.
    ///
    /// Dropout acts on the dense stage only. Dense hidden layers hold the
    /// bulk of the trainable parameters and so carry the overfitting risk
    /// dropout exists to curb; graph-filter layers carry a handful of taps
    /// each, and masking half of a narrow single-feature graph signal
    /// destroys the signal being filtered faster than it regularizes
    /// anything. An architecture with no dense hidden layer therefore
    /// trains identically whether dropout is enabled or not.
    pub fn forward_train(
        &self,
        x: &[f64],
        dropout_p: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Vec<f64>, ForwardTrace)> {
        self.check_input(x)?;
        if !(0.0..1.0).contains(&dropout_p) {
            return Err(Error::Config(format!(
                "dropout probability must be in [0, 1), got {dropout_p}"
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for idx in 0..self.layers.len() {
            let z = self.layer_preactivation(idx, &cur);
            inputs.push(std::mem::replace(&mut cur, Vec::new()));
            let mut a: Vec<f64> = if self.layers[idx].relu {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            let dense = matches!(self.layers[idx].dims, LayerDims::Dense { .. });
            let mask = if dropout_p > 0.0 && dense {
                let scale = 1.0 / (1.0 - dropout_p);
                let m: Vec<f64> = (0..a.len())
                    .map(|_| {
                        if rng.random::<f64>() < dropout_p {
                            0.0
                        } else {
                            scale
                        }
                    })
                    .collect();
                for (ai, mi) in a.iter_mut().zip(&m) {
                    *ai *= mi;
                }
                Some(m)
            } else {
                None
            };
            masks.push(mask);
            cur = a;
        }
        let logits = self.readout_logits(&cur);
        let trace = ForwardTrace {
            inputs,
            pre,
            masks,
            readout_input: cur,
            logits: logits.clone(),
        };
        Ok((logits, trace))
    }

    /// Backpropagate `grad_logits` (dloss/dlogits) through a train-mode
    /// trace, producing one gradient tensor per parameter tensor.
    pub fn backward(&self, trace: &ForwardTrace, grad_logits: &[f64]) -> Result<GradientSet> {
        if grad_logits.len() != self.num_classes {
            return Err(Error::Dimension(format!(
                "gradient has {} entries, model has {} classes",
                grad_logits.len(),
                self.num_classes
            )));
        }
        if trace.inputs.len() != self.layers.len() || trace.readout_input.len() != self.d_flat {
            return Err(Error::Dimension(
                "trace does not match this model's layer structure".into(),
            ));
        }
        let num_layers = self.layers.len();
        let mut tensors: Vec<Vec<f64>> =
            self.tensor_lens().iter().map(|&l| vec![0.0; l]).collect();

        // Readout: dW = g·flatᵀ, db = g, and the gradient flowing down is Wᵀg.
        let flat = &trace.readout_input;
        for (k, &gk) in grad_logits.iter().enumerate() {
            tensors[2 * num_layers + 1][k] = gk;
            let row = &mut tensors[2 * num_layers][k * self.d_flat..(k + 1) * self.d_flat];
            for (w, &fj) in row.iter_mut().zip(flat) {
                *w = gk * fj;
            }
        }
        let mut grad = vec![0.0; self.d_flat];
        for (k, &gk) in grad_logits.iter().enumerate() {
            let row = &self.readout_w[k * self.d_flat..(k + 1) * self.d_flat];
            for (gj, &wj) in grad.iter_mut().zip(row) {
                *gj += wj * gk;
            }
        }

        for idx in (0..num_layers).rev() {
            let layer = &self.layers[idx];
            // Undo dropout and gate through ReLU to reach the pre-activation.
            if let Some(mask) = &trace.masks[idx] {
                for (gi, mi) in grad.iter_mut().zip(mask) {
                    *gi *= mi;
                }
            }
            if layer.relu {
                for (gi, zi) in grad.iter_mut().zip(&trace.pre[idx]) {
                    if *zi <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
            let input = &trace.inputs[idx];
            let (dw, db, dinput) = self.layer_backward(idx, input, &grad);
            tensors[2 * idx] = dw;
            tensors[2 * idx + 1] = db;
            grad = dinput;
        }
        Ok(GradientSet { tensors })
    }

    /// Gradients of one layer given dloss/dz and the layer input.
    fn layer_backward(
        &self,
        idx: usize,
        input: &[f64],
        gz: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let layer = &self.layers[idx];
        let n = self.graph.num_nodes();
        match layer.dims {
            LayerDims::Hybrid { order, groups } => {
                let assign = self
                    .membership
                    .as_ref()
                    .expect("hybrid layer without membership")
                    .assignment();
                // Tap gradients need the shifted inputs S^t x again; they are
                // cheap to recompute and not worth caching in the trace.
                let mut shifted: Vec<Vec<f64>> = Vec::with_capacity(order);
                shifted.push(input.to_vec());
                for t in 1..order {
                    let next = self.shift.apply(&shifted[t - 1]);
                    shifted.push(next);
                }
                let mut dw = vec![0.0; groups * order];
                for (t, s_t) in shifted.iter().enumerate() {
                    for i in 0..n {
                        dw[assign[i] * order + t] += gz[i] * s_t[i];
                    }
                }
                let db = vec![gz.iter().sum()];
                // Input gradient Σ_t S^t·(c_t ⊙ gz), c_t the per-node taps,
                // assembled back to front so each S multiplies once.
                let scaled = |t: usize| -> Vec<f64> {
                    (0..n)
                        .map(|i| layer.weights[assign[i] * order + t] * gz[i])
                        .collect()
                };
                let mut acc = scaled(order - 1);
                for t in (0..order - 1).rev() {
                    acc = self.shift.apply(&acc);
                    for (ai, ci) in acc.iter_mut().zip(scaled(t)) {
                        *ai += ci;
                    }
                }
                (dw, db, acc)
            }
            LayerDims::Bank {
                order,
                features_in,
                features_out,
            } => {
                let mut dw = vec![0.0; order * features_in * features_out];
                let mut db = vec![0.0; features_out];
                for g in 0..features_out {
                    db[g] = gz[g * n..(g + 1) * n].iter().sum();
                }
                let mut dinput = vec![0.0; n * features_in];
                for f in 0..features_in {
                    let channel = &input[f * n..(f + 1) * n];
                    let mut shifted: Vec<Vec<f64>> = Vec::with_capacity(order);
                    shifted.push(channel.to_vec());
                    for t in 1..order {
                        let next = self.shift.apply(&shifted[t - 1]);
                        shifted.push(next);
                    }
                    for (t, s_t) in shifted.iter().enumerate() {
                        for g in 0..features_out {
                            let gzg = &gz[g * n..(g + 1) * n];
                            let dot: f64 = gzg.iter().zip(s_t).map(|(a, b)| a * b).sum();
                            dw[(t * features_in + f) * features_out + g] = dot;
                        }
                    }
                    // Input gradient for this channel: Σ_t S^t Σ_g h_{t,f,g}·gz_g.
                    let combine = |t: usize| -> Vec<f64> {
                        let mut w = vec![0.0; n];
                        for g in 0..features_out {
                            let h = layer.weights[(t * features_in + f) * features_out + g];
                            let gzg = &gz[g * n..(g + 1) * n];
                            for (wi, &gi) in w.iter_mut().zip(gzg) {
                                *wi += h * gi;
                            }
                        }
                        w
                    };
                    let mut acc = combine(order - 1);
                    for t in (0..order - 1).rev() {
                        acc = self.shift.apply(&acc);
                        for (ai, ci) in acc.iter_mut().zip(combine(t)) {
                            *ai += ci;
                        }
                    }
                    dinput[f * n..(f + 1) * n].copy_from_slice(&acc);
                }
                (dw, db, dinput)
            }
            LayerDims::Dense { d_in, d_out } => {
                let mut dw = vec![0.0; d_in * d_out];
                for o in 0..d_out {
                    let row = &mut dw[o * d_in..(o + 1) * d_in];
                    for (wi, &xi) in row.iter_mut().zip(input) {
                        *wi = gz[o] * xi;
                    }
                }
                let db = gz.to_vec();
                let mut dinput = vec![0.0; d_in];
                for o in 0..d_out {
                    let row = &layer.weights[o * d_in..(o + 1) * d_in];
                    for (di, &wi) in dinput.iter_mut().zip(row) {
                        *di += wi * gz[o];
                    }
                }
                (dw, db, dinput)
            }
        }
    }
}

const MODEL_CTX: &str = "model file";
const MODEL_VERSION: u64 = 1;

fn relu_token(relu: bool) -> &'static str {
    if relu {
        "relu"
    } else {
        "none"
    }
}

fn push_values(out: &mut String, name: &str, values: &[f64]) {
    out.push_str(name);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

fn push_indices(out: &mut String, name: &str, values: &[usize]) {
    out.push_str(name);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

/// Render a model as its self-describing text form. Decimal rendering uses
/// the shortest representation that parses back to the identical bits, so
/// [`parse_model`] round-trips every tensor exactly.
pub fn format_model(m: &Model) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "gfcnn model {MODEL_VERSION}");
    let _ = writeln!(out, "gso {}", m.shift.kind());
    let _ = writeln!(out, "classes {}", m.num_classes);
    let _ = writeln!(out, "init uniform-fan-in {}", m.init_seed);
    out.push_str(&graph::format_graph(&m.graph));
    out.push_str("end graph\n");
    let _ = writeln!(out, "hash {:016x}", graph::graph_hash(&m.graph));
    if let Some(mem) = &m.membership {
        let _ = writeln!(out, "membership {} {}", mem.num_nodes(), mem.num_groups());
        push_indices(&mut out, "selected", mem.selected());
        push_indices(&mut out, "assign", mem.assignment());
    }
    let _ = writeln!(out, "layers {}", m.layers.len());
    for layer in &m.layers {
        match layer.dims {
            LayerDims::Hybrid { order, groups } => {
                let _ = writeln!(
                    out,
                    "layer hybrid order {order} groups {groups} {}",
                    relu_token(layer.relu)
                );
                push_values(&mut out, "taps", &layer.weights);
            }
            LayerDims::Bank {
                order,
                features_in,
                features_out,
            } => {
                let _ = writeln!(
                    out,
                    "layer bank order {order} in {features_in} out {features_out} {}",
                    relu_token(layer.relu)
                );
                push_values(&mut out, "taps", &layer.weights);
            }
            LayerDims::Dense { d_in, d_out } => {
                let _ = writeln!(
                    out,
                    "layer dense in {d_in} out {d_out} {}",
                    relu_token(layer.relu)
                );
                push_values(&mut out, "weights", &layer.weights);
            }
        }
        push_values(&mut out, "bias", &layer.bias);
    }
    let _ = writeln!(out, "readout in {} out {}", m.d_flat, m.num_classes);
    push_values(&mut out, "weights", &m.readout_w);
    push_values(&mut out, "bias", &m.readout_b);
    out.push_str("end model\n");
    out
}

/// Cursor over the content lines of a model file (comments stripped, blank
/// lines skipped), tracking 1-based line numbers for diagnostics.
struct LineCursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last_line: usize,
}

impl<'a> LineCursor<'a> {
    fn new(text: &'a str) -> LineCursor<'a> {
        LineCursor {
            lines: text.lines().enumerate(),
            last_line: 0,
        }
    }

    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (idx, raw) in self.lines.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                self.last_line = idx + 1;
                return Some((idx + 1, line));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_content().ok_or_else(|| {
            Error::parse(
                MODEL_CTX,
                self.last_line,
                format!("file ends before {what}"),
            )
        })
    }
}

fn parse_count(ctx_line: usize, token: &str, what: &str) -> Result<usize> {
    token
        .parse()
        .map_err(|e| Error::parse(MODEL_CTX, ctx_line, format!("bad {what}: {e}")))
}

/// Parse a list of exactly `expect` finite decimal values after a `name`
/// keyword.
fn parse_values(line_no: usize, line: &str, name: &str, expect: usize) -> Result<Vec<f64>> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(name) {
        return Err(Error::parse(
            MODEL_CTX,
            line_no,
            format!("expected `{name} ...`"),
        ));
    }
    let mut values = Vec::with_capacity(expect);
    for token in fields {
        let v: f64 = token
            .parse()
            .map_err(|e| Error::parse(MODEL_CTX, line_no, format!("bad value: {e}")))?;
        if !v.is_finite() {
            return Err(Error::parse(MODEL_CTX, line_no, "non-finite parameter value"));
        }
        values.push(v);
    }
    if values.len() != expect {
        return Err(Error::parse(
            MODEL_CTX,
            line_no,
            format!("expected {expect} values after `{name}`, found {}", values.len()),
        ));
    }
    Ok(values)
}

fn parse_index_list(line_no: usize, line: &str, name: &str, expect: usize) -> Result<Vec<usize>> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(name) {
        return Err(Error::parse(
            MODEL_CTX,
            line_no,
            format!("expected `{name} ...`"),
        ));
    }
    let mut values = Vec::with_capacity(expect);
    for token in fields {
        values.push(parse_count(line_no, token, "index")?);
    }
    if values.len() != expect {
        return Err(Error::parse(
            MODEL_CTX,
            line_no,
            format!("expected {expect} indices after `{name}`, found {}", values.len()),
        ));
    }
    Ok(values)
}

/// Parse the text form produced by [`format_model`], re-validating the graph,
/// the membership, every declared shape, and the graph hash.
pub fn parse_model(text: &str) -> Result<Model> {
    let mut cur = LineCursor::new(text);

    let (line_no, header) = cur.expect("the header")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "gfcnn" || fields[1] != "model" {
        return Err(Error::parse(MODEL_CTX, line_no, "expected header `gfcnn model <version>`"));
    }
    let version: u64 = fields[2]
        .parse()
        .map_err(|e| Error::parse(MODEL_CTX, line_no, format!("bad version: {e}")))?;
    if version != MODEL_VERSION {
        return Err(Error::parse(
            MODEL_CTX,
            line_no,
            format!("unsupported model version {version}, this build reads version {MODEL_VERSION}"),
        ));
    }

    let (line_no, line) = cur.expect("the shift kind")?;
    let kind: ShiftKind = match line.strip_prefix("gso ") {
        Some(token) => token
            .trim()
            .parse()
            .map_err(|_| Error::parse(MODEL_CTX, line_no, format!("unknown shift kind {token:?}")))?,
        None => return Err(Error::parse(MODEL_CTX, line_no, "expected `gso <kind>`")),
    };

    let (line_no, line) = cur.expect("the class count")?;
    let num_classes = match line.strip_prefix("classes ") {
        Some(token) => parse_count(line_no, token.trim(), "class count")?,
        None => return Err(Error::parse(MODEL_CTX, line_no, "expected `classes <C>`")),
    };
    if num_classes == 0 {
        return Err(Error::parse(MODEL_CTX, line_no, "class count must be positive"));
    }

    let (line_no, line) = cur.expect("the initialization record")?;
    let init_fields: Vec<&str> = line.split_whitespace().collect();
    if init_fields.len() != 3 || init_fields[0] != "init" {
        return Err(Error::parse(MODEL_CTX, line_no, "expected `init <scheme> <seed>`"));
    }
    if init_fields[1] != "uniform-fan-in" {
        return Err(Error::parse(
            MODEL_CTX,
            line_no,
            format!("unknown initialization scheme {:?}", init_fields[1]),
        ));
    }
    let init_seed: u64 = init_fields[2]
        .parse()
        .map_err(|e| Error::parse(MODEL_CTX, line_no, format!("bad seed: {e}")))?;

    // Graph section: `graph <N>`, edge lines, `end graph`.
    let (line_no, line) = cur.expect("the graph section")?;
    let n = match line.strip_prefix("graph ") {
        Some(token) => parse_count(line_no, token.trim(), "node count")?,
        None => return Err(Error::parse(MODEL_CTX, line_no, "expected `graph <N>`")),
    };
    let mut edges = Vec::new();
    loop {
        let (line_no, line) = cur.expect("`end graph`")?;
        if line == "end graph" {
            break;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(MODEL_CTX, line_no, "expected edge line `i j weight`"));
        }
        let i = parse_count(line_no, fields[0], "node index")?;
        let j = parse_count(line_no, fields[1], "node index")?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|e| Error::parse(MODEL_CTX, line_no, format!("bad weight: {e}")))?;
        edges.push((i, j, w));
    }
    let graph = Graph::from_edges(n, &edges).map_err(|e| match e {
        Error::Config(msg) => Error::parse(MODEL_CTX, cur.last_line, msg),
        other => other,
    })?;

    let (line_no, line) = cur.expect("the graph hash")?;
    let hash = match line.strip_prefix("hash ") {
        Some(token) => u64::from_str_radix(token.trim(), 16)
            .map_err(|e| Error::parse(MODEL_CTX, line_no, format!("bad hash: {e}")))?,
        None => return Err(Error::parse(MODEL_CTX, line_no, "expected `hash <hex>`")),
    };
    if hash != graph::graph_hash(&graph) {
        return Err(Error::parse(
            MODEL_CTX,
            line_no,
            "graph hash does not match the embedded graph",
        ));
    }

    // Optional membership, then the layer count.
    let mut membership: Option<MembershipMatrix> = None;
    let (mut line_no, mut line) = cur.expect("the layer count")?;
    if let Some(rest) = line.strip_prefix("membership ") {
        let fields: Vec<&str> = rest.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(MODEL_CTX, line_no, "expected `membership <N> <B>`"));
        }
        let mem_n = parse_count(line_no, fields[0], "node count")?;
        let mem_b = parse_count(line_no, fields[1], "group count")?;
        if mem_n != n {
            return Err(Error::parse(
                MODEL_CTX,
                line_no,
                format!("membership covers {mem_n} nodes but the graph has {n}"),
            ));
        }
        let (l2, selected_line) = cur.expect("the selected nodes")?;
        let selected = parse_index_list(l2, selected_line, "selected", mem_b)?;
        let (l3, assign_line) = cur.expect("the assignment")?;
        let assignment = parse_index_list(l3, assign_line, "assign", mem_n)?;
        membership = Some(
            MembershipMatrix::from_parts(assignment, selected)
                .map_err(|e| match e {
                    Error::Config(msg) => Error::parse(MODEL_CTX, l3, msg),
                    other => other,
                })?,
        );
        let next = cur.expect("the layer count")?;
        line_no = next.0;
        line = next.1;
    }

    let num_layers = match line.strip_prefix("layers ") {
        Some(token) => parse_count(line_no, token.trim(), "layer count")?,
        None => return Err(Error::parse(MODEL_CTX, line_no, "expected `layers <L>`")),
    };
    if num_layers > 1000 {
        return Err(Error::parse(MODEL_CTX, line_no, "unreasonable layer count"));
    }

    let parse_relu = |line_no: usize, token: &str| -> Result<bool> {
        match token {
            "relu" => Ok(true),
            "none" => Ok(false),
            other => Err(Error::parse(
                MODEL_CTX,
                line_no,
                format!("unknown nonlinearity {other:?}"),
            )),
        }
    };

    let mut specs: Vec<LayerSpec> = Vec::with_capacity(num_layers);
    let mut declared: Vec<LayerDims> = Vec::with_capacity(num_layers);
    let mut weights: Vec<Vec<f64>> = Vec::with_capacity(num_layers);
    let mut biases: Vec<Vec<f64>> = Vec::with_capacity(num_layers);
    for _ in 0..num_layers {
        let (line_no, line) = cur.expect("a layer header")?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let (dims, relu, value_name) = match fields.as_slice() {
            ["layer", "hybrid", "order", t, "groups", b, nl] => {
                let order = parse_count(line_no, t, "order")?;
                let groups = parse_count(line_no, b, "group count")?;
                (
                    LayerDims::Hybrid { order, groups },
                    parse_relu(line_no, nl)?,
                    "taps",
                )
            }
            ["layer", "bank", "order", t, "in", fi, "out", fo, nl] => {
                let order = parse_count(line_no, t, "order")?;
                let features_in = parse_count(line_no, fi, "feature count")?;
                let features_out = parse_count(line_no, fo, "feature count")?;
                (
                    LayerDims::Bank {
                        order,
                        features_in,
                        features_out,
                    },
                    parse_relu(line_no, nl)?,
                    "taps",
                )
            }
            ["layer", "dense", "in", di, "out", do_, nl] => {
                let d_in = parse_count(line_no, di, "width")?;
                let d_out = parse_count(line_no, do_, "width")?;
                (
                    LayerDims::Dense { d_in, d_out },
                    parse_relu(line_no, nl)?,
                    "weights",
                )
            }
            _ => {
                return Err(Error::parse(MODEL_CTX, line_no, "unrecognized layer header"));
            }
        };
        let kind = match dims {
            LayerDims::Hybrid { order, groups } => LayerKind::HybridGf {
                order,
                num_groups: groups,
            },
            LayerDims::Bank {
                order,
                features_out,
                ..
            } => LayerKind::GfBank {
                order,
                features_out,
            },
            LayerDims::Dense { d_out, .. } => LayerKind::FullyConnected { width: d_out },
        };
        specs.push(LayerSpec { kind, relu });
        let (wlen, blen, _) = dims.tensor_shape();
        if wlen.checked_add(blen).map_or(true, |t| t > MAX_PARAMETERS) {
            return Err(Error::parse(MODEL_CTX, line_no, "layer too large"));
        }
        let (wl, wline) = cur.expect("layer values")?;
        weights.push(parse_values(wl, wline, value_name, wlen)?);
        let (bl, bline) = cur.expect("layer bias")?;
        biases.push(parse_values(bl, bline, "bias", blen)?);
        declared.push(dims);
    }

    // Check the declared shapes against a fresh left-to-right resolution.
    let (resolved, d_flat) = resolve_dims(&specs, n).map_err(|e| match e {
        Error::Config(msg) => Error::parse(MODEL_CTX, cur.last_line, msg),
        other => other,
    })?;
    count_from_dims(&resolved, d_flat, num_classes).map_err(|e| match e {
        Error::Config(msg) => Error::parse(MODEL_CTX, cur.last_line, msg),
        other => other,
    })?;
    for (decl, res) in declared.iter().zip(&resolved) {
        if decl != res {
            return Err(Error::parse(
                MODEL_CTX,
                cur.last_line,
                "layer dimensions do not compose with the preceding layers",
            ));
        }
    }
    let needs_membership = resolved
        .iter()
        .any(|d| matches!(d, LayerDims::Hybrid { .. }));
    match (&membership, needs_membership) {
        (None, true) => {
            return Err(Error::parse(
                MODEL_CTX,
                cur.last_line,
                "hybrid layers need a membership section",
            ));
        }
        (Some(_), false) => {
            return Err(Error::parse(
                MODEL_CTX,
                cur.last_line,
                "membership section without a hybrid layer",
            ));
        }
        _ => {}
    }
    if let Some(mem) = &membership {
        for d in &resolved {
            if let LayerDims::Hybrid { groups, .. } = d {
                if *groups != mem.num_groups() {
                    return Err(Error::parse(
                        MODEL_CTX,
                        cur.last_line,
                        format!(
                            "layer declares {groups} groups but the membership has {}",
                            mem.num_groups()
                        ),
                    ));
                }
            }
        }
    }

    let (line_no, line) = cur.expect("the readout header")?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        ["readout", "in", di, "out", c] => {
            let d_in = parse_count(line_no, di, "width")?;
            let c = parse_count(line_no, c, "class count")?;
            if d_in != d_flat || c != num_classes {
                return Err(Error::parse(
                    MODEL_CTX,
                    line_no,
                    format!("readout shape {d_in}x{c} does not match the layers ({d_flat}x{num_classes})"),
                ));
            }
        }
        _ => return Err(Error::parse(MODEL_CTX, line_no, "expected `readout in <D> out <C>`")),
    }
    let (wl, wline) = cur.expect("readout weights")?;
    let readout_w = parse_values(wl, wline, "weights", d_flat * num_classes)?;
    let (bl, bline) = cur.expect("readout bias")?;
    let readout_b = parse_values(bl, bline, "bias", num_classes)?;

    let (line_no, line) = cur.expect("`end model`")?;
    if line != "end model" {
        return Err(Error::parse(MODEL_CTX, line_no, "expected `end model`"));
    }

    let layers: Vec<LayerState> = resolved
        .iter()
        .zip(specs.iter())
        .zip(weights.into_iter().zip(biases))
        .map(|((&dims, spec), (weights, bias))| LayerState {
            relu: spec.relu,
            dims,
            weights,
            bias,
        })
        .collect();
    let shift = build_unit_radius_shift(&graph, kind);
    Ok(Model {
        graph,
        shift,
        num_classes,
        init_seed,
        membership,
        layers,
        d_flat,
        readout_w,
        readout_b,
    })
}

/// Write a model to a file in the text form of [`format_model`].
pub fn save_model(m: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, format_model(m)).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })
}

/// Read a model from a file written by [`save_model`].
pub fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_connected_er;

    fn er15() -> Graph {
        generate_connected_er(15, 0.4, 7).unwrap()
    }

    fn hybrid_spec(order: usize, groups: usize) -> LayerSpec {
        LayerSpec::relu(LayerKind::HybridGf {
            order,
            num_groups: groups,
        })
    }

    #[test]
    fn zero_parameters_give_zero_logits() {
        let mut m = Model::init(
            er15(),
            ShiftKind::Adjacency,
            &[hybrid_spec(3, 5)],
            15,
            1,
        )
        .unwrap();
        for t in m.tensors_mut() {
            t.fill(0.0);
        }
        let x: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let logits = m.forward_eval(&x).unwrap();
        assert!(logits.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn order_one_unit_taps_pass_nonnegative_signals_through() {
        let g = er15();
        let n = g.num_nodes();
        let mut m = Model::init(g, ShiftKind::Adjacency, &[hybrid_spec(1, 15)], 15, 1).unwrap();
        {
            let mut tensors = m.tensors_mut();
            tensors[0].fill(1.0); // taps = 1 at order 0
            tensors[1].fill(0.0); // bias
            // Readout picks node k for logit k.
            tensors[2].fill(0.0);
            for k in 0..15 {
                tensors[2][k * n + k] = 1.0;
            }
            tensors[3].fill(0.0);
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
        let logits = m.forward_eval(&x).unwrap();
        assert_eq!(logits, x);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = Model::init(er15(), ShiftKind::Adjacency, &[hybrid_spec(3, 4)], 15, 9).unwrap();
        let b = Model::init(er15(), ShiftKind::Adjacency, &[hybrid_spec(3, 4)], 15, 9).unwrap();
        assert_eq!(a, b);
        let c = Model::init(er15(), ShiftKind::Adjacency, &[hybrid_spec(3, 4)], 15, 10).unwrap();
        assert_ne!(a, c);
        // fan_in = order = 3 gives a = 1: every tap lies in [-1, 1].
        assert!(a.tensors()[0].iter().all(|v| v.abs() <= 1.0));
        // Biases start at zero.
        assert!(a.tensors()[1].iter().all(|&v| v == 0.0));
        assert!(a.tensors()[3].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parameter_counts_match_closed_forms() {
        let g = er15();
        let fc = Model::init(
            g.clone(),
            ShiftKind::Adjacency,
            &[LayerSpec::relu(LayerKind::FullyConnected { width: 2500 })],
            15,
            0,
        )
        .unwrap();
        assert_eq!(fc.count_parameters(), 77_515);
        let two_hybrid = Model::init(
            g.clone(),
            ShiftKind::Adjacency,
            &[hybrid_spec(10, 15), hybrid_spec(10, 15)],
            15,
            0,
        )
        .unwrap();
        assert_eq!(two_hybrid.count_parameters(), 542);
        let bank = Model::init(
            g,
            ShiftKind::Adjacency,
            &[LayerSpec::relu(LayerKind::GfBank {
                order: 5,
                features_out: 32,
            })],
            15,
            0,
        )
        .unwrap();
        assert_eq!(bank.count_parameters(), 7_407);
    }

    #[test]
    fn composition_errors_are_rejected() {
        let g = er15();
        // Hybrid after a multi-feature bank.
        assert!(Model::init(
            g.clone(),
            ShiftKind::Adjacency,
            &[
                LayerSpec::relu(LayerKind::GfBank {
                    order: 2,
                    features_out: 4
                }),
                hybrid_spec(2, 5)
            ],
            15,
            0,
        )
        .is_err());
        // Graph filter after a fully-connected layer.
        assert!(Model::init(
            g.clone(),
            ShiftKind::Adjacency,
            &[
                LayerSpec::relu(LayerKind::FullyConnected { width: 15 }),
                hybrid_spec(2, 5)
            ],
            15,
            0,
        )
        .is_err());
        // Conflicting group counts.
        assert!(Model::init(
            g.clone(),
            ShiftKind::Adjacency,
            &[hybrid_spec(2, 5), hybrid_spec(2, 6)],
            15,
            0,
        )
        .is_err());
        // More groups than nodes.
        assert!(Model::init(g, ShiftKind::Adjacency, &[hybrid_spec(2, 16)], 15, 0).is_err());
    }

    #[test]
    fn model_file_round_trip_is_exact() {
        let m = Model::init(
            er15(),
            ShiftKind::Adjacency,
            &[
                hybrid_spec(4, 6),
                LayerSpec::relu(LayerKind::FullyConnected { width: 11 }),
            ],
            15,
            123,
        )
        .unwrap();
        let text = format_model(&m);
        let back = parse_model(&text).unwrap();
        assert_eq!(m, back);
        assert_eq!(text, format_model(&back));
        // Bit-exact logits after the round trip.
        let x: Vec<f64> = (0..15).map(|i| (i as f64 * 1.3).sin()).collect();
        let a = m.forward_eval(&x).unwrap();
        let b = back.forward_eval(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_model_file_is_rejected() {
        let m = Model::init(er15(), ShiftKind::Adjacency, &[hybrid_spec(3, 4)], 15, 5).unwrap();
        let text = format_model(&m);
        // Drop the final line and then some: every prefix must fail cleanly.
        let truncated = &text[..text.len() - 12];
        assert!(parse_model(truncated).is_err());
        let half = &text[..text.len() / 2];
        assert!(parse_model(half).is_err());
        assert!(parse_model("").is_err());
        assert!(parse_model("gfcnn model 2\n").is_err());
    }

    #[test]
    fn corrupted_hash_is_rejected() {
        let m = Model::init(er15(), ShiftKind::Adjacency, &[hybrid_spec(3, 4)], 15, 5).unwrap();
        let digest = crate::graph::graph_hash(m.graph());
        let text = format_model(&m).replace(
            &format!("hash {digest:016x}"),
            &format!("hash {:016x}", digest ^ 1),
        );
        assert!(parse_model(&text).is_err());
    }
}
