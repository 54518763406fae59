//! Layer stacks, the one-hot squared-error loss, and backpropagation.

mod adam;
mod train;

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::{AdamState, LrSchedule};
pub use train::{train, LogRow, TrainConfig, Trainer, TrainingLog};

use crate::error::{config, usage, Result};
use crate::grad::GradientEngine;
use crate::layers::{Layer, LayerGrad, QnnLayer};
use crate::pqc::{build_encoder, build_transformation};
use crate::simcore::{Axis, Observable};
use crate::data::Sample;

static NEXT_NETWORK_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed)
}

/// An ordered stack of quantum and affine layers with chained dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Layer>", into = "Vec<Layer>")]
pub struct Network {
    layers: Vec<Layer>,
    /// Changes whenever parameters change; traces from older values are stale.
    revision: u64,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl TryFrom<Vec<Layer>> for Network {
    type Error = crate::QdnnError;

    fn try_from(layers: Vec<Layer>) -> Result<Self> {
        Network::new(layers)
    }
}

impl From<Network> for Vec<Layer> {
    fn from(n: Network) -> Self {
        n.layers
    }
}

/// Per-layer inputs recorded by [`Network::forward`].
#[derive(Debug, Clone)]
pub struct Trace {
    revision: u64,
    inputs: Vec<Vec<f64>>,
}

impl Trace {
    pub fn layer_inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return config("a network needs at least one layer");
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return config(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                ));
            }
        }
        Ok(Self {
            layers,
            revision: fresh_id(),
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    /// All parameters flattened: per layer, weights then bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights());
            out.extend_from_slice(l.bias());
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return usage(format!(
                "network has {} parameters, got {}",
                self.num_params(),
                params.len()
            ));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return usage(format!("parameter {i} is not finite"));
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights().len());
            let (b, tail) = tail.split_at(l.bias().len());
            l.set_weights(w)?;
            l.set_bias(b)?;
            rest = tail;
        }
        self.revision = fresh_id();
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut h = x.to_vec();
        for l in &self.layers {
            h = l.forward(&h)?;
        }
        Ok(h)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Trace)> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for l in &self.layers {
            let next = l.forward(&h)?;
            inputs.push(std::mem::replace(&mut h, next));
        }
        Ok((
            h,
            Trace {
                revision: self.revision,
                inputs,
            },
        ))
    }

    /// Right-to-left chain rule; returns one [`LayerGrad`] per layer.
    pub fn backward(&self, trace: &Trace, d_output: &[f64], engine: GradientEngine) -> Result<Vec<LayerGrad>> {
        if trace.revision != self.revision || trace.inputs.len() != self.layers.len() {
            return usage("trace was recorded on a different network state");
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = d_output.to_vec();
        for (l, x) in self.layers.iter().zip(&trace.inputs).rev() {
            let g = l.backward(x, &upstream, engine)?;
            upstream = g.d_input.clone();
            grads.push(g);
        }
        grads.reverse();
        Ok(grads)
    }

    /// Flattens layer gradients in [`Network::parameters`] order.
    pub fn flatten_grads(&self, grads: &[LayerGrad]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for g in grads {
            out.extend_from_slice(&g.d_weights);
            out.extend_from_slice(&g.d_bias);
        }
        out
    }
}

/// `|y − e_label|²` and its gradient `2(y − e_label)`.
pub fn loss_mse_onehot(y_pred: &[f64], label: u8) -> Result<(f64, Vec<f64>)> {
    if label > 1 {
        return usage(format!("label {label} is not binary"));
    }
    if y_pred.len() != 2 {
        return usage(format!("expected 2 outputs, got {}", y_pred.len()));
    }
    let mut loss = 0.0;
    let grad = y_pred
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let t = if i == label as usize { 1.0 } else { 0.0 };
            loss += (y - t) * (y - t);
            2.0 * (y - t)
        })
        .collect();
    Ok((loss, grad))
}

/// Index of the largest output; ties resolve to the lower index.
pub fn predicted_class(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in y.iter().enumerate().skip(1) {
        if *v > y[best] {
            best = i;
        }
    }
    best
}

/// Mean loss and the mean flattened gradient over `batch`.
///
/// Samples are processed in parallel on the current rayon pool; partial
/// results are reduced in sample order, so the value does not depend on the
/// thread count.
pub fn batch_loss_and_grad(net: &Network, batch: &[&Sample], engine: GradientEngine) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return usage("empty batch");
    }
    let per_sample: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|s| {
            let (y, trace) = net.forward(&s.features)?;
            let (loss, dy) = loss_mse_onehot(&y, s.label)?;
            let grads = net.backward(&trace, &dy, engine)?;
            Ok((loss, net.flatten_grads(&grads)))
        })
        .collect::<Result<_>>()?;
    let n = batch.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; net.num_params()];
    for (loss, g) in &per_sample {
        total += loss;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((total / n, grad))
}

/// Mean loss over `samples` without gradients.
pub fn batch_loss(net: &Network, samples: &[&Sample]) -> Result<f64> {
    let losses: Vec<f64> = samples
        .par_iter()
        .map(|s| loss_mse_onehot(&net.predict(&s.features)?, s.label).map(|(l, _)| l))
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / samples.len().max(1) as f64)
}

/// `(mean loss, accuracy)` with accuracy the fraction of argmax hits.
pub fn evaluate(net: &Network, samples: &[Sample]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Ok((0.0, 0.0));
    }
    let rows: Vec<(f64, bool)> = samples
        .par_iter()
        .map(|s| {
            let y = net.predict(&s.features)?;
            let (loss, _) = loss_mse_onehot(&y, s.label)?;
            Ok((loss, predicted_class(&y) == s.label as usize))
        })
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    let loss = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let hits = rows.iter().filter(|r| r.1).count() as f64;
    Ok((loss, hits / n))
}

/// How a quantum layer turns its final state into outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// One block per axis, each listing that Pauli on every qubit in order.
    Paulis(Vec<Axis>),
    /// `|0⟩⟨0|` and `|1⟩⟨1|` on one qubit.
    Projectors { qubit: usize },
}

impl Readout {
    pub fn observables(&self, num_qubits: usize) -> Vec<Observable> {
        match self {
            Readout::Paulis(axes) => axes
                .iter()
                .flat_map(|&a| (0..num_qubits).map(move |q| Observable::pauli(a, q)))
                .collect(),
            Readout::Projectors { qubit } => {
                vec![Observable::projector_zero(*qubit), Observable::projector_one(*qubit)]
            }
        }
    }
}

/// Builder parameters for one encoder/transformation quantum layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnnLayerSpec {
    pub qubits: usize,
    pub input_dim: usize,
    pub encoder_depth: usize,
    pub encoder_axes: Vec<Axis>,
    pub transformation_depth: usize,
    pub readout: Readout,
    pub bias: bool,
}

impl QnnLayerSpec {
    /// The layer with all weights and biases zero.
    pub fn build(&self) -> Result<QnnLayer> {
        let encoder = build_encoder(self.qubits, self.encoder_depth, &self.encoder_axes, self.input_dim)?;
        let transformation = build_transformation(self.qubits, self.transformation_depth)?;
        QnnLayer::with_zero_params(encoder, transformation, self.readout.observables(self.qubits), self.bias)
    }
}

pub fn mnist_layer_specs() -> Vec<QnnLayerSpec> {
    use Axis::{X, Y, Z};
    vec![
        QnnLayerSpec {
            qubits: 8,
            input_dim: 64,
            encoder_depth: 2,
            encoder_axes: vec![Z, X, Z, X],
            transformation_depth: 5,
            readout: Readout::Paulis(vec![X, Y, Z]),
            bias: true,
        },
        QnnLayerSpec {
            qubits: 6,
            input_dim: 24,
            encoder_depth: 1,
            encoder_axes: vec![Z, X, Z, X, Z],
            transformation_depth: 4,
            readout: Readout::Paulis(vec![Y, Z]),
            bias: true,
        },
        QnnLayerSpec {
            qubits: 4,
            input_dim: 12,
            encoder_depth: 1,
            encoder_axes: vec![Z, X, Z, X, Z],
            transformation_depth: 2,
            readout: Readout::Projectors { qubit: 0 },
            bias: false,
        },
    ]
}

pub fn build_network(specs: &[QnnLayerSpec]) -> Result<Network> {
    let layers = specs
        .iter()
        .map(|s| s.build().map(Layer::from))
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

/// The three-layer 64 → 24 → 12 → 2 classifier, parameters zeroed.
pub fn build_mnist_network() -> Network {
    build_network(&mnist_layer_specs()).expect("layer specs are consistent")
}
