//! Quantum neural network layers and classical affine layers.

use serde::{Deserialize, Serialize};

use crate::error::{config, usage, Result};
use crate::grad::{adjoint_gradient, shift_jacobian, ExpectationJob, GradientEngine};
use crate::pqc::{CircuitTemplate, GateTemplate, ParamRef};
use crate::simcore::{Axis, Observable};

/// Gradients produced by a layer's backward pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerGrad {
    pub d_input: Vec<f64>,
    /// Flattened in the same order as the layer's weight vector.
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like(n_in: usize, n_weights: usize, n_bias: usize) -> Self {
        Self {
            d_input: vec![0.0; n_in],
            d_weights: vec![0.0; n_weights],
            d_bias: vec![0.0; n_bias],
        }
    }
}

/// `y_j = ⟨ψ(x)|V†(W) H_j V(W)|ψ(x)⟩ + b_j` with `|ψ(x)⟩ = U(x)|0…0⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QnnLayerParts", into = "QnnLayerParts")]
pub struct QnnLayer {
    encoder: CircuitTemplate,
    transformation: CircuitTemplate,
    observables: Vec<Observable>,
    bias: Vec<f64>,
    weights: Vec<f64>,
    /// `encoder` followed by `transformation`.
    circuit: CircuitTemplate,
}

#[derive(Serialize, Deserialize)]
pub struct QnnLayerParts {
    pub encoder: CircuitTemplate,
    pub transformation: CircuitTemplate,
    pub observables: Vec<Observable>,
    pub bias: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TryFrom<QnnLayerParts> for QnnLayer {
    type Error = crate::QdnnError;

    fn try_from(p: QnnLayerParts) -> Result<Self> {
        QnnLayer::new(p.encoder, p.transformation, p.observables, p.bias, p.weights)
    }
}

impl From<QnnLayer> for QnnLayerParts {
    fn from(l: QnnLayer) -> Self {
        QnnLayerParts {
            encoder: l.encoder,
            transformation: l.transformation,
            observables: l.observables,
            bias: l.bias,
            weights: l.weights,
        }
    }
}

fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => config(format!("{what}[{i}] is not finite")),
        None => Ok(()),
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return usage(format!("{what} has length {got}, expected {want}"));
    }
    Ok(())
}

impl QnnLayer {
    pub fn new(
        encoder: CircuitTemplate,
        transformation: CircuitTemplate,
        observables: Vec<Observable>,
        bias: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if encoder.num_weight_slots() != 0 {
            return config("encoder must not reference weight slots");
        }
        if transformation.num_input_slots() != 0 {
            return config("transformation must not reference input slots");
        }
        if observables.is_empty() {
            return config("a quantum layer needs at least one observable");
        }
        let circuit = encoder.then(&transformation)?;
        for o in &observables {
            o.check_qubits(circuit.num_qubits())
                .or_else(|e| config(e.to_string()))?;
        }
        if !bias.is_empty() && bias.len() != observables.len() {
            return config(format!(
                "bias length {} must be 0 or the observable count {}",
                bias.len(),
                observables.len()
            ));
        }
        if weights.len() != transformation.num_weight_slots() {
            return config(format!(
                "{} weights supplied for {} weight slots",
                weights.len(),
                transformation.num_weight_slots()
            ));
        }
        check_finite("bias", &bias)?;
        check_finite("weights", &weights)?;
        Ok(Self {
            encoder,
            transformation,
            observables,
            bias,
            weights,
            circuit,
        })
    }

    /// Zero weights and a zero bias of length `m` (or none).
    pub fn with_zero_params(
        encoder: CircuitTemplate,
        transformation: CircuitTemplate,
        observables: Vec<Observable>,
        with_bias: bool,
    ) -> Result<Self> {
        let bias = if with_bias {
            vec![0.0; observables.len()]
        } else {
            Vec::new()
        };
        let weights = vec![0.0; transformation.num_weight_slots()];
        Self::new(encoder, transformation, observables, bias, weights)
    }

    pub fn encoder(&self) -> &CircuitTemplate {
        &self.encoder
    }

    pub fn transformation(&self) -> &CircuitTemplate {
        &self.transformation
    }

    pub fn circuit(&self) -> &CircuitTemplate {
        &self.circuit
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_qubits(&self) -> usize {
        self.circuit.num_qubits()
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.num_input_slots()
    }

    pub fn output_dim(&self) -> usize {
        self.observables.len()
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        check_len("weights", weights.len(), self.weights.len())?;
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    pub fn set_bias(&mut self, bias: &[f64]) -> Result<()> {
        check_len("bias", bias.len(), self.bias.len())?;
        self.bias.copy_from_slice(bias);
        Ok(())
    }

    /// Observable expectations before the bias is added.
    pub fn expectations(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("layer input", x.len(), self.input_dim())?;
        let state = self.circuit.run(x, &self.weights)?;
        self.observables.iter().map(|o| state.expectation(o)).collect()
    }

    /// One state preparation; every observable is read from the same state.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.expectations(x)?;
        for (yj, bj) in y.iter_mut().zip(&self.bias) {
            *yj += bj;
        }
        Ok(y)
    }

    pub fn backward(&self, x: &[f64], upstream: &[f64], engine: GradientEngine) -> Result<LayerGrad> {
        check_len("layer input", x.len(), self.input_dim())?;
        check_len("upstream gradient", upstream.len(), self.output_dim())?;
        let d_bias = if self.bias.is_empty() {
            Vec::new()
        } else {
            upstream.to_vec()
        };
        let (d_input, d_weights) = match engine {
            GradientEngine::Shift => {
                // dy/dx and dy/dW column by column, then contract with dL/dy
                let (jx, jw) = shift_jacobian(&self.circuit, &self.observables, x, &self.weights)?;
                let contract = |cols: Vec<Vec<f64>>| -> Vec<f64> {
                    cols.iter()
                        .map(|c| c.iter().zip(upstream).map(|(d, u)| d * u).sum())
                        .collect()
                };
                (contract(jx), contract(jw))
            }
            GradientEngine::Adjoint => {
                // d(u·y) = gradient of the single observable Σ u_j H_j
                let combined =
                    Observable::weighted_sum(upstream.iter().copied().zip(&self.observables));
                let job = ExpectationJob::new(&self.circuit, &combined, x, &self.weights)?;
                let g = adjoint_gradient(&job)?;
                (g.inputs, g.weights)
            }
        };
        Ok(LayerGrad {
            d_input,
            d_weights,
            d_bias,
        })
    }
}

/// `y = W x + b` with `W` stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineLayer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl AffineLayer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return config("affine layer dimensions must be positive");
        }
        if weights.len() != rows * cols || bias.len() != rows {
            return config(format!(
                "affine {rows}x{cols} needs {} weights and {rows} biases, got {} and {}",
                rows * cols,
                weights.len(),
                bias.len()
            ));
        }
        check_finite("weights", &weights)?;
        check_finite("bias", &bias)?;
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        Self::new(n, n, w, vec![0.0; n])
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols], vec![0.0; rows])
    }

    pub fn input_dim(&self) -> usize {
        self.cols
    }

    pub fn output_dim(&self) -> usize {
        self.rows
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        check_len("weights", weights.len(), self.weights.len())?;
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    pub fn set_bias(&mut self, bias: &[f64]) -> Result<()> {
        check_len("bias", bias.len(), self.bias.len())?;
        self.bias.copy_from_slice(bias);
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("layer input", x.len(), self.cols)?;
        Ok(self
            .weights
            .chunks_exact(self.cols)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect())
    }

    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<LayerGrad> {
        check_len("layer input", x.len(), self.cols)?;
        check_len("upstream gradient", upstream.len(), self.rows)?;
        let mut d_input = vec![0.0; self.cols];
        let mut d_weights = vec![0.0; self.rows * self.cols];
        for (r, (row, u)) in self.weights.chunks_exact(self.cols).zip(upstream).enumerate() {
            for c in 0..self.cols {
                d_input[c] += row[c] * u;
                d_weights[r * self.cols + c] = u * x[c];
            }
        }
        Ok(LayerGrad {
            d_input,
            d_weights,
            d_bias: upstream.to_vec(),
        })
    }
}

/// `m` qubits, `R_y(x_j)` on qubit `j`, readout `Z_j`: outputs `(cos x_1, …, cos x_m)`.
///
/// `Z_j = 2|0⟩⟨0|_j − I`, so this is the projector readout rescaled to the
/// cosine range.
pub fn make_cosine_activation_layer(m: usize) -> Result<QnnLayer> {
    if !(1..=20).contains(&m) {
        return config(format!("cosine activation width {m} outside 1..=20"));
    }
    let gates = (0..m)
        .map(|j| GateTemplate::Rotation {
            axis: Axis::Y,
            qubit: j,
            param: ParamRef::Input(j),
        })
        .collect();
    let encoder = CircuitTemplate::new(m, gates)?;
    let observables = (0..m).map(|j| Observable::pauli(Axis::Z, j)).collect();
    QnnLayer::with_zero_params(encoder, CircuitTemplate::empty(m)?, observables, true)
}

/// A network layer of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layer {
    Quantum(QnnLayer),
    Affine(AffineLayer),
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        match self {
            Layer::Quantum(l) => l.input_dim(),
            Layer::Affine(l) => l.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Layer::Quantum(l) => l.output_dim(),
            Layer::Affine(l) => l.output_dim(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Layer::Quantum(l) => l.weights(),
            Layer::Affine(l) => l.weights(),
        }
    }

    pub fn bias(&self) -> &[f64] {
        match self {
            Layer::Quantum(l) => l.bias(),
            Layer::Affine(l) => l.bias(),
        }
    }

    pub fn set_weights(&mut self, w: &[f64]) -> Result<()> {
        match self {
            Layer::Quantum(l) => l.set_weights(w),
            Layer::Affine(l) => l.set_weights(w),
        }
    }

    pub fn set_bias(&mut self, b: &[f64]) -> Result<()> {
        match self {
            Layer::Quantum(l) => l.set_bias(b),
            Layer::Affine(l) => l.set_bias(b),
        }
    }

    pub fn num_params(&self) -> usize {
        self.weights().len() + self.bias().len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Layer::Quantum(l) => l.forward(x),
            Layer::Affine(l) => l.forward(x),
        }
    }

    pub fn backward(&self, x: &[f64], upstream: &[f64], engine: GradientEngine) -> Result<LayerGrad> {
        match self {
            Layer::Quantum(l) => l.backward(x, upstream, engine),
            Layer::Affine(l) => l.backward(x, upstream),
        }
    }
}

impl From<QnnLayer> for Layer {
    fn from(l: QnnLayer) -> Self {
        Layer::Quantum(l)
    }
}

impl From<AffineLayer> for Layer {
    fn from(l: AffineLayer) -> Self {
        Layer::Affine(l)
    }
}
