//! Gradients of circuit expectations with respect to input and weight slots.
//!
//! Three engines: the parameter-shift rule (exact for `exp(-iθP/2)` gates
//! whose slot binds a single gate), central finite differences (test oracle),
//! and an adjoint sweep that reuses one forward state.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::pqc::{CircuitTemplate, GateTemplate, ParamRef, SlotKind};
use crate::simcore::{pauli_element, Observable};

/// An expectation `⟨0|U†(inputs, weights) H U(inputs, weights)|0⟩` to differentiate.
#[derive(Debug, Clone, Copy)]
pub struct ExpectationJob<'a> {
    pub template: &'a CircuitTemplate,
    pub observable: &'a Observable,
    pub inputs: &'a [f64],
    pub weights: &'a [f64],
}

impl<'a> ExpectationJob<'a> {
    pub fn new(
        template: &'a CircuitTemplate,
        observable: &'a Observable,
        inputs: &'a [f64],
        weights: &'a [f64],
    ) -> Result<Self> {
        template.check_lengths(inputs, weights)?;
        observable.check_qubits(template.num_qubits())?;
        Ok(Self {
            template,
            observable,
            inputs,
            weights,
        })
    }

    pub fn value(&self) -> Result<f64> {
        self.template
            .run(self.inputs, self.weights)?
            .expectation(self.observable)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Gradient {
    pub inputs: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Gradient {
    pub fn slots(&self, kind: SlotKind) -> &[f64] {
        match kind {
            SlotKind::Input => &self.inputs,
            SlotKind::Weight => &self.weights,
        }
    }

    pub fn max_abs_diff(&self, other: &Gradient) -> f64 {
        self.inputs
            .iter()
            .zip(&other.inputs)
            .chain(self.weights.iter().zip(&other.weights))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Selects the gradient engine used for backpropagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GradientEngine {
    Shift,
    #[default]
    Adjoint,
}

impl std::str::FromStr for GradientEngine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "shift" => Ok(Self::Shift),
            "adjoint" => Ok(Self::Adjoint),
            other => Err(format!("unknown gradient engine {other:?} (expected shift|adjoint)")),
        }
    }
}

impl std::fmt::Display for GradientEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Shift => "shift",
            Self::Adjoint => "adjoint",
        })
    }
}

fn check_slot(job: &ExpectationJob<'_>, kind: SlotKind, slot: usize) -> Result<()> {
    let n = job.template.num_slots(kind);
    if slot >= n {
        return usage(format!("{kind:?} slot {slot} out of range (have {n})"));
    }
    Ok(())
}

/// Evaluates every observable on the state prepared with `kind[slot]` moved by `delta`.
fn shifted_values(
    template: &CircuitTemplate,
    observables: &[Observable],
    inputs: &[f64],
    weights: &[f64],
    kind: SlotKind,
    slot: usize,
    delta: f64,
) -> Result<Vec<f64>> {
    let mut inputs = inputs.to_vec();
    let mut weights = weights.to_vec();
    match kind {
        SlotKind::Input => inputs[slot] += delta,
        SlotKind::Weight => weights[slot] += delta,
    }
    let state = template.run(&inputs, &weights)?;
    observables.iter().map(|o| state.expectation(o)).collect()
}

/// `Σ_g ½[⟨H⟩(θ_g + π/2) − ⟨H⟩(θ_g − π/2)]` over the gates `g` bound to
/// the slot, for every observable. Two preparations per bound gate.
fn shift_column(
    template: &CircuitTemplate,
    observables: &[Observable],
    inputs: &[f64],
    weights: &[f64],
    kind: SlotKind,
    slot: usize,
) -> Result<Vec<f64>> {
    let mut column = vec![0.0; observables.len()];
    for gate in template.bindings(kind, slot) {
        let plus = template.run_shifted(inputs, weights, gate, FRAC_PI_2)?;
        let minus = template.run_shifted(inputs, weights, gate, -FRAC_PI_2)?;
        for (c, o) in column.iter_mut().zip(observables) {
            *c += 0.5 * (plus.expectation(o)? - minus.expectation(o)?);
        }
    }
    Ok(column)
}

/// Parameter-shift derivative for one slot.
pub fn shift_gradient_single(job: &ExpectationJob<'_>, kind: SlotKind, slot: usize) -> Result<f64> {
    check_slot(job, kind, slot)?;
    let obs = std::slice::from_ref(job.observable);
    Ok(shift_column(job.template, obs, job.inputs, job.weights, kind, slot)?[0])
}

/// Parameter-shift derivatives of several observables at once.
///
/// Returns `(d_inputs, d_weights)` indexed `[slot][observable]`; each bound
/// gate costs two state preparations regardless of the observable count.
pub fn shift_jacobian(
    template: &CircuitTemplate,
    observables: &[Observable],
    inputs: &[f64],
    weights: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    template.check_lengths(inputs, weights)?;
    let d_in = (0..template.num_input_slots())
        .map(|s| shift_column(template, observables, inputs, weights, SlotKind::Input, s))
        .collect::<Result<_>>()?;
    let d_w = (0..template.num_weight_slots())
        .map(|s| shift_column(template, observables, inputs, weights, SlotKind::Weight, s))
        .collect::<Result<_>>()?;
    Ok((d_in, d_w))
}

/// Full shift-rule gradient: two circuit executions per slot-bound gate,
/// i.e. `2·(inputs + weights)` when every slot binds a single gate.
pub fn shift_gradient_all(job: &ExpectationJob<'_>) -> Result<Gradient> {
    let (d_in, d_w) = shift_jacobian(
        job.template,
        std::slice::from_ref(job.observable),
        job.inputs,
        job.weights,
    )?;
    Ok(Gradient {
        inputs: d_in.into_iter().map(|c| c[0]).collect(),
        weights: d_w.into_iter().map(|c| c[0]).collect(),
    })
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central differences `[f(s+h) − f(s−h)] / 2h` per slot, `h ∈ [1e-8, 1e-2]`.
pub fn finite_difference_gradient(job: &ExpectationJob<'_>, h: f64) -> Result<Gradient> {
    if !(1e-8..=1e-2).contains(&h) {
        return usage(format!("finite-difference step {h} outside [1e-8, 1e-2]"));
    }
    let obs = std::slice::from_ref(job.observable);
    let diff = |kind, slot| -> Result<f64> {
        let p = shifted_values(job.template, obs, job.inputs, job.weights, kind, slot, h)?;
        let m = shifted_values(job.template, obs, job.inputs, job.weights, kind, slot, -h)?;
        Ok((p[0] - m[0]) / (2.0 * h))
    };
    Ok(Gradient {
        inputs: (0..job.inputs.len())
            .map(|s| diff(SlotKind::Input, s))
            .collect::<Result<_>>()?,
        weights: (0..job.weights.len())
            .map(|s| diff(SlotKind::Weight, s))
            .collect::<Result<_>>()?,
    })
}

/// Exact gradient from one forward preparation and a reverse sweep.
///
/// With `λ = H|ψ⟩` carried backwards alongside `|ψ⟩`, the derivative for a
/// rotation `exp(-iθP/2)` is `Im⟨λ|P|ψ⟩` evaluated just after that gate.
/// Slots bound to several gates accumulate each gate's contribution.
pub fn adjoint_gradient(job: &ExpectationJob<'_>) -> Result<Gradient> {
    let tmpl = job.template;
    let mut psi = tmpl.run(job.inputs, job.weights)?;
    let mut lambda = psi.apply_observable(job.observable)?;
    let mut grad = Gradient {
        inputs: vec![0.0; tmpl.num_input_slots()],
        weights: vec![0.0; tmpl.num_weight_slots()],
    };
    for gate in tmpl.gates().iter().rev() {
        match *gate {
            GateTemplate::Rotation { axis, qubit, param } => {
                let d = pauli_element(&lambda, &psi, axis, qubit).im;
                match param {
                    ParamRef::Input(s) => grad.inputs[s] += d,
                    ParamRef::Weight(s) => grad.weights[s] += d,
                    ParamRef::Const(_) => {}
                }
                let angle = CircuitTemplate::resolve(param, job.inputs, job.weights);
                psi.rotate(axis, qubit, -angle)?;
                lambda.rotate(axis, qubit, -angle)?;
            }
            GateTemplate::Cnot { control, target } => {
                psi.cnot(control, target)?;
                lambda.cnot(control, target)?;
            }
        }
    }
    Ok(grad)
}

pub fn gradient_with(engine: GradientEngine, job: &ExpectationJob<'_>) -> Result<Gradient> {
    match engine {
        GradientEngine::Shift => shift_gradient_all(job),
        GradientEngine::Adjoint => adjoint_gradient(job),
    }
}
