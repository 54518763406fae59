//! Circuit templates with symbolic angle slots and the layered ansatz builders.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{config, usage, Result};
use crate::simcore::{Axis, StateVector};

thread_local! {
    static PREPARATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of circuit executions (state preparations) performed on the
/// current thread so far.
pub fn state_preparations() -> u64 {
    PREPARATIONS.with(Cell::get)
}

fn count_preparation() {
    PREPARATIONS.with(|c| c.set(c.get() + 1));
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamRef {
    Input(usize),
    Weight(usize),
    Const(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateTemplate {
    Rotation {
        axis: Axis,
        qubit: usize,
        param: ParamRef,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

/// Which family of slots an angle is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    Input,
    Weight,
}

/// An ordered gate list with `Input` and `Weight` angle slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTemplate", into = "RawTemplate")]
pub struct CircuitTemplate {
    num_qubits: usize,
    gates: Vec<GateTemplate>,
    num_input_slots: usize,
    num_weight_slots: usize,
}

#[derive(Serialize, Deserialize)]
struct RawTemplate {
    num_qubits: usize,
    gates: Vec<GateTemplate>,
}

impl TryFrom<RawTemplate> for CircuitTemplate {
    type Error = crate::QdnnError;

    fn try_from(raw: RawTemplate) -> Result<Self> {
        CircuitTemplate::new(raw.num_qubits, raw.gates)
    }
}

impl From<CircuitTemplate> for RawTemplate {
    fn from(t: CircuitTemplate) -> Self {
        RawTemplate {
            num_qubits: t.num_qubits,
            gates: t.gates,
        }
    }
}

fn dense_slot_count(used: &[usize], what: &str) -> Result<usize> {
    let n = used.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; n];
    for &s in used {
        seen[s] = true;
    }
    if let Some(gap) = seen.iter().position(|s| !s) {
        return config(format!("{what} slot {gap} is never used (slots must be dense)"));
    }
    Ok(n)
}

impl CircuitTemplate {
    /// Validates qubit indices and slot density, inferring the slot counts.
    pub fn new(num_qubits: usize, gates: Vec<GateTemplate>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > crate::simcore::MAX_QUBITS {
            return config(format!("qubit count {num_qubits} out of range"));
        }
        let mut inputs = Vec::new();
        let mut weights = Vec::new();
        for g in &gates {
            match *g {
                GateTemplate::Rotation { qubit, param, .. } => {
                    if qubit >= num_qubits {
                        return config(format!("rotation on qubit {qubit} of {num_qubits}"));
                    }
                    match param {
                        ParamRef::Input(s) => inputs.push(s),
                        ParamRef::Weight(s) => weights.push(s),
                        ParamRef::Const(v) if !v.is_finite() => {
                            return config(format!("non-finite constant angle {v}"));
                        }
                        ParamRef::Const(_) => {}
                    }
                }
                GateTemplate::Cnot { control, target } => {
                    if control >= num_qubits || target >= num_qubits || control == target {
                        return config(format!("invalid CNOT({control}, {target}) on {num_qubits} qubits"));
                    }
                }
            }
        }
        Ok(Self {
            num_qubits,
            num_input_slots: dense_slot_count(&inputs, "input")?,
            num_weight_slots: dense_slot_count(&weights, "weight")?,
            gates,
        })
    }

    /// A template with no gates.
    pub fn empty(num_qubits: usize) -> Result<Self> {
        Self::new(num_qubits, Vec::new())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[GateTemplate] {
        &self.gates
    }

    pub fn num_input_slots(&self) -> usize {
        self.num_input_slots
    }

    pub fn num_weight_slots(&self) -> usize {
        self.num_weight_slots
    }

    pub fn num_slots(&self, kind: SlotKind) -> usize {
        match kind {
            SlotKind::Input => self.num_input_slots,
            SlotKind::Weight => self.num_weight_slots,
        }
    }

    pub fn count_const(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, GateTemplate::Rotation { param: ParamRef::Const(_), .. }))
            .count()
    }

    /// `self` followed by `next`, keeping both slot families. Used to fuse an
    /// encoder (inputs only) with a transformation (weights only).
    pub fn then(&self, next: &CircuitTemplate) -> Result<Self> {
        if self.num_qubits != next.num_qubits {
            return config(format!(
                "cannot chain templates on {} and {} qubits",
                self.num_qubits, next.num_qubits
            ));
        }
        let in_off = self.num_input_slots;
        let w_off = self.num_weight_slots;
        let shifted = next.gates.iter().map(|g| match *g {
            GateTemplate::Rotation { axis, qubit, param } => GateTemplate::Rotation {
                axis,
                qubit,
                param: match param {
                    ParamRef::Input(s) => ParamRef::Input(s + in_off),
                    ParamRef::Weight(s) => ParamRef::Weight(s + w_off),
                    c => c,
                },
            },
            c => c,
        });
        let gates = self.gates.iter().copied().chain(shifted).collect();
        Self::new(self.num_qubits, gates)
    }

    pub(crate) fn check_lengths(&self, inputs: &[f64], weights: &[f64]) -> Result<()> {
        if inputs.len() != self.num_input_slots {
            return usage(format!(
                "template expects {} inputs, got {}",
                self.num_input_slots,
                inputs.len()
            ));
        }
        if weights.len() != self.num_weight_slots {
            return usage(format!(
                "template expects {} weights, got {}",
                self.num_weight_slots,
                weights.len()
            ));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn resolve(param: ParamRef, inputs: &[f64], weights: &[f64]) -> f64 {
        match param {
            ParamRef::Input(s) => inputs[s],
            ParamRef::Weight(s) => weights[s],
            ParamRef::Const(v) => v,
        }
    }

    /// Applies every gate to `|0…0⟩` with angles resolved from the slots.
    pub fn run(&self, inputs: &[f64], weights: &[f64]) -> Result<StateVector> {
        self.check_lengths(inputs, weights)?;
        let mut state = StateVector::zero(self.num_qubits)?;
        self.apply_to(&mut state, inputs, weights)?;
        count_preparation();
        Ok(state)
    }

    /// [`run`](Self::run) with the angle of gate `gate` moved by `delta`.
    pub(crate) fn run_shifted(&self, inputs: &[f64], weights: &[f64], gate: usize, delta: f64) -> Result<StateVector> {
        self.check_lengths(inputs, weights)?;
        let mut state = StateVector::zero(self.num_qubits)?;
        for (i, g) in self.gates.iter().enumerate() {
            match *g {
                GateTemplate::Rotation { axis, qubit, param } => {
                    let shift = if i == gate { delta } else { 0.0 };
                    state.rotate(axis, qubit, Self::resolve(param, inputs, weights) + shift)?
                }
                GateTemplate::Cnot { control, target } => state.cnot(control, target)?,
            }
        }
        count_preparation();
        Ok(state)
    }

    /// Indices of the rotation gates reading `kind[slot]`.
    pub fn bindings(&self, kind: SlotKind, slot: usize) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| match (kind, g) {
                (SlotKind::Input, GateTemplate::Rotation { param: ParamRef::Input(s), .. }) => *s == slot,
                (SlotKind::Weight, GateTemplate::Rotation { param: ParamRef::Weight(s), .. }) => *s == slot,
                _ => false,
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub(crate) fn apply_to(&self, state: &mut StateVector, inputs: &[f64], weights: &[f64]) -> Result<()> {
        for g in &self.gates {
            match *g {
                GateTemplate::Rotation { axis, qubit, param } => {
                    state.rotate(axis, qubit, Self::resolve(param, inputs, weights))?
                }
                GateTemplate::Cnot { control, target } => state.cnot(control, target)?,
            }
        }
        Ok(())
    }
}

pub fn run(tmpl: &CircuitTemplate, inputs: &[f64], weights: &[f64]) -> Result<StateVector> {
    tmpl.run(inputs, weights)
}

/// Linear CNOT chain `CNOT(0,1), CNOT(1,2), …, CNOT(n−2, n−1)`.
pub fn build_entangler(num_qubits: usize) -> Result<Vec<GateTemplate>> {
    if num_qubits < 2 {
        return config(format!("entangler needs at least 2 qubits, got {num_qubits}"));
    }
    Ok((0..num_qubits - 1)
        .map(|q| GateTemplate::Cnot {
            control: q,
            target: q + 1,
        })
        .collect())
}

fn rotation_column(
    num_qubits: usize,
    axis: Axis,
    gates: &mut Vec<GateTemplate>,
    mut param: impl FnMut() -> ParamRef,
) {
    for qubit in 0..num_qubits {
        gates.push(GateTemplate::Rotation {
            axis,
            qubit,
            param: param(),
        });
    }
}

/// Encoder ansatz: `depth_e` blocks of rotation columns (one rotation per
/// qubit, axis given per column) each followed by an entangler.
///
/// Input slots are handed out in circuit order, qubit-fastest within a column.
/// Positions past `active_slots` become `Const(0)`, so padding always lands on
/// the trailing columns.
pub fn build_encoder(
    num_qubits: usize,
    depth_e: usize,
    column_axes: &[Axis],
    active_slots: usize,
) -> Result<CircuitTemplate> {
    if depth_e == 0 || column_axes.is_empty() {
        return config("encoder needs at least one block and one column");
    }
    let capacity = num_qubits * depth_e * column_axes.len();
    if capacity < active_slots {
        return config(format!(
            "encoder capacity {capacity} is below the {active_slots} requested input slots"
        ));
    }
    let entangler = build_entangler(num_qubits)?;
    let mut next = 0usize;
    let mut slot = || {
        let p = if next < active_slots {
            ParamRef::Input(next)
        } else {
            ParamRef::Const(0.0)
        };
        next += 1;
        p
    };
    let mut gates = Vec::with_capacity(capacity + depth_e * entangler.len());
    for _ in 0..depth_e {
        for &axis in column_axes {
            rotation_column(num_qubits, axis, &mut gates, &mut slot);
        }
        gates.extend_from_slice(&entangler);
    }
    CircuitTemplate::new(num_qubits, gates)
}

/// Transformation ansatz: an `[X, Z]` rotation pair per qubit, then `depth_t`
/// blocks of entangler plus `[Z, X, Z]` columns. Every angle is a weight;
/// the total is `num_qubits · (2 + 3·depth_t)`.
pub fn build_transformation(num_qubits: usize, depth_t: usize) -> Result<CircuitTemplate> {
    if depth_t == 0 {
        return config("transformation depth must be at least 1");
    }
    let entangler = build_entangler(num_qubits)?;
    let mut next = 0usize;
    let mut slot = || {
        next += 1;
        ParamRef::Weight(next - 1)
    };
    let mut gates = Vec::new();
    for axis in [Axis::X, Axis::Z] {
        rotation_column(num_qubits, axis, &mut gates, &mut slot);
    }
    for _ in 0..depth_t {
        gates.extend_from_slice(&entangler);
        for axis in [Axis::Z, Axis::X, Axis::Z] {
            rotation_column(num_qubits, axis, &mut gates, &mut slot);
        }
    }
    CircuitTemplate::new(num_qubits, gates)
}
