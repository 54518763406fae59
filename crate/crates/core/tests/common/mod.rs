#![allow(dead_code)]

pub mod dense;

use qdnn::pqc::{CircuitTemplate, GateTemplate, ParamRef};
use qdnn::simcore::{Axis, Observable, PauliString};
use rand::Rng;

pub fn random_axis(rng: &mut impl Rng) -> Axis {
    Axis::ALL[rng.gen_range(0..3)]
}

/// Random circuit over `n` qubits mixing rotations (input, weight and
/// constant angles, with slot reuse) and CNOTs.
pub fn random_template(rng: &mut impl Rng, n: usize, num_gates: usize) -> CircuitTemplate {
    let (mut n_in, mut n_w) = (0usize, 0usize);
    let mut gates = Vec::with_capacity(num_gates);
    for _ in 0..num_gates {
        if n >= 2 && rng.gen_bool(0.25) {
            let control = rng.gen_range(0..n);
            let mut target = rng.gen_range(0..n - 1);
            if target >= control {
                target += 1;
            }
            gates.push(GateTemplate::Cnot { control, target });
            continue;
        }
        let param = match rng.gen_range(0..5) {
            0 | 1 => {
                let slot = if n_in > 0 && rng.gen_bool(0.2) { rng.gen_range(0..n_in) } else { n_in };
                n_in = n_in.max(slot + 1);
                ParamRef::Input(slot)
            }
            2 | 3 => {
                let slot = if n_w > 0 && rng.gen_bool(0.2) { rng.gen_range(0..n_w) } else { n_w };
                n_w = n_w.max(slot + 1);
                ParamRef::Weight(slot)
            }
            _ => ParamRef::Const(rng.gen_range(-3.0..3.0)),
        };
        gates.push(GateTemplate::Rotation {
            axis: random_axis(rng),
            qubit: rng.gen_range(0..n),
            param,
        });
    }
    CircuitTemplate::new(n, gates).expect("generated template is valid")
}

pub fn random_pauli_string(rng: &mut impl Rng, n: usize) -> PauliString {
    let mut factors = Vec::new();
    for q in 0..n {
        if rng.gen_bool(0.5) {
            factors.push((q, random_axis(rng)));
        }
    }
    PauliString::new(rng.gen_range(-2.0..2.0), factors).unwrap()
}

pub fn random_observable(rng: &mut impl Rng, n: usize) -> Observable {
    let terms = rng.gen_range(1..=4);
    Observable::new((0..terms).map(|_| random_pauli_string(rng, n)).collect())
}

pub fn random_angles(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}
