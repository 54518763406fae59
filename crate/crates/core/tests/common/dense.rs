//! Reference evaluation with explicit `2^n × 2^n` matrices built by
//! Kronecker products, qubit 0 as the leftmost factor.

use num_complex::Complex64;
use qdnn::pqc::{CircuitTemplate, GateTemplate, ParamRef};
use qdnn::simcore::{Axis, Observable, PauliString};

pub type Matrix = Vec<Vec<Complex64>>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|r| (0..dim).map(|c| if r == c { ONE } else { ZERO }).collect())
        .collect()
}

pub fn pauli(axis: Axis) -> Matrix {
    match axis {
        Axis::X => vec![vec![ZERO, ONE], vec![ONE, ZERO]],
        Axis::Y => vec![vec![ZERO, -I], vec![I, ZERO]],
        Axis::Z => vec![vec![ONE, ZERO], vec![ZERO, -ONE]],
    }
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![ZERO; ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn scale(a: &Matrix, s: Complex64) -> Matrix {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![ZERO; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == ZERO {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn apply(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// `ops[q]` on qubit q, identity elsewhere.
pub fn tensor(n: usize, ops: &[(usize, Matrix)]) -> Matrix {
    let mut out = vec![vec![ONE]];
    for q in 0..n {
        let factor = ops
            .iter()
            .find(|(qq, _)| *qq == q)
            .map_or_else(|| identity(2), |(_, m)| m.clone());
        out = kron(&out, &factor);
    }
    out
}

/// `exp(−iθ/2·P) = cos(θ/2)·I − i·sin(θ/2)·P`.
pub fn rotation(axis: Axis, angle: f64) -> Matrix {
    let (s, c) = (angle / 2.0).sin_cos();
    add(&scale(&identity(2), c.into()), &scale(&pauli(axis), -I * s))
}

pub fn cnot(n: usize, control: usize, target: usize) -> Matrix {
    let p0 = vec![vec![ONE, ZERO], vec![ZERO, ZERO]];
    let p1 = vec![vec![ZERO, ZERO], vec![ZERO, ONE]];
    add(
        &tensor(n, &[(control, p0)]),
        &tensor(n, &[(control, p1), (target, pauli(Axis::X))]),
    )
}

pub fn pauli_string(n: usize, p: &PauliString) -> Matrix {
    let ops: Vec<(usize, Matrix)> = p.factors().iter().map(|&(q, a)| (q, pauli(a))).collect();
    scale(&tensor(n, &ops), p.coefficient().into())
}

pub fn observable(n: usize, obs: &Observable) -> Matrix {
    let dim = 1 << n;
    obs.terms()
        .iter()
        .fold(vec![vec![ZERO; dim]; dim], |acc, t| add(&acc, &pauli_string(n, t)))
}

pub fn resolve(param: ParamRef, inputs: &[f64], weights: &[f64]) -> f64 {
    match param {
        ParamRef::Input(i) => inputs[i],
        ParamRef::Weight(i) => weights[i],
        ParamRef::Const(c) => c,
    }
}

pub fn circuit_unitary(t: &CircuitTemplate, inputs: &[f64], weights: &[f64]) -> Matrix {
    let n = t.num_qubits();
    t.gates().iter().fold(identity(1 << n), |u, g| {
        let gate = match *g {
            GateTemplate::Rotation { axis, qubit, param } => {
                tensor(n, &[(qubit, rotation(axis, resolve(param, inputs, weights)))])
            }
            GateTemplate::Cnot { control, target } => cnot(n, control, target),
        };
        matmul(&gate, &u)
    })
}

pub fn final_state(t: &CircuitTemplate, inputs: &[f64], weights: &[f64]) -> Vec<Complex64> {
    let u = circuit_unitary(t, inputs, weights);
    u.iter().map(|row| row[0]).collect()
}

pub fn expectation(state: &[Complex64], h: &Matrix) -> f64 {
    let hv = apply(h, state);
    state.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
}
