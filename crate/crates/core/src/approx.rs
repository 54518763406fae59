//! Circuits whose expectations are exactly monomials on `[0,1]^k`, and a
//! polynomial evaluator built from them plus an affine readout.
//!
//! `R_y(2·arccos √x)|0⟩ = √x|0⟩ + √(1−x)|1⟩`, so the `|0⟩⟨0|` expectation is
//! `x`. Tensoring `m_i` copies per variable and measuring the all-zeros
//! projector gives `Π x_i^{m_i}`.

use crate::error::{config, QdnnError, Result};
use crate::layers::{AffineLayer, QnnLayer};
use crate::pqc::{CircuitTemplate, GateTemplate, ParamRef};
use crate::simcore::{Axis, Observable};

/// Largest total degree accepted; the all-zeros projector is expanded into
/// `2^degree` Pauli strings.
pub const MAX_MONOMIAL_DEGREE: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialSpec {
    exponents: Vec<usize>,
}

impl MonomialSpec {
    pub fn new(exponents: Vec<usize>) -> Result<Self> {
        let degree: usize = exponents.iter().sum();
        if degree == 0 {
            return config("monomial needs at least one positive exponent");
        }
        if degree > MAX_MONOMIAL_DEGREE {
            return config(format!(
                "monomial degree {degree} exceeds the supported {MAX_MONOMIAL_DEGREE}"
            ));
        }
        Ok(Self { exponents })
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    pub fn num_vars(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> usize {
        self.exponents.iter().sum()
    }

    /// Direct `Π x_i^{m_i}`.
    pub fn evaluate_classically(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .map(|(&m, &xi)| xi.powi(m as i32))
            .product()
    }
}

impl std::fmt::Display for MonomialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.exponents.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn monomial_angle(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QdnnError::Domain(format!("monomial input {x} outside [0, 1]")));
    }
    Ok(2.0 * x.sqrt().acos())
}

/// `m_i` consecutive qubits per variable, each `R_y(Input(slot))`.
///
/// Variables with a zero exponent get no gate and no slot, so the template's
/// inputs are the angles of the variables with positive exponents, in order.
pub fn monomial_template(spec: &MonomialSpec) -> Result<CircuitTemplate> {
    let mut gates = Vec::with_capacity(spec.degree());
    for (slot, &m) in spec.exponents.iter().filter(|&&m| m > 0).enumerate() {
        for _ in 0..m {
            gates.push(GateTemplate::Rotation {
                axis: Axis::Y,
                qubit: gates.len(),
                param: ParamRef::Input(slot),
            });
        }
    }
    CircuitTemplate::new(spec.degree(), gates)
}

pub fn monomial_expectation(spec: &MonomialSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.num_vars() {
        return Err(QdnnError::Usage(format!(
            "monomial over {} variables given {} values",
            spec.num_vars(),
            x.len()
        )));
    }
    let mut angles = Vec::with_capacity(x.len());
    for (&m, &xi) in spec.exponents.iter().zip(x) {
        // zero-exponent variables must still lie in the domain
        let angle = monomial_angle(xi)?;
        if m > 0 {
            angles.push(angle);
        }
    }
    let template = monomial_template(spec)?;
    let qubits: Vec<usize> = (0..spec.degree()).collect();
    let h0 = Observable::all_zeros_projector(&qubits)?;
    template.run(&angles, &[])?.expectation(&h0)
}

/// Every exponent vector over `num_vars` variables with total degree in
/// `1..=max_degree`, in lexicographic order.
pub fn exponent_specs(num_vars: usize, max_degree: usize) -> Result<Vec<MonomialSpec>> {
    if num_vars == 0 || max_degree == 0 || max_degree > MAX_MONOMIAL_DEGREE {
        return config(format!(
            "need at least one variable and a degree in 1..={MAX_MONOMIAL_DEGREE}"
        ));
    }
    let mut out = Vec::new();
    let mut current = vec![0usize; num_vars];
    fn fill(v: usize, left: usize, current: &mut Vec<usize>, out: &mut Vec<MonomialSpec>) {
        if v == current.len() {
            if current.iter().any(|&m| m > 0) {
                out.push(MonomialSpec {
                    exponents: current.clone(),
                });
            }
            return;
        }
        for m in 0..=left {
            current[v] = m;
            fill(v + 1, left - m, current, out);
        }
        current[v] = 0;
    }
    fill(0, max_degree, &mut current, &mut out);
    Ok(out)
}

/// `points` evenly spaced values covering `[0, 1]`, endpoints included.
pub fn unit_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points).map(|i| i as f64 / (points - 1) as f64).collect(),
    }
}

/// Largest `|monomial_expectation − Π x_i^{m_i}|` over the tensor grid of
/// `points` values per variable.
pub fn monomial_max_error(spec: &MonomialSpec, points: usize) -> Result<f64> {
    let grid = unit_grid(points);
    let k = spec.num_vars();
    let mut index = vec![0usize; k];
    let mut worst = 0.0f64;
    if grid.is_empty() {
        return Ok(worst);
    }
    loop {
        let x: Vec<f64> = index.iter().map(|&i| grid[i]).collect();
        let err = (monomial_expectation(spec, &x)? - spec.evaluate_classically(&x)).abs();
        worst = worst.max(err);
        let mut v = 0;
        while v < k {
            index[v] += 1;
            if index[v] < grid.len() {
                break;
            }
            index[v] = 0;
            v += 1;
        }
        if v == k {
            return Ok(worst);
        }
    }
}

/// `c_0 + Σ_t c_t · x^{m_t}` evaluated as a quantum layer of monomial readouts
/// followed by a `1×T` affine layer.
#[derive(Debug, Clone)]
pub struct PolynomialNet {
    num_vars: usize,
    monomials: QnnLayer,
    readout: AffineLayer,
}

impl PolynomialNet {
    /// `terms` pairs a coefficient with a monomial over `num_vars` variables.
    pub fn new(num_vars: usize, constant: f64, terms: &[(f64, MonomialSpec)]) -> Result<Self> {
        if terms.is_empty() {
            return config("polynomial needs at least one monomial term");
        }
        if let Some((_, s)) = terms.iter().find(|(_, s)| s.num_vars() != num_vars) {
            return config(format!("monomial {s} does not have {num_vars} variables"));
        }
        // register width per variable: the largest exponent any term needs
        let widths: Vec<usize> = (0..num_vars)
            .map(|v| terms.iter().map(|(_, s)| s.exponents[v]).max().unwrap_or(0))
            .collect();
        let total: usize = widths.iter().sum();
        if total > crate::simcore::MAX_QUBITS {
            return config(format!("polynomial needs {total} qubits"));
        }
        let mut gates = Vec::new();
        let mut first_qubit = Vec::with_capacity(num_vars);
        for (var, &w) in widths.iter().enumerate() {
            first_qubit.push(gates.len());
            for _ in 0..w.max(1) {
                gates.push(GateTemplate::Rotation {
                    axis: Axis::Y,
                    qubit: gates.len(),
                    param: ParamRef::Input(var),
                });
            }
        }
        let num_qubits = gates.len();
        let encoder = CircuitTemplate::new(num_qubits, gates)?;
        let observables = terms
            .iter()
            .map(|(_, s)| {
                let qubits: Vec<usize> = s
                    .exponents
                    .iter()
                    .zip(&first_qubit)
                    .flat_map(|(&m, &q0)| q0..q0 + m)
                    .collect();
                Observable::all_zeros_projector(&qubits)
            })
            .collect::<Result<Vec<_>>>()?;
        let monomials = QnnLayer::with_zero_params(
            encoder,
            CircuitTemplate::empty(num_qubits)?,
            observables,
            false,
        )?;
        let readout = AffineLayer::new(
            1,
            terms.len(),
            terms.iter().map(|(c, _)| *c).collect(),
            vec![constant],
        )?;
        Ok(Self {
            num_vars,
            monomials,
            readout,
        })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(QdnnError::Usage(format!(
                "polynomial over {} variables given {} values",
                self.num_vars,
                x.len()
            )));
        }
        let angles = x.iter().map(|&v| monomial_angle(v)).collect::<Result<Vec<_>>>()?;
        let features = self.monomials.forward(&angles)?;
        Ok(self.readout.forward(&features)?[0])
    }
}
