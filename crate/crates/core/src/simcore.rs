//! Dense state-vector simulation.
//!
//! Basis ordering: qubit 0 is the most significant bit of the basis index, so
//! on `n` qubits qubit `q` corresponds to bit `n - 1 - q`. `|10⟩` (qubit 0 set)
//! is basis index 2.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, usage, Result};

pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        };
        f.write_str(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return config(format!(
                "qubit count {num_qubits} outside 1..={MAX_QUBITS}"
            ));
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; normalization
    /// is left to the caller.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return config(format!("amplitude count {len} is not a power of two >= 2"));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return config(format!("{num_qubits} qubits exceeds {MAX_QUBITS}"));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(num_qubits)?;
        if index >= s.amplitudes.len() {
            return usage(format!("basis index {index} out of range"));
        }
        s.amplitudes[0] = ZERO;
        s.amplitudes[index] = ONE;
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    #[inline]
    fn stride(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return usage(format!(
                "qubit {qubit} out of range for {} qubits",
                self.num_qubits
            ));
        }
        Ok(())
    }

    /// Applies `exp(-i·angle/2·P)` for the Pauli `axis` on `qubit`.
    pub fn rotate(&mut self, axis: Axis, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        if !angle.is_finite() {
            return usage(format!("non-finite rotation angle {angle}"));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let m = match axis {
            Axis::X => [
                [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
            ],
            Axis::Y => [
                [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
            ],
            Axis::Z => [
                [Complex64::new(c, -s), ZERO],
                [ZERO, Complex64::new(c, s)],
            ],
        };
        self.apply_single(qubit, &m);
        Ok(())
    }

    /// Applies a 2×2 matrix (row-major) to `qubit`. The qubit must be valid.
    pub(crate) fn apply_single(&mut self, qubit: usize, m: &[[Complex64; 2]; 2]) {
        let stride = self.stride(qubit);
        let amps = &mut self.amplitudes;
        for block in (0..amps.len()).step_by(2 * stride) {
            for i in block..block + stride {
                let a0 = amps[i];
                let a1 = amps[i + stride];
                amps[i] = m[0][0] * a0 + m[0][1] * a1;
                amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return usage(format!("CNOT control and target are both qubit {control}"));
        }
        let cmask = self.stride(control);
        let tmask = self.stride(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// Exact `⟨self|obs|self⟩`.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        obs.check_qubits(self.num_qubits)?;
        Ok(obs
            .terms
            .iter()
            .map(|t| t.coefficient * t.raw_matrix_element(self, self, self.num_qubits).re)
            .sum())
    }

    /// `obs|self⟩` as a new (unnormalized) vector.
    pub fn apply_observable(&self, obs: &Observable) -> Result<StateVector> {
        obs.check_qubits(self.num_qubits)?;
        let mut out = vec![ZERO; self.amplitudes.len()];
        for term in &obs.terms {
            let (x, z, ny) = term.masks(self.num_qubits);
            let phase = i_pow(ny) * term.coefficient;
            for (b, a) in self.amplitudes.iter().enumerate() {
                let sign = if (b & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                out[b ^ x] += phase * sign * a;
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }
}

/// Matrix element `⟨bra|P|ket⟩` for a single-qubit Pauli. Both states must
/// have the same qubit count and `qubit` must be valid.
pub(crate) fn pauli_element(bra: &StateVector, ket: &StateVector, axis: Axis, qubit: usize) -> Complex64 {
    let stride = ket.stride(qubit);
    let (b, k) = (&bra.amplitudes, &ket.amplitudes);
    let mut acc = ZERO;
    for block in (0..k.len()).step_by(2 * stride) {
        for i in block..block + stride {
            let j = i + stride;
            acc += match axis {
                Axis::X => b[i].conj() * k[j] + b[j].conj() * k[i],
                // Y|0⟩ = i|1⟩, Y|1⟩ = -i|0⟩
                Axis::Y => {
                    Complex64::new(0.0, -1.0) * b[i].conj() * k[j]
                        + Complex64::new(0.0, 1.0) * b[j].conj() * k[i]
                }
                Axis::Z => b[i].conj() * k[i] - b[j].conj() * k[j],
            };
        }
    }
    acc
}

fn i_pow(n: u32) -> Complex64 {
    match n % 4 {
        0 => ONE,
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// A weighted tensor product of Pauli factors; unlisted qubits carry identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    factors: Vec<(usize, Axis)>,
    coefficient: f64,
}

impl PauliString {
    pub fn new(coefficient: f64, factors: impl IntoIterator<Item = (usize, Axis)>) -> Result<Self> {
        if !coefficient.is_finite() {
            return config(format!("non-finite Pauli coefficient {coefficient}"));
        }
        let mut factors: Vec<(usize, Axis)> = factors.into_iter().collect();
        factors.sort_by_key(|f| f.0);
        if factors.windows(2).any(|w| w[0].0 == w[1].0) {
            return config("Pauli string lists a qubit twice");
        }
        Ok(Self {
            factors,
            coefficient,
        })
    }

    /// `coefficient · I`.
    pub fn identity(coefficient: f64) -> Result<Self> {
        Self::new(coefficient, [])
    }

    pub fn single(axis: Axis, qubit: usize) -> Self {
        Self {
            factors: vec![(qubit, axis)],
            coefficient: 1.0,
        }
    }

    pub fn factors(&self) -> &[(usize, Axis)] {
        &self.factors
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.factors.last().map(|f| f.0)
    }

    /// (X-mask, Z-mask, number of Y factors) with `P = i^ny · X^x · Z^z`.
    fn masks(&self, num_qubits: usize) -> (usize, usize, u32) {
        let mut x = 0;
        let mut z = 0;
        let mut ny = 0;
        for &(q, axis) in &self.factors {
            let bit = 1 << (num_qubits - 1 - q);
            match axis {
                Axis::X => x |= bit,
                Axis::Z => z |= bit,
                Axis::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }

    /// `⟨bra|P|ket⟩` without the coefficient.
    fn raw_matrix_element(&self, bra: &StateVector, ket: &StateVector, num_qubits: usize) -> Complex64 {
        let (x, z, ny) = self.masks(num_qubits);
        let (b, k) = (&bra.amplitudes, &ket.amplitudes);
        let mut acc = ZERO;
        if x == 0 {
            for (i, (bi, ki)) in b.iter().zip(k).enumerate() {
                let v = bi.conj() * ki;
                if (i & z).count_ones() % 2 == 0 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
        } else {
            for (i, ki) in k.iter().enumerate() {
                let v = b[i ^ x].conj() * ki;
                if (i & z).count_ones() % 2 == 0 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
        }
        acc * i_pow(ny)
    }
}

/// A real-weighted sum of Pauli strings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Observable {
    terms: Vec<PauliString>,
}

impl Observable {
    pub fn new(terms: Vec<PauliString>) -> Self {
        Self { terms }
    }

    pub fn pauli(axis: Axis, qubit: usize) -> Self {
        Self::new(vec![PauliString::single(axis, qubit)])
    }

    /// `|0⟩⟨0|` on `qubit`, stored as `½I + ½Z`.
    pub fn projector_zero(qubit: usize) -> Self {
        Self::new(vec![
            PauliString {
                factors: vec![],
                coefficient: 0.5,
            },
            PauliString {
                factors: vec![(qubit, Axis::Z)],
                coefficient: 0.5,
            },
        ])
    }

    /// `|1⟩⟨1|` on `qubit`, stored as `½I − ½Z`.
    pub fn projector_one(qubit: usize) -> Self {
        Self::new(vec![
            PauliString {
                factors: vec![],
                coefficient: 0.5,
            },
            PauliString {
                factors: vec![(qubit, Axis::Z)],
                coefficient: -0.5,
            },
        ])
    }

    /// `|0…0⟩⟨0…0|` over `qubits`, expanded into `2^k` Z-strings.
    pub fn all_zeros_projector(qubits: &[usize]) -> Result<Self> {
        let k = qubits.len();
        if k > 16 {
            return config(format!("all-zeros projector over {k} qubits is too large"));
        }
        let coefficient = 0.5f64.powi(k as i32);
        let terms = (0..1usize << k)
            .map(|subset| {
                let factors = qubits
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| subset & (1 << i) != 0)
                    .map(|(_, &q)| (q, Axis::Z));
                PauliString::new(coefficient, factors)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(terms))
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    /// `Σ weights_j · observables_j` as one term list.
    pub fn weighted_sum<'a>(items: impl IntoIterator<Item = (f64, &'a Observable)>) -> Self {
        let mut terms = Vec::new();
        for (w, obs) in items {
            if w == 0.0 {
                continue;
            }
            terms.extend(obs.terms.iter().map(|t| PauliString {
                factors: t.factors.clone(),
                coefficient: t.coefficient * w,
            }));
        }
        Self { terms }
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.terms.iter().filter_map(PauliString::max_qubit).max()
    }

    pub(crate) fn check_qubits(&self, num_qubits: usize) -> Result<()> {
        match self.max_qubit() {
            Some(q) if q >= num_qubits => {
                usage(format!("observable acts on qubit {q} but state has {num_qubits} qubits"))
            }
            _ => Ok(()),
        }
    }
}

pub fn init_zero_state(num_qubits: usize) -> Result<StateVector> {
    StateVector::zero(num_qubits)
}

pub fn apply_rotation(state: &StateVector, axis: Axis, qubit: usize, angle: f64) -> Result<StateVector> {
    let mut out = state.clone();
    out.rotate(axis, qubit, angle)?;
    Ok(out)
}

pub fn apply_cnot(state: &StateVector, control: usize, target: usize) -> Result<StateVector> {
    let mut out = state.clone();
    out.cnot(control, target)?;
    Ok(out)
}

pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    state.expectation(obs)
}
