//! Dense state-vector simulation.
//!
//! Basis index `k = sum_q b_q 2^q`, so qubit 0 is the least significant bit.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 30;

// below this size the rayon split costs more than it saves
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    InvalidQubit { qubit: usize, num_qubits: usize },
    #[error("control and target are both qubit {0}")]
    SameQubit(usize),
    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("non-finite rotation angle {0}")]
    NonFiniteAngle(f64),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    /// `(control, target)`
    Cnot(usize, usize),
    /// `(control, target)`; symmetric in its qubits.
    Cz(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn rotation(self, qubit: usize, angle: f64) -> Gate {
        match self {
            Axis::X => Gate::Rx(qubit, angle),
            Axis::Y => Gate::Ry(qubit, angle),
            Axis::Z => Gate::Rz(qubit, angle),
        }
    }
}

impl Gate {
    /// Qubits touched by the gate, target last.
    fn qubits(&self) -> (Option<usize>, usize) {
        match *self {
            Gate::H(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => (None, q),
            Gate::Cnot(c, t) | Gate::Cz(c, t) => (Some(c), t),
        }
    }

    fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => Some(a),
            _ => None,
        }
    }

    /// 2x2 matrix `[[m00, m01], [m10, m11]]` of a single-qubit gate.
    pub fn matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            Gate::H(_) => {
                let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                Some([[s, s], [s, -s]])
            }
            Gate::Rx(_, a) => {
                let (s, c) = (a / 2.0).sin_cos();
                let c = Complex64::new(c, 0.0);
                let m = Complex64::new(0.0, -s);
                Some([[c, m], [m, c]])
            }
            Gate::Ry(_, a) => {
                let (s, c) = (a / 2.0).sin_cos();
                Some([[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]])
            }
            Gate::Rz(_, a) => Some([
                [Complex64::from_polar(1.0, -a / 2.0), zero],
                [zero, Complex64::from_polar(1.0, a / 2.0)],
            ]),
            Gate::Cnot(..) | Gate::Cz(..) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(SimError::QubitCount(num_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amplitudes })
    }

    /// Wraps raw amplitudes; the length must be a power of two. The caller is
    /// responsible for normalization.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(SimError::QubitCount(0));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(SimError::QubitCount(num_qubits));
        }
        Ok(Self { num_qubits, amplitudes })
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

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(SimError::InvalidQubit {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        let (control, target) = gate.qubits();
        self.check_qubit(target)?;
        if let Some(c) = control {
            self.check_qubit(c)?;
            if c == target {
                return Err(SimError::SameQubit(c));
            }
        }
        if let Some(a) = gate.angle() {
            if !a.is_finite() {
                return Err(SimError::NonFiniteAngle(a));
            }
        }
        match *gate {
            Gate::Cnot(c, t) => self.apply_cnot(c, t),
            Gate::Cz(c, t) => self.apply_cz(c, t),
            _ => self.apply_single(target, gate.matrix().expect("single-qubit gate")),
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    fn apply_single(&mut self, target: usize, m: [[Complex64; 2]; 2]) {
        let stride = 1 << target;
        let kernel = |block: &mut [Complex64]| {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m[0][0] * x + m[0][1] * y;
                *b = m[1][0] * x + m[1][1] * y;
            }
        };
        if self.amplitudes.len() >= PAR_THRESHOLD {
            self.amplitudes.par_chunks_mut(2 * stride).for_each(kernel);
        } else {
            self.amplitudes.chunks_mut(2 * stride).for_each(kernel);
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cbit, tbit) = (1usize << control, 1usize << target);
        // swap each pair (k, k ^ tbit) once, from the member with the target bit clear
        let kernel = |block: &mut [Complex64], base: usize| {
            let stride = tbit;
            let (lo, hi) = block.split_at_mut(stride);
            for (i, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (base + i) & cbit != 0 {
                    std::mem::swap(a, b);
                }
            }
        };
        let width = 2 * tbit;
        if self.amplitudes.len() >= PAR_THRESHOLD {
            self.amplitudes
                .par_chunks_mut(width)
                .enumerate()
                .for_each(|(j, block)| kernel(block, j * width));
        } else {
            self.amplitudes
                .chunks_mut(width)
                .enumerate()
                .for_each(|(j, block)| kernel(block, j * width));
        }
    }

    fn apply_cz(&mut self, control: usize, target: usize) {
        let mask = (1usize << control) | (1usize << target);
        let flip = |(k, a): (usize, &mut Complex64)| {
            if k & mask == mask {
                *a = -*a;
            }
        };
        if self.amplitudes.len() >= PAR_THRESHOLD {
            self.amplitudes.par_iter_mut().enumerate().for_each(flip);
        } else {
            self.amplitudes.iter_mut().enumerate().for_each(flip);
        }
    }

    /// `|a_k|^2` for every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<Z_q>`, positive weight on basis states with bit `q` clear.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| if k & bit == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }
}

/// Layered hardware-efficient circuit: an optional Hadamard wall, then per
/// layer one rotation on every qubit followed by the entangling pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct Ansatz {
    pub num_qubits: usize,
    pub layers: usize,
    /// `(control, target)` CNOTs applied after each rotation layer.
    pub entangler: Vec<(usize, usize)>,
    pub axis: Axis,
    pub hadamard_wall: bool,
}

impl Ansatz {
    /// RY rotations with a CNOT chain `q -> q+1` and a leading Hadamard wall.
    pub fn chain(num_qubits: usize, layers: usize) -> Self {
        Self {
            num_qubits,
            layers,
            entangler: (0..num_qubits.saturating_sub(1)).map(|q| (q, q + 1)).collect(),
            axis: Axis::Y,
            hadamard_wall: true,
        }
    }

    /// Parameter `layer * num_qubits + q` drives the rotation on qubit `q`.
    pub fn num_params(&self) -> usize {
        self.num_qubits * self.layers
    }

    pub fn gates(&self, params: &[f64]) -> Result<Vec<Gate>> {
        if params.len() != self.num_params() {
            return Err(SimError::ParamCount {
                expected: self.num_params(),
                got: params.len(),
            });
        }
        let n = self.num_qubits;
        let mut gates = Vec::with_capacity(n + self.layers * (n + self.entangler.len()));
        if self.hadamard_wall {
            gates.extend((0..n).map(Gate::H));
        }
        for layer in params.chunks(n.max(1)) {
            gates.extend(layer.iter().enumerate().map(|(q, a)| self.axis.rotation(q, *a)));
            gates.extend(self.entangler.iter().map(|&(c, t)| Gate::Cnot(c, t)));
        }
        Ok(gates)
    }

    pub fn run(&self, params: &[f64]) -> Result<StateVector> {
        let gates = self.gates(params)?;
        let mut state = StateVector::zero(self.num_qubits)?;
        state.apply_all(&gates)?;
        Ok(state)
    }
}
