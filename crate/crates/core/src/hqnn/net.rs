//! Dense layers, the 4-qubit variational layer and their composition.
//!
//! Flat parameter layout: quantum angles first, then for every dense layer
//! its row-major weights followed by its bias.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HqnnError, Result};
use crate::statevector::{Axis, Gate, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Bce,
    Mse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Option<Vec<f64>>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Weights and bias uniform in `[-1/sqrt(inputs), 1/sqrt(inputs)]`.
    pub fn new(inputs: usize, outputs: usize, bias: bool, activation: Activation, rng: &mut impl Rng) -> Self {
        let a = 1.0 / (inputs as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-a..=a)).collect();
        let bias = bias.then(|| (0..outputs).map(|_| rng.random_range(-a..=a)).collect());
        Self {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        }
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.as_ref().map_or(0, Vec::len)
    }

    fn preactivation(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                let b = self.bias.as_ref().map_or(0.0, |b| b[o]);
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        let bias_ok = self.bias.as_ref().is_none_or(|b| b.len() == self.outputs);
        if self.weights.len() != self.inputs * self.outputs || !bias_ok {
            return Err(HqnnError::InvalidConfig(format!(
                "dense layer {}x{} has {} weights",
                self.outputs,
                self.inputs,
                self.weights.len()
            )));
        }
        if self.weights.iter().chain(self.bias.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(HqnnError::InvalidConfig("non-finite dense parameter".into()));
        }
        Ok(())
    }
}

/// Feature `feature` enters as a rotation by `pi * x[feature]` about `axis`
/// on `qubit`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub feature: usize,
    pub qubit: usize,
    pub axis: Axis,
}

/// Encoding rotations, one RY per qubit, then the entangler; outputs are the
/// Z expectations of the readout qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumLayer {
    pub num_qubits: usize,
    pub encoding: Vec<Encoding>,
    pub theta: Vec<f64>,
    /// `(control, target)` CNOTs in order.
    pub entangler: Vec<(usize, usize)>,
    pub readout: Vec<usize>,
}

impl QuantumLayer {
    /// Four qubits with a CNOT ring 0->1->2->3->0 and angles uniform in
    /// `[0, 2pi)`.
    pub fn ring4(encoding: Vec<Encoding>, readout: Vec<usize>, rng: &mut impl Rng) -> Self {
        Self {
            num_qubits: 4,
            encoding,
            theta: (0..4).map(|_| rng.random_range(0.0..TAU)).collect(),
            entangler: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
            readout,
        }
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    fn gates(&self, x: &[f64], theta: &[f64]) -> Vec<Gate> {
        let mut gates: Vec<Gate> = self.encoding.iter().map(|e| e.axis.rotation(e.qubit, PI * x[e.feature])).collect();
        gates.extend(theta.iter().enumerate().map(|(q, t)| Gate::Ry(q, *t)));
        gates.extend(self.entangler.iter().map(|&(c, t)| Gate::Cnot(c, t)));
        gates
    }

    fn eval(&self, x: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let mut state = StateVector::zero(self.num_qubits)?;
        state.apply_all(&self.gates(x, theta))?;
        Ok(self.readout.iter().map(|&q| state.expectation_z(q)).collect::<std::result::Result<_, _>>()?)
    }

    /// Readout expectations for input `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval(x, &self.theta)
    }

    /// `jac[q][k] = d<Z_readout[k]>/d theta_q` by the parameter-shift rule.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut shifted = self.theta.clone();
        (0..self.theta.len())
            .map(|q| {
                shifted[q] = self.theta[q] + FRAC_PI_2;
                let up = self.eval(x, &shifted)?;
                shifted[q] = self.theta[q] - FRAC_PI_2;
                let down = self.eval(x, &shifted)?;
                shifted[q] = self.theta[q];
                Ok(up.iter().zip(&down).map(|(u, d)| (u - d) / 2.0).collect())
            })
            .collect()
    }

    fn check(&self, input_dim: usize) -> Result<()> {
        let n = self.num_qubits;
        let bad_qubit = self.encoding.iter().any(|e| e.qubit >= n)
            || self.entangler.iter().any(|&(c, t)| c >= n || t >= n || c == t)
            || self.readout.iter().any(|&q| q >= n);
        if bad_qubit || self.theta.len() != n || self.readout.is_empty() {
            return Err(HqnnError::InvalidConfig("malformed quantum layer".into()));
        }
        if let Some(e) = self.encoding.iter().find(|e| e.feature >= input_dim) {
            return Err(HqnnError::InvalidConfig(format!(
                "encoding reads feature {} of a {input_dim}-feature input",
                e.feature
            )));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(HqnnError::InvalidConfig("non-finite quantum angle".into()));
        }
        Ok(())
    }
}

/// Optional quantum layer followed by dense layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub input_dim: usize,
    pub quantum: Option<QuantumLayer>,
    pub dense: Vec<DenseLayer>,
}

/// Intermediate values of one forward pass.
struct Trace {
    /// Input to every dense layer.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl Network {
    pub fn new(input_dim: usize, quantum: Option<QuantumLayer>, dense: Vec<DenseLayer>) -> Result<Self> {
        let net = Self {
            input_dim,
            quantum,
            dense,
        };
        net.validate()?;
        Ok(net)
    }

    /// 2 -> 40 (bias, ReLU) -> 1 (bias, sigmoid): 161 parameters.
    pub fn classical_classifier(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = vec![
            DenseLayer::new(2, 40, true, Activation::Relu, &mut rng),
            DenseLayer::new(40, 1, true, Activation::Sigmoid, &mut rng),
        ];
        Self::new(2, None, dense).expect("consistent sizes")
    }

    /// Features on qubits 0 and 2, readout of qubits 0 and 1, then
    /// 2 -> 40 (no bias, ReLU) -> 1 (bias, sigmoid): 125 parameters.
    pub fn hybrid_classifier(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = QuantumLayer::ring4(features_on_0_and_2(), vec![0, 1], &mut rng);
        let dense = vec![
            DenseLayer::new(2, 40, false, Activation::Relu, &mut rng),
            DenseLayer::new(40, 1, true, Activation::Sigmoid, &mut rng),
        ];
        Self::new(2, Some(q), dense).expect("consistent sizes")
    }

    /// 2 -> 4 -> 8 -> 1 with biases and ReLU between layers.
    pub fn classical_regressor(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = vec![
            DenseLayer::new(2, 4, true, Activation::Relu, &mut rng),
            DenseLayer::new(4, 8, true, Activation::Relu, &mut rng),
            DenseLayer::new(8, 1, true, Activation::Identity, &mut rng),
        ];
        Self::new(2, None, dense).expect("consistent sizes")
    }

    /// The first dense layer of [`Network::classical_regressor`] replaced by
    /// a quantum layer reading out all four qubits.
    pub fn hybrid_regressor(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = QuantumLayer::ring4(features_on_0_and_2(), vec![0, 1, 2, 3], &mut rng);
        let dense = vec![
            DenseLayer::new(4, 8, true, Activation::Relu, &mut rng),
            DenseLayer::new(8, 1, true, Activation::Identity, &mut rng),
        ];
        Self::new(2, Some(q), dense).expect("consistent sizes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut width = self.input_dim;
        if let Some(q) = &self.quantum {
            q.check(self.input_dim)?;
            width = q.readout.len();
        }
        if self.dense.is_empty() {
            return Err(HqnnError::InvalidConfig("network needs at least one dense layer".into()));
        }
        for layer in &self.dense {
            layer.check()?;
            if layer.inputs != width {
                return Err(HqnnError::Dimension {
                    expected: width,
                    got: layer.inputs,
                });
            }
            width = layer.outputs;
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.quantum.as_ref().map_or(0, QuantumLayer::num_params) + self.dense.iter().map(DenseLayer::num_params).sum::<usize>()
    }

    /// Parameters of the first layer, quantum or dense.
    pub fn first_layer_params(&self) -> usize {
        match &self.quantum {
            Some(q) => q.num_params(),
            None => self.dense[0].num_params(),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.dense.last().map_or(0, |l| l.outputs)
    }

    pub fn output_activation(&self) -> Activation {
        self.dense.last().map_or(Activation::Identity, |l| l.activation)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        if let Some(q) = &self.quantum {
            out.extend(&q.theta);
        }
        for l in &self.dense {
            out.extend(&l.weights);
            if let Some(b) = &l.bias {
                out.extend(b);
            }
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(HqnnError::Dimension {
                expected: self.num_params(),
                got: params.len(),
            });
        }
        let mut rest = params;
        let mut take = |dst: &mut [f64]| {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        };
        if let Some(q) = &mut self.quantum {
            take(&mut q.theta);
        }
        for l in &mut self.dense {
            take(&mut l.weights);
            if let Some(b) = &mut l.bias {
                take(b);
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(HqnnError::Dimension {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut a = match &self.quantum {
            Some(q) => q.forward(x)?,
            None => x.to_vec(),
        };
        let mut inputs = Vec::with_capacity(self.dense.len());
        let mut pre = Vec::with_capacity(self.dense.len());
        for l in &self.dense {
            let z = l.preactivation(&a);
            let next = z.iter().map(|v| l.activation.apply(*v)).collect();
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        Ok(Trace { inputs, pre, output: a })
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.output)
    }

    /// Output of the quantum layer, or the input itself for a classical net.
    pub fn quantum_features(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        match &self.quantum {
            Some(q) => q.forward(x),
            None => Ok(x.to_vec()),
        }
    }

    fn check_loss(&self, loss: Loss) -> Result<()> {
        if self.output_dim() != 1 {
            return Err(HqnnError::MetricMismatch(format!(
                "losses need a single output, network has {}",
                self.output_dim()
            )));
        }
        if loss == Loss::Bce && self.output_activation() != Activation::Sigmoid {
            return Err(HqnnError::MetricMismatch("BCE needs a sigmoid output".into()));
        }
        Ok(())
    }

    fn sample_loss(&self, t: &Trace, y: f64, loss: Loss) -> f64 {
        match loss {
            // stable form of -y ln p - (1-y) ln(1-p) with p = sigmoid(z)
            Loss::Bce => {
                let z = t.pre.last().expect("non-empty")[0];
                z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
            }
            Loss::Mse => (t.output[0] - y).powi(2),
        }
    }

    /// Mean loss over `(xs, ys)`.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[f64], loss: Loss) -> Result<f64> {
        self.check_loss(loss)?;
        check_batch(xs, ys)?;
        let per: Vec<f64> = xs
            .par_iter()
            .zip(ys)
            .map(|(x, y)| Ok(self.sample_loss(&self.trace(x)?, *y, loss)))
            .collect::<Result<_>>()?;
        Ok(per.iter().sum::<f64>() / xs.len() as f64)
    }

    fn sample_grad(&self, x: &[f64], y: f64, loss: Loss) -> Result<(f64, Vec<f64>)> {
        let t = self.trace(x)?;
        let value = self.sample_loss(&t, y, loss);
        let last = self.dense.len() - 1;
        let mut delta: Vec<f64> = match loss {
            Loss::Bce => vec![t.output[0] - y],
            Loss::Mse => vec![2.0 * (t.output[0] - y) * self.dense[last].activation.derivative(t.pre[last][0])],
        };

        let mut dense_grads = vec![Vec::new(); self.dense.len()];
        for (k, l) in self.dense.iter().enumerate().rev() {
            let input = &t.inputs[k];
            let mut g = Vec::with_capacity(l.num_params());
            for d in &delta {
                g.extend(input.iter().map(|v| d * v));
            }
            if l.bias.is_some() {
                g.extend(&delta);
            }
            dense_grads[k] = g;
            let mut back = vec![0.0; l.inputs];
            for (o, d) in delta.iter().enumerate() {
                for (b, w) in back.iter_mut().zip(&l.weights[o * l.inputs..(o + 1) * l.inputs]) {
                    *b += w * d;
                }
            }
            if k > 0 {
                let act = self.dense[k - 1].activation;
                for (b, z) in back.iter_mut().zip(&t.pre[k - 1]) {
                    *b *= act.derivative(*z);
                }
            }
            delta = back;
        }

        let mut grad = Vec::with_capacity(self.num_params());
        if let Some(q) = &self.quantum {
            // delta now holds dL/d(readout)
            for row in q.jacobian(x)? {
                grad.push(row.iter().zip(&delta).map(|(j, d)| j * d).sum());
            }
        }
        for g in dense_grads {
            grad.extend(g);
        }
        Ok((value, grad))
    }

    /// Mean loss and its gradient in the flat parameter layout. Per-sample
    /// terms are computed in parallel and summed in sample order.
    pub fn loss_and_grad(&self, xs: &[Vec<f64>], ys: &[f64], loss: Loss) -> Result<(f64, Vec<f64>)> {
        self.check_loss(loss)?;
        check_batch(xs, ys)?;
        let per: Vec<(f64, Vec<f64>)> = xs
            .par_iter()
            .zip(ys)
            .map(|(x, y)| self.sample_grad(x, *y, loss))
            .collect::<Result<_>>()?;
        let n = xs.len() as f64;
        let mut grad = vec![0.0; self.num_params()];
        let mut value = 0.0;
        for (v, g) in &per {
            value += v;
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc += gi;
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((value / n, grad))
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| HqnnError::Io(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| HqnnError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HqnnError::Io(format!("{}: {e}", path.display())))?;
        let net: Network = serde_json::from_str(&text).map_err(|e| HqnnError::Io(format!("{}: {e}", path.display())))?;
        net.validate()?;
        Ok(net)
    }
}

fn features_on_0_and_2() -> Vec<Encoding> {
    vec![
        Encoding {
            feature: 0,
            qubit: 0,
            axis: Axis::X,
        },
        Encoding {
            feature: 1,
            qubit: 2,
            axis: Axis::X,
        },
    ]
}

fn check_batch(xs: &[Vec<f64>], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(HqnnError::Dimension {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(HqnnError::InvalidConfig("empty batch".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::finite_diff_grad;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    #[test]
    fn parameter_counts() {
        assert_eq!(Network::classical_classifier(0).num_params(), 161);
        assert_eq!(Network::hybrid_classifier(0).num_params(), 125);
        assert_eq!(Network::classical_regressor(0).first_layer_params(), 12);
        assert_eq!(Network::hybrid_regressor(0).first_layer_params(), 4);
        for net in [Network::hybrid_classifier(3), Network::classical_regressor(3)] {
            let mut other = net.clone();
            other.set_params(&net.params()).unwrap();
            assert_eq!(other, net);
        }
    }

    #[test]
    fn zero_input_and_angles_give_plus_one() {
        let mut net = Network::hybrid_regressor(1);
        net.quantum.as_mut().unwrap().theta = vec![0.0; 4];
        assert_eq!(net.quantum_features(&[0.0, 0.0]).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn zero_relu_layer_outputs_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = DenseLayer::new(3, 5, true, Activation::Relu, &mut rng);
        l.weights.iter_mut().for_each(|w| *w = 0.0);
        l.bias.as_mut().unwrap().iter_mut().for_each(|b| *b = 0.0);
        let net = Network::new(3, None, vec![l]).unwrap();
        assert_eq!(net.forward(&[0.3, -2.0, 7.0]).unwrap(), vec![0.0; 5]);
    }

    /// Explicit circuit, built gate by gate for the hybrid regressor.
    #[test]
    fn quantum_layer_matches_explicit_circuit() {
        let net = Network::hybrid_regressor(3);
        let q = net.quantum.as_ref().unwrap();
        let x = [1.0, 0.0];
        let mut s = StateVector::zero(4).unwrap();
        s.apply(&Gate::Rx(0, PI * x[0])).unwrap();
        s.apply(&Gate::Rx(2, PI * x[1])).unwrap();
        for (k, t) in q.theta.iter().enumerate() {
            s.apply(&Gate::Ry(k, *t)).unwrap();
        }
        for (c, t) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            s.apply(&Gate::Cnot(c, t)).unwrap();
        }
        let want: Vec<f64> = (0..4).map(|k| s.expectation_z(k).unwrap()).collect();
        let got = net.quantum_features(&x).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    fn check_gradient(net: &Network, loss: Loss, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let ys: Vec<f64> = match loss {
            Loss::Bce => (0..10).map(|_| rng.random_range(0..2) as f64).collect(),
            Loss::Mse => (0..10).map(|_| rng.random::<f64>()).collect(),
        };
        let (_, g) = net.loss_and_grad(&xs, &ys, loss).unwrap();
        let mut probe = net.clone();
        let fd = finite_diff_grad(
            |p| {
                probe.set_params(p).unwrap();
                probe.loss(&xs, &ys, loss).unwrap()
            },
            &net.params(),
            1e-5,
        )
        .unwrap();
        let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
        for (k, (a, b)) in g.iter().zip(&fd).enumerate() {
            assert!((a - b).abs() <= 1e-5 * scale, "param {k}: {a} vs {b}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..3 {
            check_gradient(&Network::hybrid_classifier(seed), Loss::Bce, seed);
            check_gradient(&Network::classical_classifier(seed), Loss::Bce, seed);
            check_gradient(&Network::hybrid_regressor(seed), Loss::Mse, seed);
            check_gradient(&Network::classical_regressor(seed), Loss::Mse, seed);
        }
    }

    #[test]
    fn bce_output_gradient_is_p_minus_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = DenseLayer::new(3, 1, true, Activation::Sigmoid, &mut rng);
        let net = Network::new(3, None, vec![out]).unwrap();
        let x = vec![0.2, -0.4, 0.9];
        let p = net.forward(&x).unwrap()[0];
        let (_, g) = net.loss_and_grad(&[x.clone()], &[1.0], Loss::Bce).unwrap();
        // the bias gradient is the preactivation gradient
        assert!((g[3] - (p - 1.0)).abs() < 1e-14);
        for (k, v) in x.iter().enumerate() {
            assert!((g[k] - (p - 1.0) * v).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_fit_has_zero_gradient() {
        let net = Network::hybrid_regressor(4);
        let xs = vec![vec![0.1, 0.7], vec![0.5, 0.2]];
        let ys: Vec<f64> = xs.iter().map(|x| net.forward(x).unwrap()[0]).collect();
        let (v, g) = net.loss_and_grad(&xs, &ys, Loss::Mse).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn loss_mismatches_are_errors() {
        let reg = Network::classical_regressor(0);
        assert!(matches!(
            reg.loss(&[vec![0.0, 0.0]], &[0.0], Loss::Bce),
            Err(HqnnError::MetricMismatch(_))
        ));
        assert!(reg.forward(&[0.0]).is_err());
        assert!(reg.loss(&[vec![0.0, 0.0]], &[0.0, 1.0], Loss::Mse).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = Network::hybrid_classifier(8);
        let f = tempfile::NamedTempFile::new().unwrap();
        net.save_checkpoint(f.path()).unwrap();
        let back = Network::load_checkpoint(f.path()).unwrap();
        assert_eq!(back, net);
        let x = [0.3, 0.6];
        assert_eq!(back.forward(&x).unwrap(), net.forward(&x).unwrap());
        std::fs::write(f.path(), "{\"input_dim\": 2}").unwrap();
        assert!(Network::load_checkpoint(f.path()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn readouts_stay_in_unit_interval(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let net = Network::hybrid_regressor(seed);
            for r in net.quantum_features(&[a, b]).unwrap() {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            }
            let p = Network::hybrid_classifier(seed).forward(&[a, b]).unwrap()[0];
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
