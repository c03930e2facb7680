//! QuEnc: MaxCut with `ceil(log2 n)` address qubits and one value ancilla.
//!
//! Amplitude index `k = ancilla + 2 * address`. Node `i` is read out as the
//! conditional probability that the ancilla is 1 given address `i`.

mod graph;

use std::f64::consts::{FRAC_PI_2, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classical_opt::{self, AnnealSchedule, ClassicalError};
use crate::optim::{finite_diff_grad, Adam, OptimError};
use crate::statevector::{Ansatz, SimError, StateVector};

pub use graph::{graph_to_qubo, maxcut_energy, relaxed_cost, QuboMatrix, WeightedGraph};

/// Below this the address is treated as unpopulated and `p_i = 0.5`.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuencError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
    #[error("expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("probability p[{index}] = {value} outside [0, 1]")]
    ProbabilityRange { index: usize, value: f64 },
    #[error("state has {got} qubits, encoding needs {expected}")]
    QubitMismatch { expected: usize, got: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
}

pub type Result<T> = std::result::Result<T, QuencError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    ParameterShift,
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuencConfig {
    pub layers: usize,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub gradient: GradientMode,
    pub seed: u64,
    /// Plateau threshold on `|cost_t - cost_{t-1}|`.
    pub tolerance: f64,
    /// Consecutive plateau iterations before stopping.
    pub patience: usize,
}

impl Default for QuencConfig {
    fn default() -> Self {
        Self {
            layers: 8,
            learning_rate: 1.0,
            max_iters: 2000,
            gradient: GradientMode::ParameterShift,
            seed: 0,
            tolerance: 1e-9,
            patience: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub cost: f64,
    pub energy: f64,
    pub best_energy: f64,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_energy: f64,
    pub best_x: Vec<u8>,
    pub trace: Vec<TraceEntry>,
}

/// Number of address qubits, `ceil(log2 n)`.
pub fn address_qubits(num_nodes: usize) -> usize {
    num_nodes.next_power_of_two().trailing_zeros() as usize
}

/// RY layers with a CNOT chain over `address_qubits(n) + 1` qubits.
pub fn build_ansatz(num_nodes: usize, layers: usize) -> Result<Ansatz> {
    if num_nodes < 2 {
        return Err(QuencError::InvalidConfig(format!("need at least 2 nodes, got {num_nodes}")));
    }
    if layers == 0 {
        return Err(QuencError::InvalidConfig("layers must be at least 1".into()));
    }
    Ok(Ansatz::chain(address_qubits(num_nodes) + 1, layers))
}

/// Per-address `(|a(i,1)|^2, |a(i,0)|^2 + |a(i,1)|^2)`.
fn projector_pairs(state: &StateVector, num_nodes: usize) -> Result<Vec<(f64, f64)>> {
    let expected = address_qubits(num_nodes) + 1;
    if state.num_qubits() != expected {
        return Err(QuencError::QubitMismatch {
            expected,
            got: state.num_qubits(),
        });
    }
    let a = state.amplitudes();
    Ok((0..num_nodes)
        .map(|i| {
            let (zero, one) = (a[2 * i].norm_sqr(), a[2 * i + 1].norm_sqr());
            (one, zero + one)
        })
        .collect())
}

fn ratio((num, den): (f64, f64)) -> f64 {
    if den < DEGENERATE_DENOMINATOR {
        0.5
    } else {
        (num / den).clamp(0.0, 1.0)
    }
}

/// `p_i = P(ancilla = 1 | address = i)`, or 0.5 for an empty address.
pub fn conditional_probabilities(state: &StateVector, num_nodes: usize) -> Result<Vec<f64>> {
    Ok(projector_pairs(state, num_nodes)?.into_iter().map(ratio).collect())
}

/// `x_i = 1` iff `p_i > 0.5`.
pub fn decode(p: &[f64]) -> Vec<u8> {
    p.iter().map(|v| u8::from(*v > 0.5)).collect()
}

/// `dC/dp_i = -2 sum_j d_ij (p_i - p_j)`.
fn cost_gradient_p(graph: &WeightedGraph, p: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; p.len()];
    for &(i, j, w) in graph.edges() {
        let t = -2.0 * w * (p[i] - p[j]);
        g[i] += t;
        g[j] -= t;
    }
    g
}

/// Relaxed cost of the circuit output at `params`.
pub fn circuit_cost(graph: &WeightedGraph, ansatz: &Ansatz, params: &[f64]) -> Result<f64> {
    let state = ansatz.run(params)?;
    relaxed_cost(graph, &conditional_probabilities(&state, graph.num_nodes())?)
}

/// Gradient of the relaxed cost with respect to the circuit angles.
///
/// `p_i` is a ratio `N_i / D_i` of two projector expectations, so the shift
/// rule is applied to `N_i` and `D_i` separately and combined with the
/// quotient rule.
pub fn quenc_gradient(graph: &WeightedGraph, ansatz: &Ansatz, params: &[f64], mode: GradientMode) -> Result<Vec<f64>> {
    let n = graph.num_nodes();
    match mode {
        GradientMode::FiniteDifference => {
            // an error inside the closure surfaces as NaN and is reported below
            let f = |x: &[f64]| circuit_cost(graph, ansatz, x).unwrap_or(f64::NAN);
            circuit_cost(graph, ansatz, params)?;
            Ok(finite_diff_grad(f, params, 1e-5)?)
        }
        GradientMode::ParameterShift => {
            let base = projector_pairs(&ansatz.run(params)?, n)?;
            let p: Vec<f64> = base.iter().copied().map(ratio).collect();
            let dc = cost_gradient_p(graph, &p);
            let pairs_at = |k: usize, shift: f64| -> Result<Vec<(f64, f64)>> {
                let mut x = params.to_vec();
                x[k] += shift;
                projector_pairs(&ansatz.run(&x)?, n)
            };
            (0..params.len())
                .into_par_iter()
                .map(|k| {
                    let plus = pairs_at(k, FRAC_PI_2)?;
                    let minus = pairs_at(k, -FRAC_PI_2)?;
                    let mut g = 0.0;
                    for i in 0..n {
                        let (num, den) = base[i];
                        if den < DEGENERATE_DENOMINATOR {
                            continue;
                        }
                        let dnum = 0.5 * (plus[i].0 - minus[i].0);
                        let dden = 0.5 * (plus[i].1 - minus[i].1);
                        g += dc[i] * (dnum * den - num * dden) / (den * den);
                    }
                    Ok(g)
                })
                .collect()
        }
    }
}

fn validate(config: &QuencConfig) -> Result<()> {
    if config.layers == 0 {
        return Err(QuencError::InvalidConfig("layers must be at least 1".into()));
    }
    if !(config.learning_rate > 0.0) {
        return Err(QuencError::InvalidConfig("learning rate must be positive".into()));
    }
    if config.max_iters == 0 {
        return Err(QuencError::InvalidConfig("max_iters must be at least 1".into()));
    }
    Ok(())
}

/// Adam on the relaxed cost. Every iterate is decoded and scored; the result
/// keeps the best decoded assignment.
pub fn quenc_optimize(graph: &WeightedGraph, config: &QuencConfig) -> Result<OptResult> {
    validate(config)?;
    let n = graph.num_nodes();
    let ansatz = build_ansatz(n, config.layers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
    let mut adam = Adam::new(params.len(), config.learning_rate)?;

    let start = Instant::now();
    let mut trace = Vec::new();
    let mut best_x = vec![0u8; n];
    let mut best_energy = f64::INFINITY;
    let mut prev_cost = f64::NAN;
    let mut flat = 0;
    for iter in 0..config.max_iters {
        let p = conditional_probabilities(&ansatz.run(&params)?, n)?;
        let cost = relaxed_cost(graph, &p)?;
        let x = decode(&p);
        let energy = maxcut_energy(graph, &x)?;
        if energy < best_energy {
            best_energy = energy;
            best_x = x;
        }
        trace.push(TraceEntry {
            iter,
            cost,
            energy,
            best_energy,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        flat = if (cost - prev_cost).abs() < config.tolerance { flat + 1 } else { 0 };
        if flat >= config.patience {
            break;
        }
        prev_cost = cost;
        let grad = quenc_gradient(graph, &ansatz, &params, config.gradient)?;
        adam.step(&mut params, &grad)?;
    }
    Ok(OptResult {
        best_energy,
        best_x,
        trace,
    })
}

/// Classical refinement applied to the QuEnc answer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Refiner {
    LocalSearch,
    /// Annealing from the warm start, then local search.
    Anneal(AnnealSchedule),
}

/// QuEnc followed by classical refinement from its best assignment. The
/// refined result is appended to the trace as one more entry.
pub fn hybrid_pipeline(graph: &WeightedGraph, config: &QuencConfig, refiner: &Refiner) -> Result<OptResult> {
    let mut result = quenc_optimize(graph, config)?;
    let start = Instant::now();
    let (x, e) = match refiner {
        Refiner::LocalSearch => classical_opt::local_search(graph, &result.best_x)?,
        Refiner::Anneal(schedule) => {
            let (warm, _) = classical_opt::simulated_annealing_from(graph, schedule, &result.best_x)?;
            classical_opt::local_search(graph, &warm)?
        }
    };
    let offset = result.trace.last().map_or(0.0, |t| t.elapsed_ms);
    if e < result.best_energy {
        result.best_energy = e;
        result.best_x = x;
    }
    result.trace.push(TraceEntry {
        iter: result.trace.len(),
        cost: result.best_energy,
        energy: result.best_energy,
        best_energy: result.best_energy,
        elapsed_ms: offset + start.elapsed().as_secs_f64() * 1e3,
    });
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical_opt::brute_force;
    use crate::statevector::Gate;
    use num_complex::Complex64;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    #[test]
    fn ansatz_sizes() {
        let a = build_ansatz(256, 20).unwrap();
        assert_eq!((a.num_qubits, a.num_params()), (9, 180));
        let a = build_ansatz(2, 1).unwrap();
        assert_eq!((a.num_qubits, a.num_params()), (2, 2));
        assert_eq!(build_ansatz(1000, 5).unwrap().num_qubits, 11);
        assert_eq!(build_ansatz(5, 1).unwrap().num_qubits, 4);
        assert!(build_ansatz(1, 1).is_err());
    }

    #[test]
    fn conditional_probability_examples() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply_all(&[Gate::H(0), Gate::H(1)]).unwrap();
        assert_eq!(conditional_probabilities(&s, 2).unwrap(), vec![0.5, 0.5]);

        let mut s = StateVector::zero(3).unwrap();
        s.apply_all(&[Gate::Ry(0, std::f64::consts::PI), Gate::H(1), Gate::H(2)]).unwrap();
        for p in conditional_probabilities(&s, 4).unwrap() {
            assert!((p - 1.0).abs() < 1e-12);
        }

        // address 1 carries no weight
        let c = |v: f64| Complex64::new(v, 0.0);
        let s = StateVector::from_amplitudes(vec![c(0.6), c(0.8), c(0.0), c(0.0)]).unwrap();
        let p = conditional_probabilities(&s, 2).unwrap();
        assert!((p[0] - 0.64).abs() < 1e-12 && p[1] == 0.5);

        assert!(matches!(
            conditional_probabilities(&StateVector::zero(3).unwrap(), 2),
            Err(QuencError::QubitMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn decoding() {
        assert_eq!(decode(&[0.9, 0.2]), vec![1, 0]);
        assert_eq!(decode(&[0.5]), vec![0]);
        assert_eq!(decode(&[1.0, 0.0, 1.0]), vec![1, 0, 1]);
    }

    #[test]
    fn shift_rule_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (n, layers) in [(5, 2), (8, 3), (16, 4), (128, 2)] {
            let g = WeightedGraph::random_complete(n, rng.random()).unwrap();
            let a = build_ansatz(n, layers).unwrap();
            let params: Vec<f64> = (0..a.num_params()).map(|_| rng.random_range(0.0..TAU)).collect();
            let ps = quenc_gradient(&g, &a, &params, GradientMode::ParameterShift).unwrap();
            let fd = quenc_gradient(&g, &a, &params, GradientMode::FiniteDifference).unwrap();
            assert!(rel_err(&ps, &fd) < 1e-6, "n={n} err={}", rel_err(&ps, &fd));
        }
    }

    #[test]
    fn symmetric_and_weightless_gradients_vanish() {
        let g = WeightedGraph::new(2, vec![(0, 1, 1.0)]).unwrap();
        let a = build_ansatz(2, 2).unwrap();
        let grad = quenc_gradient(&g, &a, &[0.0; 4], GradientMode::ParameterShift).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-8));
        let empty = WeightedGraph::new(4, vec![]).unwrap();
        let a = build_ansatz(4, 2).unwrap();
        let grad = quenc_gradient(&empty, &a, &[0.3; 6], GradientMode::ParameterShift).unwrap();
        assert!(grad.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_nodes_reach_the_cut() {
        let g = WeightedGraph::new(2, vec![(0, 1, 1.0)]).unwrap();
        let r = quenc_optimize(&g, &QuencConfig { layers: 2, ..QuencConfig::default() }).unwrap();
        assert_eq!(r.best_energy, -1.0);
    }

    #[test]
    fn trace_is_consistent() {
        let g = WeightedGraph::random_complete(6, 2).unwrap();
        let config = QuencConfig {
            layers: 3,
            max_iters: 60,
            ..QuencConfig::default()
        };
        let r = quenc_optimize(&g, &config).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].best_energy <= w[0].best_energy));
        assert_eq!(r.trace.last().unwrap().best_energy, r.best_energy);
        assert_eq!(maxcut_energy(&g, &r.best_x).unwrap(), r.best_energy);
        assert!(r.best_energy >= brute_force(&g).unwrap().1 - 1e-12);
        let again = quenc_optimize(&g, &config).unwrap();
        assert_eq!(again.best_x, r.best_x);
        let costs = |r: &OptResult| r.trace.iter().map(|t| t.cost).collect::<Vec<_>>();
        assert_eq!(costs(&again), costs(&r));
    }

    #[test]
    fn pipeline_never_worsens() {
        let g = WeightedGraph::random_complete(10, 5).unwrap();
        let config = QuencConfig {
            layers: 2,
            max_iters: 20,
            ..QuencConfig::default()
        };
        let alone = quenc_optimize(&g, &config).unwrap();
        for refiner in [
            Refiner::LocalSearch,
            Refiner::Anneal(AnnealSchedule {
                t0: 0.5,
                t1: 0.01,
                sweeps: 50,
                seed: 1,
            }),
        ] {
            let piped = hybrid_pipeline(&g, &config, &refiner).unwrap();
            assert!(piped.best_energy <= alone.best_energy);
            assert_eq!(piped.trace.len(), alone.trace.len() + 1);
        }
    }

    #[test]
    fn config_validation() {
        let g = WeightedGraph::random_complete(4, 0).unwrap();
        for bad in [
            QuencConfig { layers: 0, ..QuencConfig::default() },
            QuencConfig { learning_rate: 0.0, ..QuencConfig::default() },
            QuencConfig { max_iters: 0, ..QuencConfig::default() },
        ] {
            assert!(matches!(quenc_optimize(&g, &bad), Err(QuencError::InvalidConfig(_))));
        }
    }
}
