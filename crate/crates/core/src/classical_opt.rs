//! Classical MaxCut baselines: exhaustive search, 1-flip local search and
//! simulated annealing.
//!
//! All three work with the per-node cut weight `s_i = sum_j d_ij [x_i != x_j]`.
//! Flipping node `i` changes the energy by `2 s_i - deg_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::quenc::{maxcut_energy, WeightedGraph};

/// Largest instance accepted by [`brute_force`].
pub const BRUTE_FORCE_MAX_NODES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicalError {
    #[error("brute force is limited to {BRUTE_FORCE_MAX_NODES} nodes, got {0}")]
    TooLarge(usize),
    #[error("start assignment has length {got}, graph has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

pub type Result<T> = std::result::Result<T, ClassicalError>;

/// Geometric cooling from `t0` to `t1` over `sweeps` sweeps of `n` proposals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealSchedule {
    pub t0: f64,
    pub t1: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t1 > 0.0 && self.t1 < self.t0) || !self.t0.is_finite() {
            return Err(ClassicalError::InvalidSchedule(format!(
                "need 0 < t1 < t0, got t0={} t1={}",
                self.t0, self.t1
            )));
        }
        if self.sweeps == 0 {
            return Err(ClassicalError::InvalidSchedule("sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

struct CutState {
    n: usize,
    d: Vec<f64>,
    degree: Vec<f64>,
    x: Vec<u8>,
    s: Vec<f64>,
    energy: f64,
}

impl CutState {
    fn new(graph: &WeightedGraph, x: Vec<u8>) -> Self {
        let n = graph.num_nodes();
        let d = graph.adjacency();
        let degree = d.chunks(n.max(1)).map(|row| row.iter().sum()).collect();
        let mut st = Self {
            n,
            d,
            degree,
            x,
            s: vec![0.0; n],
            energy: 0.0,
        };
        st.resync();
        st
    }

    fn resync(&mut self) {
        let n = self.n;
        for i in 0..n {
            let row = &self.d[i * n..(i + 1) * n];
            self.s[i] = (0..n).filter(|j| self.x[*j] != self.x[i]).map(|j| row[j]).sum();
        }
        self.energy = -0.5 * self.s.iter().sum::<f64>();
    }

    #[inline]
    fn delta(&self, i: usize) -> f64 {
        2.0 * self.s[i] - self.degree[i]
    }

    fn flip(&mut self, i: usize) {
        let n = self.n;
        self.energy += self.delta(i);
        let xi = self.x[i];
        let row = &self.d[i * n..(i + 1) * n];
        for j in 0..n {
            if j == i {
                continue;
            }
            if self.x[j] != xi {
                self.s[j] -= row[j];
            } else {
                self.s[j] += row[j];
            }
        }
        self.s[i] = self.degree[i] - self.s[i];
        self.x[i] = 1 - xi;
    }
}

fn check_start(graph: &WeightedGraph, start: &[u8]) -> Result<()> {
    if start.len() != graph.num_nodes() {
        return Err(ClassicalError::LengthMismatch {
            expected: graph.num_nodes(),
            got: start.len(),
        });
    }
    Ok(())
}

fn exact_energy(graph: &WeightedGraph, x: &[u8]) -> f64 {
    maxcut_energy(graph, x).expect("length checked")
}

/// Exhaustive minimum. Among ties the lexicographically smallest assignment
/// (node 0 most significant) wins.
pub fn brute_force(graph: &WeightedGraph) -> Result<(Vec<u8>, f64)> {
    let n = graph.num_nodes();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(ClassicalError::TooLarge(n));
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let scale = graph.edges().iter().map(|e| e.2).sum::<f64>().max(1.0);
    let tie = 1e-9 * scale;
    // the key orders assignments lexicographically: node 0 is the top bit
    let key = |x: &[u8]| x.iter().fold(0u32, |k, b| (k << 1) | *b as u32);

    let mut st = CutState::new(graph, vec![0; n]);
    let mut best_e = st.energy;
    let mut best_key = 0u32;
    for step in 1u64..1 << n {
        // reflected Gray code: flip the lowest set bit of the step counter
        st.flip(step.trailing_zeros() as usize);
        if step % 4096 == 0 {
            st.resync();
        }
        let e = st.energy;
        if e < best_e - tie {
            best_e = e;
            best_key = key(&st.x);
        } else if e <= best_e + tie {
            let k = key(&st.x);
            if k < best_key {
                best_key = k;
                best_e = best_e.min(e);
            }
        }
    }
    let x: Vec<u8> = (0..n).map(|i| (best_key >> (n - 1 - i) & 1) as u8).collect();
    let e = exact_energy(graph, &x);
    Ok((x, e))
}

/// Best-improvement single flips until no flip lowers the energy.
pub fn local_search(graph: &WeightedGraph, start: &[u8]) -> Result<(Vec<u8>, f64)> {
    check_start(graph, start)?;
    let mut st = CutState::new(graph, start.to_vec());
    let eps = 1e-12 * st.degree.iter().sum::<f64>().max(1.0);
    loop {
        let (best, delta) = (0..st.n)
            .map(|i| (i, st.delta(i)))
            .fold((usize::MAX, 0.0), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
        if best == usize::MAX || delta > -eps {
            break;
        }
        st.flip(best);
    }
    let e = exact_energy(graph, &st.x);
    Ok((st.x, e))
}

/// Metropolis annealing from a seeded random start; returns the best
/// assignment seen.
pub fn simulated_annealing(graph: &WeightedGraph, schedule: &AnnealSchedule) -> Result<(Vec<u8>, f64)> {
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let start: Vec<u8> = (0..graph.num_nodes()).map(|_| rng.random_range(0..=1u8)).collect();
    anneal(graph, schedule, start, &mut rng, |_, _| {})
}

/// Annealing from a given start, for warm starts.
pub fn simulated_annealing_from(
    graph: &WeightedGraph,
    schedule: &AnnealSchedule,
    start: &[u8],
) -> Result<(Vec<u8>, f64)> {
    schedule.validate()?;
    check_start(graph, start)?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    anneal(graph, schedule, start.to_vec(), &mut rng, |_, _| {})
}

/// Like [`simulated_annealing`], also reporting the best-seen energy after
/// every sweep.
pub fn simulated_annealing_traced(
    graph: &WeightedGraph,
    schedule: &AnnealSchedule,
) -> Result<(Vec<u8>, f64, Vec<f64>)> {
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let start: Vec<u8> = (0..graph.num_nodes()).map(|_| rng.random_range(0..=1u8)).collect();
    let mut trace = Vec::with_capacity(schedule.sweeps);
    let (x, e) = anneal(graph, schedule, start, &mut rng, |_, best| trace.push(best))?;
    Ok((x, e, trace))
}

fn anneal(
    graph: &WeightedGraph,
    schedule: &AnnealSchedule,
    start: Vec<u8>,
    rng: &mut ChaCha8Rng,
    mut on_sweep: impl FnMut(usize, f64),
) -> Result<(Vec<u8>, f64)> {
    let n = graph.num_nodes();
    let mut st = CutState::new(graph, start);
    let mut best_x = st.x.clone();
    let mut best_e = st.energy;
    if n == 0 {
        return Ok((best_x, 0.0));
    }
    let ratio = if schedule.sweeps > 1 {
        (schedule.t1 / schedule.t0).powf(1.0 / (schedule.sweeps - 1) as f64)
    } else {
        1.0
    };
    let mut temp = schedule.t0;
    for sweep in 0..schedule.sweeps {
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let delta = st.delta(i);
            if delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp() {
                st.flip(i);
                if st.energy < best_e {
                    best_e = st.energy;
                    best_x.copy_from_slice(&st.x);
                }
            }
        }
        on_sweep(sweep, best_e);
        temp *= ratio;
    }
    let e = exact_energy(graph, &best_x);
    Ok((best_x, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(3, vec![(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap()
    }

    /// Plain enumeration in lexicographic order, node 0 most significant.
    fn enumerate(graph: &WeightedGraph) -> (Vec<u8>, f64) {
        let n = graph.num_nodes();
        let mut best = (vec![0; n], f64::INFINITY);
        for k in 0u32..1 << n {
            let x: Vec<u8> = (0..n).map(|i| (k >> (n - 1 - i) & 1) as u8).collect();
            let e = maxcut_energy(graph, &x).unwrap();
            if e < best.1 - 1e-9 {
                best = (x, e);
            }
        }
        best
    }

    fn one_flip_optimal(graph: &WeightedGraph, x: &[u8]) -> bool {
        let e = maxcut_energy(graph, x).unwrap();
        (0..x.len()).all(|i| {
            let mut y = x.to_vec();
            y[i] ^= 1;
            maxcut_energy(graph, &y).unwrap() >= e - 1e-9
        })
    }

    #[test]
    fn brute_force_examples() {
        let edge = WeightedGraph::new(2, vec![(0, 1, 1.0)]).unwrap();
        assert_eq!(brute_force(&edge).unwrap(), (vec![0, 1], -1.0));
        assert_eq!(brute_force(&triangle()).unwrap(), (vec![0, 0, 1], -2.0));
        let empty = WeightedGraph::new(4, vec![]).unwrap();
        assert_eq!(brute_force(&empty).unwrap(), (vec![0; 4], 0.0));
        let big = WeightedGraph::new(25, vec![]).unwrap();
        assert_eq!(brute_force(&big), Err(ClassicalError::TooLarge(25)));
    }

    #[test]
    fn brute_force_matches_plain_enumeration() {
        for seed in 0..6 {
            let g = WeightedGraph::random_complete(10, seed).unwrap();
            let (x, e) = brute_force(&g).unwrap();
            let (y, f) = enumerate(&g);
            assert!((e - f).abs() < 1e-12);
            assert_eq!(x, y);
        }
    }

    #[test]
    fn local_search_examples() {
        let g = WeightedGraph::random_complete(12, 4).unwrap();
        let (opt, e_opt) = brute_force(&g).unwrap();
        assert_eq!(local_search(&g, &opt).unwrap(), (opt.clone(), e_opt));
        let start = vec![0u8; 12];
        let (x, e) = local_search(&g, &start).unwrap();
        assert!(e <= maxcut_energy(&g, &start).unwrap());
        assert!(one_flip_optimal(&g, &x));
        assert!(e >= e_opt - 1e-12);
        assert!(local_search(&g, &[0, 1]).is_err());
    }

    #[test]
    fn annealing_examples() {
        let s = AnnealSchedule {
            t0: 2.0,
            t1: 0.01,
            sweeps: 500,
            seed: 1,
        };
        assert_eq!(simulated_annealing(&triangle(), &s).unwrap().1, -2.0);
        let g = WeightedGraph::random_complete(16, 0).unwrap();
        let generous = AnnealSchedule {
            t0: 5.0,
            t1: 0.01,
            sweeps: 2000,
            seed: 3,
        };
        let a = simulated_annealing(&g, &generous).unwrap();
        assert_eq!(a, simulated_annealing(&g, &generous).unwrap());
        let (_, opt) = brute_force(&g).unwrap();
        assert!(a.1 <= 0.98 * opt, "{} vs {opt}", a.1);
    }

    #[test]
    fn annealing_trace_and_validation() {
        let g = WeightedGraph::random_complete(20, 2).unwrap();
        let s = AnnealSchedule {
            t0: 1.0,
            t1: 0.05,
            sweeps: 50,
            seed: 9,
        };
        let (_, e, trace) = simulated_annealing_traced(&g, &s).unwrap();
        assert_eq!(trace.len(), 50);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        assert!((trace[49] - e).abs() < 1e-9);
        for bad in [
            AnnealSchedule { t0: 1.0, t1: 1.0, ..s },
            AnnealSchedule { t0: 0.0, t1: -1.0, ..s },
            AnnealSchedule { sweeps: 0, ..s },
        ] {
            assert!(simulated_annealing(&g, &bad).is_err());
        }
    }

    #[test]
    fn incremental_fields_stay_exact() {
        let g = WeightedGraph::random_complete(15, 6).unwrap();
        let mut st = CutState::new(&g, vec![0; 15]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..500 {
            st.flip(rng.random_range(0..15));
        }
        assert!((st.energy - maxcut_energy(&g, &st.x).unwrap()).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn solvers_never_beat_brute_force(seed in 0u64..10_000, n in 2usize..11) {
            let g = WeightedGraph::random_complete(n, seed).unwrap();
            let (_, opt) = brute_force(&g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1u8)).collect();
            let (x, e) = local_search(&g, &start).unwrap();
            prop_assert!(e >= opt - 1e-12);
            prop_assert!(e <= maxcut_energy(&g, &start).unwrap() + 1e-12);
            prop_assert!(one_flip_optimal(&g, &x));
            let s = AnnealSchedule { t0: 1.0, t1: 0.01, sweeps: 20, seed };
            prop_assert!(simulated_annealing(&g, &s).unwrap().1 >= opt - 1e-12);
        }
    }
}
