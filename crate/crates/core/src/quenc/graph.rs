use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{QuencError, Result};

/// Undirected weighted graph with edges stored as `(i, j, w)`, `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    num_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(num_nodes: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, j, w) in edges {
            if i == j {
                return Err(QuencError::InvalidGraph(format!("self-loop on node {i}")));
            }
            if i >= num_nodes || j >= num_nodes {
                return Err(QuencError::InvalidGraph(format!(
                    "edge ({i}, {j}) outside {num_nodes} nodes"
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(QuencError::InvalidGraph(format!("edge ({i}, {j}) has weight {w}")));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if !seen.insert((a, b)) {
                return Err(QuencError::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            normalized.push((a, b, w));
        }
        Ok(Self {
            num_nodes,
            edges: normalized,
        })
    }

    /// Complete graph with weights uniform in `[0.01, 1]`.
    pub fn random_complete(num_nodes: usize, seed: u64) -> Result<Self> {
        if num_nodes < 2 {
            return Err(QuencError::InvalidGraph(format!("need at least 2 nodes, got {num_nodes}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::with_capacity(num_nodes * (num_nodes - 1) / 2);
        for i in 0..num_nodes {
            for j in i + 1..num_nodes {
                edges.push((i, j, rng.random_range(0.01..=1.0)));
            }
        }
        Ok(Self { num_nodes, edges })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Dense symmetric weight matrix, row-major.
    pub fn adjacency(&self) -> Vec<f64> {
        let n = self.num_nodes;
        let mut d = vec![0.0; n * n];
        for &(i, j, w) in &self.edges {
            d[i * n + j] = w;
            d[j * n + i] = w;
        }
        d
    }

    /// Text form: `n m` then one `i j w` line per edge.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines
            .next()
            .ok_or_else(|| QuencError::Parse { line: 1, msg: "empty graph file".into() })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let parse_usize = |s: &str, line: usize| {
            s.parse::<usize>()
                .map_err(|_| QuencError::Parse { line, msg: format!("expected an integer, got {s:?}") })
        };
        if head.len() != 2 {
            return Err(QuencError::Parse { line, msg: "header must be `n m`".into() });
        }
        let n = parse_usize(head[0], line)?;
        let m = parse_usize(head[1], line)?;
        let mut edges = Vec::with_capacity(m);
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(QuencError::Parse { line, msg: "edge line must be `i j w`".into() });
            }
            let w = f[2]
                .parse::<f64>()
                .map_err(|_| QuencError::Parse { line, msg: format!("bad weight {:?}", f[2]) })?;
            edges.push((parse_usize(f[0], line)?, parse_usize(f[1], line)?, w));
        }
        if edges.len() != m {
            return Err(QuencError::Parse {
                line: 1,
                msg: format!("header announces {m} edges, found {}", edges.len()),
            });
        }
        Self::new(n, edges)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QuencError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.num_nodes, self.edges.len());
        for (i, j, w) in &self.edges {
            let _ = writeln!(s, "{i} {j} {w}");
        }
        s
    }
}

fn check_len(graph: &WeightedGraph, len: usize) -> Result<()> {
    if len != graph.num_nodes() {
        return Err(QuencError::LengthMismatch {
            expected: graph.num_nodes(),
            got: len,
        });
    }
    Ok(())
}

/// `E = -sum_{i<j} d_ij (x_i - x_j)^2`, minus the cut weight.
pub fn maxcut_energy(graph: &WeightedGraph, x: &[u8]) -> Result<f64> {
    check_len(graph, x.len())?;
    Ok(-graph
        .edges()
        .iter()
        .filter(|(i, j, _)| x[*i] != x[*j])
        .map(|(_, _, w)| w)
        .sum::<f64>())
}

/// `-sum_{i<j} d_ij (p_i - p_j)^2` for `p` in `[0, 1]^n`.
pub fn relaxed_cost(graph: &WeightedGraph, p: &[f64]) -> Result<f64> {
    check_len(graph, p.len())?;
    if let Some(i) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(QuencError::ProbabilityRange { index: i, value: p[i] });
    }
    Ok(-graph
        .edges()
        .iter()
        .map(|&(i, j, w)| w * (p[i] - p[j]).powi(2))
        .sum::<f64>())
}

/// Upper-triangular QUBO matrix with `x^T Q x` equal to the MaxCut energy.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboMatrix {
    size: usize,
    /// row-major
    q: Vec<f64>,
}

impl QuboMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.size + j]
    }

    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.size {
            return Err(QuencError::LengthMismatch {
                expected: self.size,
                got: x.len(),
            });
        }
        let mut e = 0.0;
        for i in (0..self.size).filter(|i| x[*i] == 1) {
            for j in (i..self.size).filter(|j| x[*j] == 1) {
                e += self.get(i, j);
            }
        }
        Ok(e)
    }
}

/// `Q_ii = -sum_j d_ij`, `Q_ij = 2 d_ij` for `i < j`.
pub fn graph_to_qubo(graph: &WeightedGraph) -> QuboMatrix {
    let n = graph.num_nodes();
    let mut q = vec![0.0; n * n];
    for &(i, j, w) in graph.edges() {
        q[i * n + i] -= w;
        q[j * n + j] -= w;
        q[i * n + j] += 2.0 * w;
    }
    QuboMatrix { size: n, q }
}
