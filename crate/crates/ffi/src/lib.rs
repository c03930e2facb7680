//! C ABI over qworkbench.
//!
//! Objects are opaque handles created by `*_new` style functions and released
//! with the matching `*_free`. Every fallible call returns a [`QwStatus`];
//! on failure `qw_last_error` copies a message for the calling thread.
//! Panics never cross the boundary and are reported as `QW_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qworkbench::classical_opt::{self, ClassicalError};
use qworkbench::hqnn::{HqnnError, Network};
use qworkbench::quenc::{self, QuencConfig, QuencError, WeightedGraph};
use qworkbench::tensornet::{self, PoissonProblem, SolveConfig, TensorError, TtVector};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QwModel {
    ClassicalClassifier = 0,
    HybridClassifier = 1,
    ClassicalRegressor = 2,
    HybridRegressor = 3,
}

/// Weighted undirected graph.
pub struct QwGraph(WeightedGraph);

/// Converged TT solution of a Poisson problem.
pub struct QwTtSolution {
    tt: TtVector,
    residual: f64,
    sweeps: usize,
}

/// Network with its current parameters.
pub struct QwNetwork(Network);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(QwStatus, String);

impl From<QuencError> for Failure {
    fn from(e: QuencError) -> Self {
        let code = match e {
            QuencError::InvalidGraph(_)
            | QuencError::InvalidConfig(_)
            | QuencError::LengthMismatch { .. }
            | QuencError::Classical(ClassicalError::TooLarge(_) | ClassicalError::InvalidSchedule(_)) => {
                QwStatus::InvalidArgument
            }
            _ => QwStatus::Numeric,
        };
        Failure(code, e.to_string())
    }
}

impl From<ClassicalError> for Failure {
    fn from(e: ClassicalError) -> Self {
        QuencError::from(e).into()
    }
}

impl From<TensorError> for Failure {
    fn from(e: TensorError) -> Self {
        let code = match e {
            TensorError::NotConverged { .. } | TensorError::CgNotConverged { .. } => QwStatus::Numeric,
            _ => QwStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

impl From<HqnnError> for Failure {
    fn from(e: HqnnError) -> Self {
        let code = match e {
            HqnnError::NonFiniteLoss { .. } => QwStatus::Numeric,
            _ => QwStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(QwStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QwStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside qworkbench");
            QwStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(QwStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len` bytes. Returns the untruncated length, so a call with
/// `buf = NULL` sizes the buffer.
///
/// # Safety
/// `buf` is null or valid for `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qw_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Complete graph with weights uniform in [0, 1).
///
/// # Safety
/// `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qw_graph_random_complete(num_nodes: usize, seed: u64, out: *mut *mut QwGraph) -> QwStatus {
    guard(|| {
        non_null(out, "out")?;
        let g = WeightedGraph::random_complete(num_nodes, seed)?;
        *out = Box::into_raw(Box::new(QwGraph(g)));
        Ok(())
    })
}

/// Graph from `num_edges` triples `(from[k], to[k], weight[k])`.
///
/// # Safety
/// The three arrays hold `num_edges` elements; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qw_graph_from_edges(
    num_nodes: usize,
    from: *const usize,
    to: *const usize,
    weight: *const f64,
    num_edges: usize,
    out: *mut *mut QwGraph,
) -> QwStatus {
    guard(|| {
        non_null(out, "out")?;
        let mut edges = Vec::with_capacity(num_edges);
        if num_edges > 0 {
            non_null(from, "from")?;
            non_null(to, "to")?;
            non_null(weight, "weight")?;
            let (f, t, w) = (
                std::slice::from_raw_parts(from, num_edges),
                std::slice::from_raw_parts(to, num_edges),
                std::slice::from_raw_parts(weight, num_edges),
            );
            for k in 0..num_edges {
                edges.push((f[k], t[k], w[k]));
            }
        }
        let g = WeightedGraph::new(num_nodes, edges)?;
        *out = Box::into_raw(Box::new(QwGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `graph` is null or came from a `qw_graph_*` constructor and is not used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn qw_graph_free(graph: *mut QwGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_graph_num_nodes(graph: *const QwGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// MaxCut energy `-cut(x)` of a 0/1 assignment.
///
/// # Safety
/// `x` holds one byte per node; `energy` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qw_maxcut_energy(graph: *const QwGraph, x: *const u8, energy: *mut f64) -> QwStatus {
    guard(|| {
        let g = graph.as_ref().ok_or_else(|| Failure(QwStatus::NullPointer, "graph is null".into()))?;
        non_null(x, "x")?;
        non_null(energy, "energy")?;
        let x = std::slice::from_raw_parts(x, g.0.num_nodes());
        if x.iter().any(|&b| b > 1) {
            return Err(invalid("assignment entries must be 0 or 1"));
        }
        *energy = quenc::maxcut_energy(&g.0, x)?;
        Ok(())
    })
}

unsafe fn write_answer(g: &QwGraph, best: &[u8], e: f64, x_out: *mut u8, energy: *mut f64) {
    ptr::copy_nonoverlapping(best.as_ptr(), x_out, g.0.num_nodes());
    *energy = e;
}

/// Runs QuEnc and writes the best assignment and its energy.
///
/// # Safety
/// `x_out` has room for one byte per node; `energy` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qw_maxcut_quenc(
    graph: *const QwGraph,
    layers: usize,
    max_iters: usize,
    learning_rate: f64,
    seed: u64,
    x_out: *mut u8,
    energy: *mut f64,
) -> QwStatus {
    guard(|| {
        let g = graph.as_ref().ok_or_else(|| Failure(QwStatus::NullPointer, "graph is null".into()))?;
        non_null(x_out, "x_out")?;
        non_null(energy, "energy")?;
        let config = QuencConfig {
            layers,
            max_iters,
            learning_rate,
            seed,
            ..QuencConfig::default()
        };
        let r = quenc::quenc_optimize(&g.0, &config)?;
        write_answer(g, &r.best_x, r.best_energy, x_out, energy);
        Ok(())
    })
}

/// Exact optimum by enumeration; at most 24 nodes.
///
/// # Safety
/// As for [`qw_maxcut_quenc`].
#[no_mangle]
pub unsafe extern "C" fn qw_maxcut_brute_force(graph: *const QwGraph, x_out: *mut u8, energy: *mut f64) -> QwStatus {
    guard(|| {
        let g = graph.as_ref().ok_or_else(|| Failure(QwStatus::NullPointer, "graph is null".into()))?;
        non_null(x_out, "x_out")?;
        non_null(energy, "energy")?;
        let (x, e) = classical_opt::brute_force(&g.0)?;
        write_answer(g, &x, e, x_out, energy);
        Ok(())
    })
}

/// Solves `-Δu = 1` with zero boundary values on `2^levels` points per axis.
///
/// # Safety
/// `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qw_poisson_tt_solve(
    dim: usize,
    levels: usize,
    tolerance: f64,
    max_rank: usize,
    out: *mut *mut QwTtSolution,
) -> QwStatus {
    guard(|| {
        non_null(out, "out")?;
        let problem = PoissonProblem::new(dim, levels)?;
        let config = SolveConfig {
            tolerance,
            max_rank,
            ..SolveConfig::default()
        };
        let b = tensornet::ones_tt(problem.num_cores());
        let sol = tensornet::amen_solve(&problem.operator()?, &b, &config)?;
        *out = Box::into_raw(Box::new(QwTtSolution {
            tt: sol.solution,
            residual: sol.residual,
            sweeps: sol.sweeps,
        }));
        Ok(())
    })
}

/// # Safety
/// `sol` is null or a handle from [`qw_poisson_tt_solve`] not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qw_tt_solution_free(sol: *mut QwTtSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Relative residual; NaN for a null handle.
///
/// # Safety
/// `sol` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_tt_solution_residual(sol: *const QwTtSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.residual)
}

/// # Safety
/// `sol` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_tt_solution_sweeps(sol: *const QwTtSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.sweeps)
}

/// # Safety
/// `sol` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_tt_solution_max_rank(sol: *const QwTtSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.tt.max_rank())
}

/// Writes all grid values in natural order. `len` must equal the number of
/// grid points, which is limited to 2^24.
///
/// # Safety
/// `values` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn qw_tt_solution_values(sol: *const QwTtSolution, values: *mut f64, len: usize) -> QwStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| Failure(QwStatus::NullPointer, "solution is null".into()))?;
        non_null(values, "values")?;
        if s.tt.len() != len as u128 {
            return Err(invalid(format!("buffer holds {len} values, grid has {}", s.tt.len())));
        }
        let dense = tensornet::tt_to_dense(&s.tt)?;
        ptr::copy_nonoverlapping(dense.as_ptr(), values, len);
        Ok(())
    })
}

/// Freshly initialised network of the given kind.
///
/// # Safety
/// `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qw_network_new(model: QwModel, seed: u64, out: *mut *mut QwNetwork) -> QwStatus {
    guard(|| {
        non_null(out, "out")?;
        let net = match model {
            QwModel::ClassicalClassifier => Network::classical_classifier(seed),
            QwModel::HybridClassifier => Network::hybrid_classifier(seed),
            QwModel::ClassicalRegressor => Network::classical_regressor(seed),
            QwModel::HybridRegressor => Network::hybrid_regressor(seed),
        };
        *out = Box::into_raw(Box::new(QwNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `net` is null or a handle from [`qw_network_new`] not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qw_network_free(net: *mut QwNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// # Safety
/// `net` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_network_num_params(net: *const QwNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.num_params())
}

/// Single-output forward pass on `len` input features.
///
/// # Safety
/// `x` holds `len` values; `y` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn qw_network_forward(net: *const QwNetwork, x: *const f64, len: usize, y: *mut f64) -> QwStatus {
    guard(|| {
        let n = net.as_ref().ok_or_else(|| Failure(QwStatus::NullPointer, "network is null".into()))?;
        non_null(x, "x")?;
        non_null(y, "y")?;
        let out = n.0.forward(std::slice::from_raw_parts(x, len))?;
        *y = out[0];
        Ok(())
    })
}
