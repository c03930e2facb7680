//! Quantized tensor-train (QTT) linear algebra and the Poisson solvers.
//!
//! Vectors of length `2^D` are stored as tensor trains with one binary core
//! per bit of the flat index. Core `t` carries bit `t` of the index, so core
//! 0 is the least significant bit. For the 3D grid the `x` bits come first,
//! then `y`, then `z`, which makes the flat index `ix + N*iy + N*N*iz`.

mod amen;
mod cg;
mod core;
mod laplacian;
mod linalg;
mod mpo;
mod tt;

pub use self::amen::{amen_solve, AmenSolution, SolveConfig};
pub use self::cg::{cg_solve, cg_solve_3d, poisson_matvec_1d, poisson_matvec_3d, CgSolution, CG_MAX_POINTS};
pub use self::core::Core;
pub use self::laplacian::{grid_spacing, laplacian_mpo_1d, laplacian_mpo_3d, PoissonProblem};
pub use self::mpo::Mpo;
pub use self::tt::{ones_tt, tt_add, tt_dot, tt_from_dense, tt_round, tt_to_dense, TtVector};

/// Largest number of cores accepted by dense conversions.
pub const MAX_DENSE_CORES: usize = 24;

#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("core count mismatch: {left} vs {right}")]
    CoreCountMismatch { left: usize, right: usize },

    #[error("{cores} cores is too many for a dense conversion (limit {MAX_DENSE_CORES})")]
    TooLargeForDense { cores: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver did not converge after {sweeps} sweeps, relative residual {residual:e}")]
    NotConverged {
        residual: f64,
        sweeps: usize,
        solution: Box<TtVector>,
    },

    #[error("conjugate gradient stopped after {iterations} iterations, relative residual {residual:e}")]
    CgNotConverged { residual: f64, iterations: usize },

    #[error("grid of {points} points exceeds the dense bound of {limit}")]
    GridTooLarge { points: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, TensorError>;
