use super::core::Core;
use super::mpo::{mode, Mpo};
use super::{Result, TensorError};

/// `-Δu = f` on the unit interval or cube with homogeneous Dirichlet data,
/// discretized on `2^levels` interior points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoissonProblem {
    pub dim: usize,
    pub levels: usize,
}

impl PoissonProblem {
    pub fn new(dim: usize, levels: usize) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(TensorError::InvalidArgument(format!("dimension must be 1 or 3, got {dim}")));
        }
        if levels < 1 {
            return Err(TensorError::InvalidArgument("levels must be at least 1".into()));
        }
        Ok(Self { dim, levels })
    }

    pub fn points_per_axis(&self) -> usize {
        1 << self.levels
    }

    pub fn num_cores(&self) -> usize {
        self.dim * self.levels
    }

    /// Total number of unknowns, `2^(dim*levels)`.
    pub fn points(&self) -> u128 {
        1u128 << self.num_cores()
    }

    pub fn spacing(&self) -> f64 {
        grid_spacing(self.levels)
    }

    /// Coordinate of interior grid point `k` along one axis.
    pub fn coordinate(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.spacing()
    }

    pub fn operator(&self) -> Result<Mpo> {
        match self.dim {
            1 => laplacian_mpo_1d(self.levels),
            _ => laplacian_mpo_3d(self.levels),
        }
    }
}

/// `h = 1 / (2^levels + 1)`.
pub fn grid_spacing(levels: usize) -> f64 {
    1.0 / ((1u64 << levels) as f64 + 1.0)
}

// Bond states of the carry automaton. The pending operation travels from
// the least significant core towards the most significant one.
const NONE: usize = 0;
const INC: usize = 1;
const DEC: usize = 2;

/// Digit transitions of `I`, the increment `S` and the decrement `S^T`:
/// `(pending_in, out_bit, in_bit, pending_out)`.
const TRANSITIONS: [(usize, usize, usize, usize); 6] = [
    (NONE, 0, 0, NONE),
    (NONE, 1, 1, NONE),
    (INC, 1, 0, NONE),
    (INC, 0, 1, INC),
    (DEC, 0, 1, NONE),
    (DEC, 1, 0, DEC),
];

/// `(1/h^2) tridiag(-1, 2, -1)` on `2^levels` Dirichlet interior points as a
/// rank-3 MPO.
///
/// The operator is `2I - S - S^T` where the shift `S` adds one to the
/// binary index. A carry or borrow that survives past the most significant
/// bit falls off the grid, which is exactly the Dirichlet truncation.
pub fn laplacian_mpo_1d(levels: usize) -> Result<Mpo> {
    if levels < 1 {
        return Err(TensorError::InvalidArgument("levels must be at least 1".into()));
    }
    let h = grid_spacing(levels);
    let scale = 1.0 / (h * h);
    let start = [2.0 * scale, -scale, -scale];

    let mut cores = Vec::with_capacity(levels);
    for t in 0..levels {
        let left = if t == 0 { 1 } else { 3 };
        let right = if t == levels - 1 { 1 } else { 3 };
        let mut core = Core::zeros(left, 4, right);
        for &(p_in, out_bit, in_bit, p_out) in &TRANSITIONS {
            if t == levels - 1 && p_out != NONE {
                continue;
            }
            let b = if right == 1 { 0 } else { p_out };
            let m = mode(out_bit, in_bit);
            if t == 0 {
                let k = core.index(0, m, b);
                core.data_mut()[k] += start[p_in];
            } else {
                core.set(p_in, m, b, 1.0);
            }
        }
        cores.push(core);
    }
    Mpo::from_cores(cores)
}

/// Seven-point Laplacian on the `2^levels`-per-axis cube, the Kronecker sum
/// of three 1D operators over `3*levels` cores (x bits first).
pub fn laplacian_mpo_3d(levels: usize) -> Result<Mpo> {
    let a = laplacian_mpo_1d(levels)?;
    let id = Mpo::identity(levels);
    let ax = a.concat(&id).concat(&id);
    let ay = id.concat(&a).concat(&id);
    let az = id.concat(&id).concat(&a);
    let sum = ax.add(&ay, 1.0, 1.0)?.add(&az, 1.0, 1.0)?;
    Ok(sum.round(1e-14))
}
