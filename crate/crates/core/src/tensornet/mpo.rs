use super::core::Core;
use super::tt::{add_cores, cores_to_dense, round_cores, validate_chain, TtVector};
use super::{Result, TensorError};

/// A `2^D x 2^D` matrix as a matrix product operator.
///
/// Core `t` has shape `(R_t, 4, R_{t+1})`; the mode index is `i + 2*j`
/// where `i` is the output (row) bit and `j` the input (column) bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    cores: Vec<Core>,
}

/// Dense conversions are limited to `2^12 x 2^12`.
const MAX_DENSE_MPO_CORES: usize = 12;

#[inline]
pub(crate) fn mode(i: usize, j: usize) -> usize {
    i + 2 * j
}

impl Mpo {
    pub fn from_cores(cores: Vec<Core>) -> Result<Self> {
        validate_chain(&cores, 4)?;
        Ok(Self { cores })
    }

    pub fn identity(num_cores: usize) -> Self {
        let core = Core::from_data(1, 4, 1, vec![1.0, 0.0, 0.0, 1.0]);
        Self {
            cores: vec![core; num_cores],
        }
    }

    pub fn num_cores(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.cores[1..].iter().map(Core::left).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Operator acting with `self` on the low bits and `high` on the high
    /// bits.
    pub fn concat(&self, high: &Mpo) -> Mpo {
        let mut cores = self.cores.clone();
        cores.extend(high.cores.iter().cloned());
        Mpo { cores }
    }

    pub fn add(&self, other: &Mpo, alpha: f64, beta: f64) -> Result<Mpo> {
        if self.num_cores() != other.num_cores() {
            return Err(TensorError::CoreCountMismatch {
                left: self.num_cores(),
                right: other.num_cores(),
            });
        }
        Ok(Mpo {
            cores: add_cores(&self.cores, &other.cores, alpha, beta),
        })
    }

    /// Compresses bond ranks, treating each core as a TT core of mode 4.
    pub fn round(&self, tol: f64) -> Mpo {
        Mpo {
            cores: round_cores(self.cores.clone(), tol, usize::MAX),
        }
    }

    /// Row-major dense matrix, feasible for at most 12 cores.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let d = self.num_cores();
        if d > MAX_DENSE_MPO_CORES {
            return Err(TensorError::TooLargeForDense { cores: d });
        }
        let flat = cores_to_dense(&self.cores);
        let n = 1usize << d;
        let mut out = vec![0.0; n * n];
        for (k, v) in flat.iter().enumerate() {
            let (mut row, mut col) = (0usize, 0usize);
            for t in 0..d {
                let m = (k >> (2 * t)) & 3;
                row |= (m & 1) << t;
                col |= (m >> 1) << t;
            }
            out[row * n + col] = *v;
        }
        Ok(out)
    }

    /// Matrix-vector product in TT form; bond ranks multiply.
    pub fn apply(&self, x: &TtVector) -> Result<TtVector> {
        mpo_apply(self, x)
    }
}

pub(crate) fn apply_core(w: &Core, x: &Core) -> Core {
    let (wl, wr, xl, xr) = (w.left(), w.right(), x.left(), x.right());
    let mut out = Core::zeros(wl * xl, 2, wr * xr);
    for b in 0..xr {
        for beta in 0..wr {
            let cr = beta + wr * b;
            for i in 0..2 {
                for j in 0..2 {
                    let m = mode(i, j);
                    for a in 0..xl {
                        let xv = x.get(a, j, b);
                        if xv == 0.0 {
                            continue;
                        }
                        for alpha in 0..wl {
                            let wv = w.get(alpha, m, beta);
                            if wv != 0.0 {
                                let k = out.index(alpha + wl * a, i, cr);
                                out.data_mut()[k] += wv * xv;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// `op * x`; per-bond rank of the result is `R_t * r_t`, round afterwards.
pub fn mpo_apply(op: &Mpo, x: &TtVector) -> Result<TtVector> {
    if op.num_cores() != x.num_cores() {
        return Err(TensorError::CoreCountMismatch {
            left: op.num_cores(),
            right: x.num_cores(),
        });
    }
    let cores = op.cores.iter().zip(x.cores()).map(|(w, c)| apply_core(w, c)).collect();
    Ok(TtVector::from_cores_unchecked(cores))
}
