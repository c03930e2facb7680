use nalgebra::{DMatrix, DMatrixView};
use rand::Rng;

use super::core::Core;
use super::linalg::{thin_qr, truncated_svd};
use super::{Result, TensorError, MAX_DENSE_CORES};

/// A vector of length `2^D` in tensor-train format.
///
/// Core `t` has shape `(r_t, 2, r_{t+1})` with `r_0 = r_D = 1` and carries
/// bit `t` of the flat index.
#[derive(Clone, Debug, PartialEq)]
pub struct TtVector {
    cores: Vec<Core>,
}

impl TtVector {
    pub fn from_cores(cores: Vec<Core>) -> Result<Self> {
        validate_chain(&cores, 2)?;
        Ok(Self { cores })
    }

    pub(crate) fn from_cores_unchecked(cores: Vec<Core>) -> Self {
        debug_assert!(validate_chain(&cores, 2).is_ok());
        Self { cores }
    }

    /// Random cores with the given interior bond ranks (length `D - 1`).
    pub fn random<R: Rng>(num_cores: usize, ranks: &[usize], rng: &mut R) -> Self {
        assert!(num_cores >= 1);
        assert_eq!(ranks.len(), num_cores - 1, "interior rank count");
        let bond = |t: usize| {
            if t == 0 || t == num_cores {
                1
            } else {
                ranks[t - 1]
            }
        };
        let cores = (0..num_cores)
            .map(|t| {
                let (l, r) = (bond(t), bond(t + 1));
                let data = (0..l * 2 * r).map(|_| rng.random_range(-1.0..1.0)).collect();
                Core::from_data(l, 2, r, data)
            })
            .collect();
        Self { cores }
    }

    pub fn num_cores(&self) -> usize {
        self.cores.len()
    }

    /// Length of the represented vector.
    pub fn len(&self) -> u128 {
        1u128 << self.cores.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub(crate) fn into_cores(self) -> Vec<Core> {
        self.cores
    }

    /// Interior bond ranks `r_1 .. r_{D-1}`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[1..].iter().map(Core::left).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Number of stored floating point values.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.data().len()).sum()
    }

    /// Evaluates a single entry by multiplying the core slices selected by
    /// the bits of `index`.
    pub fn entry(&self, index: u128) -> f64 {
        let mut row = vec![1.0];
        for (t, core) in self.cores.iter().enumerate() {
            let bit = ((index >> t) & 1) as usize;
            let mut next = vec![0.0; core.right()];
            for (b, out) in next.iter_mut().enumerate() {
                *out = row.iter().enumerate().map(|(a, v)| v * core.get(a, bit, b)).sum();
            }
            row = next;
        }
        row[0]
    }

    /// Euclidean norm, computed by orthogonalization rather than `sqrt(<x, x>)`
    /// so that small differences of large vectors stay accurate.
    pub fn norm(&self) -> f64 {
        let mut cores = self.cores.clone();
        right_orthogonalize(&mut cores);
        cores[0].frobenius_norm()
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.cores[0].scale(factor);
        self
    }

    /// The same vector with the bit order reversed.
    pub(crate) fn reversed(&self) -> Self {
        Self {
            cores: reverse_cores(&self.cores),
        }
    }
}

pub(crate) fn reverse_cores(cores: &[Core]) -> Vec<Core> {
    cores.iter().rev().map(Core::transpose_bonds).collect()
}

pub(crate) fn validate_chain(cores: &[Core], mode: usize) -> Result<()> {
    if cores.is_empty() {
        return Err(TensorError::InvalidArgument("tensor train needs at least one core".into()));
    }
    if cores[0].left() != 1 || cores[cores.len() - 1].right() != 1 {
        return Err(TensorError::InvalidArgument("boundary ranks must be 1".into()));
    }
    for (t, c) in cores.iter().enumerate() {
        if c.mode() != mode {
            return Err(TensorError::InvalidArgument(format!(
                "core {t} has mode size {}, expected {mode}",
                c.mode()
            )));
        }
    }
    for (t, w) in cores.windows(2).enumerate() {
        if w[0].right() != w[1].left() {
            return Err(TensorError::InvalidArgument(format!(
                "rank mismatch between cores {t} and {}",
                t + 1
            )));
        }
    }
    Ok(())
}

fn check_same_length(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(TensorError::CoreCountMismatch { left: a, right: b });
    }
    Ok(())
}

/// Successive truncated SVDs of the unfoldings of `vector`.
///
/// Each step discards at most `tol * |vector| / sqrt(D - 1)` in Frobenius
/// norm, so the reconstruction error is bounded by `tol * |vector|`.
pub fn tt_from_dense(vector: &[f64], tol: f64) -> Result<TtVector> {
    let n = vector.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(TensorError::NotPowerOfTwo(n));
    }
    if !(tol >= 0.0) {
        return Err(TensorError::InvalidArgument("tolerance must be non-negative".into()));
    }
    let d = n.trailing_zeros() as usize;
    let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    let delta = if d > 1 { tol * norm / ((d - 1) as f64).sqrt() } else { 0.0 };

    let mut cores = Vec::with_capacity(d);
    let mut rest = vector.to_vec();
    let mut left = 1;
    let mut cols = n;
    for _ in 0..d - 1 {
        cols /= 2;
        let m = DMatrix::from_column_slice(left * 2, cols, &rest);
        let f = truncated_svd(m, delta, usize::MAX);
        cores.push(Core::from_left_unfolding(&f.u, left, 2));
        left = f.rank();
        rest = f.sv().as_slice().to_vec();
    }
    cores.push(Core::from_data(left, 2, 1, rest));
    Ok(TtVector { cores })
}

pub(crate) fn cores_to_dense(cores: &[Core]) -> Vec<f64> {
    let mut acc = DMatrix::from_element(1, 1, 1.0);
    for core in cores {
        let rows = acc.nrows();
        let prod = &acc * core.right_unfolding();
        acc = DMatrix::from_column_slice(rows * core.mode(), core.right(), prod.as_slice());
    }
    acc.as_slice().to_vec()
}

pub fn tt_to_dense(tt: &TtVector) -> Result<Vec<f64>> {
    if tt.num_cores() > MAX_DENSE_CORES {
        return Err(TensorError::TooLargeForDense { cores: tt.num_cores() });
    }
    Ok(cores_to_dense(&tt.cores))
}

pub(crate) fn add_cores(a: &[Core], b: &[Core], alpha: f64, beta: f64) -> Vec<Core> {
    let d = a.len();
    if d == 1 {
        let data = a[0]
            .data()
            .iter()
            .zip(b[0].data())
            .map(|(x, y)| alpha * x + beta * y)
            .collect();
        return vec![Core::from_data(1, a[0].mode(), 1, data)];
    }
    let mut out = Vec::with_capacity(d);
    for t in 0..d {
        let (ca, cb) = (&a[t], &b[t]);
        let n = ca.mode();
        let first = t == 0;
        let last = t == d - 1;
        let left = if first { 1 } else { ca.left() + cb.left() };
        let right = if last { 1 } else { ca.right() + cb.right() };
        let mut c = Core::zeros(left, n, right);
        let (sa, sb) = if first { (alpha, beta) } else { (1.0, 1.0) };
        for bi in 0..ca.right() {
            for i in 0..n {
                for ai in 0..ca.left() {
                    c.set(ai, i, bi, sa * ca.get(ai, i, bi));
                }
            }
        }
        let (lo, ro) = (if first { 0 } else { ca.left() }, if last { 0 } else { ca.right() });
        for bi in 0..cb.right() {
            for i in 0..n {
                for ai in 0..cb.left() {
                    c.set(lo + ai, i, ro + bi, sb * cb.get(ai, i, bi));
                }
            }
        }
        out.push(c);
    }
    out
}

/// `alpha * a + beta * b`; bond ranks add.
pub fn tt_add(a: &TtVector, b: &TtVector, alpha: f64, beta: f64) -> Result<TtVector> {
    check_same_length(a.num_cores(), b.num_cores())?;
    Ok(TtVector {
        cores: add_cores(&a.cores, &b.cores, alpha, beta),
    })
}

pub(crate) fn dot_cores(a: &[Core], b: &[Core]) -> f64 {
    let mut m = DMatrix::from_element(1, 1, 1.0);
    for (ca, cb) in a.iter().zip(b) {
        let t = &m * cb.right_unfolding();
        let t = DMatrixView::from_slice(t.as_slice(), ca.left() * ca.mode(), cb.right());
        m = ca.left_unfolding().transpose() * t;
    }
    m[(0, 0)]
}

pub fn tt_dot(a: &TtVector, b: &TtVector) -> Result<f64> {
    check_same_length(a.num_cores(), b.num_cores())?;
    Ok(dot_cores(&a.cores, &b.cores))
}

/// Makes cores `1..D` right-orthonormal, moving the weight into core 0.
pub(crate) fn right_orthogonalize(cores: &mut [Core]) {
    for t in (1..cores.len()).rev() {
        let mode = cores[t].mode();
        let right = cores[t].right();
        let (q, r) = thin_qr(cores[t].right_unfolding().transpose());
        cores[t] = Core::from_right_unfolding(&q.transpose(), mode, right);
        let prev = &cores[t - 1];
        let merged = prev.left_unfolding() * r.transpose();
        cores[t - 1] = Core::from_left_unfolding(&merged, prev.left(), prev.mode());
    }
}

pub(crate) fn round_cores(mut cores: Vec<Core>, tol: f64, max_rank: usize) -> Vec<Core> {
    let d = cores.len();
    if d == 1 {
        return cores;
    }
    right_orthogonalize(&mut cores);
    let norm = cores[0].frobenius_norm();
    let delta = tol * norm / ((d - 1) as f64).sqrt();
    for t in 0..d - 1 {
        let (left, mode) = (cores[t].left(), cores[t].mode());
        let f = truncated_svd(cores[t].left_unfolding().into_owned(), delta, max_rank);
        cores[t] = Core::from_left_unfolding(&f.u, left, mode);
        let next = &cores[t + 1];
        let merged = f.sv() * next.right_unfolding();
        cores[t + 1] = Core::from_right_unfolding(&merged, next.mode(), next.right());
    }
    cores
}

/// Recompresses `tt` so that `|out - tt| <= tol * |tt|` with bond ranks at
/// most `max_rank`. When the rank cap binds, it takes priority over `tol`.
pub fn tt_round(tt: &TtVector, tol: f64, max_rank: usize) -> TtVector {
    TtVector {
        cores: round_cores(tt.cores.clone(), tol.max(0.0), max_rank.max(1)),
    }
}

/// The all-ones vector of length `2^num_cores`, every rank 1.
pub fn ones_tt(num_cores: usize) -> TtVector {
    assert!(num_cores >= 1, "need at least one core");
    TtVector {
        cores: (0..num_cores).map(|_| Core::from_data(1, 2, 1, vec![1.0, 1.0])).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense_dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn ones_vector_has_unit_ranks() {
        let tt = tt_from_dense(&[1.0; 8], 1e-12).unwrap();
        assert_eq!(tt.ranks(), vec![1, 1]);
        let ones = ones_tt(3);
        assert_eq!(tt_to_dense(&ones).unwrap(), vec![1.0; 8]);
        assert_eq!(tt_dot(&ones, &ones).unwrap(), 8.0);
    }

    #[test]
    fn basis_vector_has_unit_ranks() {
        let mut v = vec![0.0; 16];
        v[0] = 1.0;
        let tt = tt_from_dense(&v, 0.0).unwrap();
        assert_eq!(tt.ranks(), vec![1, 1, 1]);
    }

    #[test]
    fn dense_round_trip_is_exact_at_zero_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tt = tt_from_dense(&v, 0.0).unwrap();
        assert!(dist(&tt_to_dense(&tt).unwrap(), &v) < 1e-12);
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(tt_from_dense(&[1.0; 6], 0.0), Err(TensorError::NotPowerOfTwo(6))));
    }

    #[test]
    fn entries_follow_core_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tt = TtVector::random(4, &[2, 3, 2], &mut rng);
        let dense = tt_to_dense(&tt).unwrap();
        for (k, v) in dense.iter().enumerate() {
            // independent evaluation: explicit slice products
            let mut row = vec![1.0];
            for (t, core) in tt.cores().iter().enumerate() {
                let bit = (k >> t) & 1;
                row = (0..core.right())
                    .map(|b| (0..core.left()).map(|a| row[a] * core.data()[a + core.left() * (bit + 2 * b)]).sum())
                    .collect();
            }
            assert!((row[0] - v).abs() < 1e-12);
            assert!((tt.entry(k as u128) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn add_matches_dense_and_ranks_add() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = TtVector::random(4, &[2, 2, 2], &mut rng);
        let b = TtVector::random(4, &[3, 3, 3], &mut rng);
        let s = tt_add(&a, &b, 0.7, -1.3).unwrap();
        assert!(s.ranks().iter().all(|r| *r <= 5));
        let (da, db, ds) = (tt_to_dense(&a).unwrap(), tt_to_dense(&b).unwrap(), tt_to_dense(&s).unwrap());
        for k in 0..16 {
            assert!((ds[k] - (0.7 * da[k] - 1.3 * db[k])).abs() < 1e-12);
        }
        let zero = tt_round(&tt_add(&a, &a, 1.0, -1.0).unwrap(), 1e-12, 64);
        assert!(zero.norm() < 1e-12);
    }

    #[test]
    fn norm_resolves_small_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = TtVector::random(10, &[3; 9], &mut rng);
        let e = TtVector::random(10, &[2; 9], &mut rng);
        let eps = 1e-10 * a.norm() / e.norm();
        let diff = tt_add(&tt_add(&a, &e, 1.0, eps).unwrap(), &a, 1.0, -1.0).unwrap();
        let rel = diff.norm() / (eps * e.norm());
        assert!((rel - 1.0).abs() < 1e-4, "{rel}");
    }

    #[test]
    fn dot_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let a = TtVector::random(4, &[2, 3, 2], &mut rng);
            let b = TtVector::random(4, &[3, 2, 2], &mut rng);
            let exact = dense_dot(&tt_to_dense(&a).unwrap(), &tt_to_dense(&b).unwrap());
            let got = tt_dot(&a, &b).unwrap();
            assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        }
        let mut e0 = vec![0.0; 4];
        let mut e1 = vec![0.0; 4];
        e0[0] = 1.0;
        e1[1] = 1.0;
        let (t0, t1) = (tt_from_dense(&e0, 0.0).unwrap(), tt_from_dense(&e1, 0.0).unwrap());
        assert!(tt_dot(&t0, &t1).unwrap().abs() < 1e-14);
    }

    #[test]
    fn round_recovers_low_rank_ones() {
        let ones = ones_tt(5);
        let doubled = tt_add(&ones, &ones, 0.5, 0.5).unwrap();
        assert_eq!(doubled.max_rank(), 2);
        let r = tt_round(&doubled, 1e-12, 10);
        assert_eq!(r.ranks(), vec![1; 4]);
        assert!(dist(&tt_to_dense(&r).unwrap(), &[1.0; 32]) < 1e-12);
    }

    #[test]
    fn round_error_bound_and_idempotence() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tt = TtVector::random(5, &[2, 4, 4, 2], &mut rng);
        let dense = tt_to_dense(&tt).unwrap();
        let norm = dense_dot(&dense, &dense).sqrt();
        for tol in [1e-8, 1e-2, 0.3] {
            let r = tt_round(&tt, tol, 64);
            assert!(dist(&tt_to_dense(&r).unwrap(), &dense) <= tol * norm * (1.0 + 1e-12));
        }
        let once = tt_round(&tt, 1e-8, 64);
        let twice = tt_round(&once, 1e-8, 64);
        assert!(dist(&tt_to_dense(&once).unwrap(), &tt_to_dense(&twice).unwrap()) < 1e-12 * norm);
    }

    #[test]
    fn mismatched_lengths_error() {
        assert!(tt_dot(&ones_tt(3), &ones_tt(4)).is_err());
        assert!(tt_add(&ones_tt(3), &ones_tt(4), 1.0, 1.0).is_err());
    }

    #[test]
    fn reversal_reverses_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tt = TtVector::random(4, &[2, 2, 2], &mut rng);
        let rev = tt.reversed();
        let (d, r) = (tt_to_dense(&tt).unwrap(), tt_to_dense(&rev).unwrap());
        for k in 0..16usize {
            let kr = (k.reverse_bits() >> (usize::BITS - 4)) as usize;
            assert!((d[k] - r[kr]).abs() < 1e-14);
        }
    }
}
