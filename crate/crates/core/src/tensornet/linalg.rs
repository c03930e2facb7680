use nalgebra::{DMatrix, DVector};

pub(crate) struct TruncatedSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<f64>,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `diag(s) * vt`
    pub fn sv(&self) -> DMatrix<f64> {
        let mut m = self.vt.clone();
        for (k, s) in self.s.iter().enumerate() {
            m.row_mut(k).scale_mut(*s);
        }
        m
    }

    pub fn keep(&self, k: usize) -> TruncatedSvd {
        TruncatedSvd {
            u: self.u.columns(0, k).into_owned(),
            s: self.s[..k].to_vec(),
            vt: self.vt.rows(0, k).into_owned(),
        }
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * self.sv()
    }
}

/// Full thin SVD with singular values in descending order.
pub(crate) fn svd(m: DMatrix<f64>) -> TruncatedSvd {
    let svd = m.svd(true, true);
    TruncatedSvd {
        u: svd.u.expect("u requested"),
        s: svd.singular_values.iter().copied().collect(),
        vt: svd.v_t.expect("v_t requested"),
    }
}

/// Smallest rank whose discarded singular values have Frobenius norm at most
/// `delta`, clamped to `[1, max_rank]`.
pub(crate) fn truncation_rank(s: &[f64], delta: f64, max_rank: usize) -> usize {
    let mut tail = 0.0;
    let mut k = s.len();
    while k > 1 {
        let next = tail + s[k - 1] * s[k - 1];
        if next.sqrt() > delta {
            break;
        }
        tail = next;
        k -= 1;
    }
    k.clamp(1, max_rank.max(1))
}

pub(crate) fn truncated_svd(m: DMatrix<f64>, delta: f64, max_rank: usize) -> TruncatedSvd {
    let full = svd(m);
    let k = truncation_rank(&full.s, delta, max_rank).min(full.rank());
    full.keep(k)
}

/// Thin QR returning `(q, r)` with `q` having `min(rows, cols)` orthonormal
/// columns.
pub(crate) fn thin_qr(m: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.qr();
    (qr.q(), qr.r())
}

/// Orthonormal basis of the column space of `m` with numerically null
/// directions dropped (keeps at least one column).
pub(crate) fn orthonormal_columns(m: DMatrix<f64>) -> DMatrix<f64> {
    let full = svd(m);
    let smax = full.s.first().copied().unwrap_or(0.0);
    let cutoff = smax * 1e-13;
    let k = full.s.iter().filter(|s| **s > cutoff).count().max(1);
    full.u.columns(0, k).into_owned()
}

/// Solves `a x = b` for symmetric positive definite `a`, falling back to LU
/// when the Cholesky factorization breaks down.
pub(crate) fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    match a.clone().cholesky() {
        Some(ch) => Some(ch.solve(b)),
        None => a.lu().solve(b),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_rank_respects_tail() {
        let s = [4.0, 2.0, 1e-3, 1e-4];
        assert_eq!(truncation_rank(&s, 0.0, 10), 4);
        assert_eq!(truncation_rank(&s, 2e-3, 10), 2);
        assert_eq!(truncation_rank(&s, 10.0, 10), 1);
        assert_eq!(truncation_rank(&s, 0.0, 3), 3);
    }

    #[test]
    fn svd_reconstructs() {
        let m = DMatrix::from_fn(5, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5) + (i * j) as f64);
        let f = svd(m.clone());
        assert!((f.reconstruct() - &m).norm() < 1e-12);
        assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        let wide = m.transpose();
        let f = svd(wide.clone());
        assert!((f.reconstruct() - wide).norm() < 1e-12);
        let q = orthonormal_columns(DMatrix::from_fn(2, 4, |i, j| (1 + i * 3 + j * j) as f64));
        assert_eq!(q.ncols(), 2);
        assert!((q.transpose() * &q - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
