use nalgebra::{DMatrix, DMatrixView};

/// A three-way tensor `(left, mode, right)` stored column-major, so element
/// `(a, i, b)` lives at `a + left * (i + mode * b)`.
///
/// With this layout both unfoldings, `(left*mode) x right` and
/// `left x (mode*right)`, are plain column-major matrices over the same
/// buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Core {
    left: usize,
    mode: usize,
    right: usize,
    data: Vec<f64>,
}

impl Core {
    pub fn zeros(left: usize, mode: usize, right: usize) -> Self {
        Self {
            left,
            mode,
            right,
            data: vec![0.0; left * mode * right],
        }
    }

    pub fn from_data(left: usize, mode: usize, right: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), left * mode * right, "core buffer size");
        Self {
            left,
            mode,
            right,
            data,
        }
    }

    pub(crate) fn from_left_unfolding(m: &DMatrix<f64>, left: usize, mode: usize) -> Self {
        debug_assert_eq!(m.nrows(), left * mode);
        Self::from_data(left, mode, m.ncols(), m.as_slice().to_vec())
    }

    pub(crate) fn from_right_unfolding(m: &DMatrix<f64>, mode: usize, right: usize) -> Self {
        debug_assert_eq!(m.ncols(), mode * right);
        Self::from_data(m.nrows(), mode, right, m.as_slice().to_vec())
    }

    #[inline]
    pub fn left(&self) -> usize {
        self.left
    }

    #[inline]
    pub fn mode(&self) -> usize {
        self.mode
    }

    #[inline]
    pub fn right(&self) -> usize {
        self.right
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, a: usize, i: usize, b: usize) -> usize {
        a + self.left * (i + self.mode * b)
    }

    #[inline]
    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[self.index(a, i, b)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, i: usize, b: usize, value: f64) {
        let k = self.index(a, i, b);
        self.data[k] = value;
    }

    pub(crate) fn left_unfolding(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.left * self.mode, self.right)
    }

    pub(crate) fn right_unfolding(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.left, self.mode * self.right)
    }

    /// Swaps the two bond indices; used to run a sweep in the opposite
    /// direction.
    pub(crate) fn transpose_bonds(&self) -> Self {
        let mut out = Core::zeros(self.right, self.mode, self.left);
        for b in 0..self.right {
            for i in 0..self.mode {
                for a in 0..self.left {
                    out.set(b, i, a, self.get(a, i, b));
                }
            }
        }
        out
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
