use rayon::prelude::*;

use super::laplacian::grid_spacing;
use super::{Result, TensorError};

/// Largest grid handled by the matrix-free CG baseline, `2^27` points.
pub const CG_MAX_POINTS: usize = 1 << 27;

/// Reductions are summed per fixed-size chunk and then in order, so results
/// do not depend on the thread count.
const CHUNK: usize = 1 << 14;

#[derive(Clone, Debug)]
pub struct CgSolution {
    /// Grid values with `x` fastest, then `y`, then `z`.
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>())
        .collect();
    partial.iter().sum()
}

/// `y = (1/h^2) * (6u - neighbours)` on the Dirichlet grid with `n` points
/// per axis.
pub fn poisson_matvec_3d(n: usize, h: f64, u: &[f64], y: &mut [f64]) {
    let inv_h2 = 1.0 / (h * h);
    let plane = n * n;
    y.par_chunks_mut(plane).enumerate().for_each(|(iz, out)| {
        for iy in 0..n {
            for ix in 0..n {
                let k = ix + n * iy + plane * iz;
                let mut s = 6.0 * u[k];
                if ix > 0 {
                    s -= u[k - 1];
                }
                if ix + 1 < n {
                    s -= u[k + 1];
                }
                if iy > 0 {
                    s -= u[k - n];
                }
                if iy + 1 < n {
                    s -= u[k + n];
                }
                if iz > 0 {
                    s -= u[k - plane];
                }
                if iz + 1 < n {
                    s -= u[k + plane];
                }
                out[ix + n * iy] = s * inv_h2;
            }
        }
    });
}

/// `y = (1/h^2) * (2u - neighbours)` on `u.len()` Dirichlet points.
pub fn poisson_matvec_1d(h: f64, u: &[f64], y: &mut [f64]) {
    let inv_h2 = 1.0 / (h * h);
    let n = u.len();
    for (k, out) in y.iter_mut().enumerate() {
        let left = if k > 0 { u[k - 1] } else { 0.0 };
        let right = if k + 1 < n { u[k + 1] } else { 0.0 };
        *out = (2.0 * u[k] - left - right) * inv_h2;
    }
}

/// Matrix-free conjugate gradient for `-Δu = rhs` on `2^levels` interior
/// points per axis. Stops once `|r| / |b| <= tol`.
pub fn cg_solve_3d(levels: usize, rhs: f64, tol: f64, max_iters: usize) -> Result<CgSolution> {
    cg_solve(3, levels, rhs, tol, max_iters)
}

/// As [`cg_solve_3d`] for `dim` 1 or 3.
pub fn cg_solve(dim: usize, levels: usize, rhs: f64, tol: f64, max_iters: usize) -> Result<CgSolution> {
    if levels < 1 {
        return Err(TensorError::InvalidArgument("levels must be at least 1".into()));
    }
    if dim != 1 && dim != 3 {
        return Err(TensorError::InvalidArgument(format!("dimension must be 1 or 3, got {dim}")));
    }
    let n = 1usize.checked_shl(levels as u32).unwrap_or(usize::MAX);
    let points = n.checked_pow(dim as u32).filter(|p| *p <= CG_MAX_POINTS).ok_or(TensorError::GridTooLarge {
        points: n.saturating_pow(dim as u32),
        limit: CG_MAX_POINTS,
    })?;
    let h = grid_spacing(levels);
    if dim == 1 {
        run_cg(points, rhs, tol, max_iters, |u, y| poisson_matvec_1d(h, u, y))
    } else {
        run_cg(points, rhs, tol, max_iters, |u, y| poisson_matvec_3d(n, h, u, y))
    }
}

fn run_cg(
    points: usize,
    rhs: f64,
    tol: f64,
    max_iters: usize,
    matvec: impl Fn(&[f64], &mut [f64]),
) -> Result<CgSolution> {
    let mut x = vec![0.0; points];
    if rhs == 0.0 {
        return Ok(CgSolution {
            solution: x,
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![rhs; points];
    let bnorm = dot(&r, &r).sqrt();
    let mut p = r.clone();
    let mut ap = vec![0.0; points];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while rr.sqrt() > tol * bnorm {
        if iterations == max_iters {
            return Err(TensorError::CgNotConverged {
                residual: rr.sqrt() / bnorm,
                iterations,
            });
        }
        matvec(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        x.par_iter_mut().zip(p.par_iter()).for_each(|(xv, pv)| *xv += alpha * pv);
        r.par_iter_mut().zip(ap.par_iter()).for_each(|(rv, av)| *rv -= alpha * av);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p.par_iter_mut().zip(r.par_iter()).for_each(|(pv, rv)| *pv = rv + beta * *pv);
        iterations += 1;
    }
    Ok(CgSolution {
        solution: x,
        iterations,
        residual: rr.sqrt() / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn zero_rhs_returns_immediately() {
        let s = cg_solve_3d(3, 0.0, 1e-8, 10).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(s.solution.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn matches_direct_dense_solve() {
        let levels = 3;
        let n = 8;
        let h = grid_spacing(levels);
        let size = n * n * n;
        // dense assembly of the 7-point stencil, independent of the matvec
        let mut a = DMatrix::<f64>::zeros(size, size);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let k = ix + n * iy + n * n * iz;
                    a[(k, k)] = 6.0 / (h * h);
                    let neighbours = [
                        (ix > 0).then(|| k - 1),
                        (ix + 1 < n).then(|| k + 1),
                        (iy > 0).then(|| k - n),
                        (iy + 1 < n).then(|| k + n),
                        (iz > 0).then(|| k - n * n),
                        (iz + 1 < n).then(|| k + n * n),
                    ];
                    for m in neighbours.into_iter().flatten() {
                        a[(k, m)] = -1.0 / (h * h);
                    }
                }
            }
        }
        let direct = a.cholesky().unwrap().solve(&DVector::from_element(size, 1.0));
        let s = cg_solve_3d(levels, 1.0, 1e-12, 10_000).unwrap();
        assert!(s.residual <= 1e-12);
        for (x, y) in s.solution.iter().zip(direct.iter()) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn one_dimensional_solve_is_the_parabola() {
        // the discrete solution of the 3-point stencil is exact for quadratics
        let s = cg_solve(1, 6, 1.0, 1e-13, 1000).unwrap();
        let h = grid_spacing(6);
        for (k, v) in s.solution.iter().enumerate() {
            let x = (k + 1) as f64 * h;
            assert!((v - x * (1.0 - x) / 2.0).abs() < 1e-10);
        }
        assert!(s.iterations <= 64);
        assert!(cg_solve(2, 3, 1.0, 1e-8, 10).is_err());
    }

    #[test]
    fn rejects_oversized_grid() {
        assert!(matches!(cg_solve_3d(10, 1.0, 1e-8, 10), Err(TensorError::GridTooLarge { .. })));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        match cg_solve_3d(4, 1.0, 1e-12, 3) {
            Err(TensorError::CgNotConverged { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
