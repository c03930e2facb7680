//! Alternating minimal energy solver for `A x = b` with `A` symmetric
//! positive definite in MPO form.
//!
//! Each half-sweep visits the cores in order. At core `t` the operator is
//! projected onto the current interface bases, the small SPD system is
//! solved, the solution is truncated by a local-residual criterion, and the
//! new left basis is enriched with a projection of the global residual. The
//! residual projection is carried by an auxiliary low-rank tensor train `z`
//! which is itself updated by the same sweep.
//!
//! Right-to-left passes reuse the left-to-right code on the bit-reversed
//! problem.

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::core::Core;
use super::linalg::{norm, orthonormal_columns, solve_spd, svd, thin_qr};
use super::mpo::{mode, mpo_apply, Mpo};
use super::tt::{right_orthogonalize, tt_add, TtVector};
use super::{Result, TensorError};

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    /// Target for `|Ax - b| / |b|`.
    pub tolerance: f64,
    /// Maximum number of sweeps, each one pass in both directions.
    pub max_sweeps: usize,
    pub max_rank: usize,
    /// Rank of the residual tensor used to enrich the bases.
    pub enrichment: usize,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_sweeps: 20,
            max_rank: 128,
            enrichment: 4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AmenSolution {
    pub solution: TtVector,
    /// Final `|Ax - b| / |b|`, evaluated in TT arithmetic.
    pub residual: f64,
    pub sweeps: usize,
    /// Relative residual after every sweep.
    pub residual_history: Vec<f64>,
}

/// Local systems up to this size are factorized densely.
const DENSE_LOCAL_MAX: usize = 700;

/// Three-index environment `(p, alpha, q)`: `p` indexes the bra basis,
/// `alpha` the operator bond and `q` the ket basis.
#[derive(Clone, Debug)]
struct Env {
    p: usize,
    r: usize,
    q: usize,
    data: Vec<f64>,
}

impl Env {
    fn unit() -> Self {
        Env {
            p: 1,
            r: 1,
            q: 1,
            data: vec![1.0],
        }
    }

    #[inline]
    fn get(&self, p: usize, a: usize, q: usize) -> f64 {
        self.data[p + self.p * (a + self.r * q)]
    }

    /// `(p*r) x q` view.
    fn as_pr_q(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.p * self.r, self.q)
    }

    /// `p x (r*q)` view.
    fn as_p_rq(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.p, self.r * self.q)
    }
}

fn nonzeros(w: &Core) -> Vec<(usize, usize, usize, usize, f64)> {
    let mut out = Vec::new();
    for beta in 0..w.right() {
        for i in 0..2 {
            for j in 0..2 {
                for alpha in 0..w.left() {
                    let v = w.get(alpha, mode(i, j), beta);
                    if v != 0.0 {
                        out.push((alpha, i, j, beta, v));
                    }
                }
            }
        }
    }
    out
}

/// `T2[p, i, beta, q'] = sum W[alpha, (i,j), beta] T1[p, alpha, j, q']`.
fn contract_operator(t1: &[f64], p: usize, w: &Core, q_right: usize) -> Vec<f64> {
    let (r0, r1) = (w.left(), w.right());
    let mut t2 = vec![0.0; p * 2 * r1 * q_right];
    for (alpha, i, j, beta, v) in nonzeros(w) {
        for qr in 0..q_right {
            let src = p * (alpha + r0 * (j + 2 * qr));
            let dst = p * (i + 2 * (beta + r1 * qr));
            let (s, d) = (&t1[src..src + p], &mut t2[dst..dst + p]);
            for (d, s) in d.iter_mut().zip(s) {
                *d += v * s;
            }
        }
    }
    t2
}

/// Environment at bond `t+1` from the one at bond `t`.
fn extend_left(env: &Env, bra: &Core, w: &Core, ket: &Core) -> Env {
    let t1 = env.as_pr_q() * ket.right_unfolding();
    let t2 = contract_operator(t1.as_slice(), env.p, w, ket.right());
    let t2 = DMatrixView::from_slice(&t2, env.p * 2, w.right() * ket.right());
    let out = bra.left_unfolding().transpose() * t2;
    Env {
        p: bra.right(),
        r: w.right(),
        q: ket.right(),
        data: out.as_slice().to_vec(),
    }
}

/// Environment at bond `t` from the one at bond `t+1`.
fn extend_right(env: &Env, bra: &Core, w: &Core, ket: &Core) -> Env {
    // T1[q, j, p', beta] = sum_q' V[q, j, q'] E[p', beta, q']
    let e_t = DMatrixView::from_slice(&env.data, env.p * env.r, env.q).transpose();
    let t1 = ket.left_unfolding() * e_t;
    let (q, pr, r0) = (ket.left(), env.p, w.left());
    let t1 = t1.as_slice();
    // T2[(i, p'), (alpha, q)]
    let mut t2 = vec![0.0; 2 * pr * r0 * q];
    let rows = 2 * pr;
    for (alpha, i, j, beta, v) in nonzeros(w) {
        for qq in 0..q {
            for pp in 0..pr {
                let s = t1[qq + q * j + 2 * q * (pp + pr * beta)];
                t2[(i + 2 * pp) + rows * (alpha + r0 * qq)] += v * s;
            }
        }
    }
    let t2 = DMatrixView::from_slice(&t2, rows, r0 * q);
    let out = bra.right_unfolding() * t2;
    Env {
        p: bra.left(),
        r: r0,
        q,
        data: out.as_slice().to_vec(),
    }
}

/// `Y[p, i, p'] = sum EL[p, a, q] W[a, (i,j), b] ER[p', b, q'] X[q, j, q']`.
fn local_apply(el: &Env, w: &Core, er: &Env, x: &Core) -> Core {
    let t1 = el.as_pr_q() * x.right_unfolding();
    let t2 = contract_operator(t1.as_slice(), el.p, w, x.right());
    let t2 = DMatrixView::from_slice(&t2, el.p * 2, w.right() * x.right());
    let y = t2 * er.as_p_rq().transpose();
    Core::from_data(el.p, 2, er.p, y.as_slice().to_vec())
}

fn local_diagonal(el: &Env, w: &Core, er: &Env) -> Vec<f64> {
    let (p, pr) = (el.p, er.p);
    let mut diag = vec![0.0; p * 2 * pr];
    for (alpha, i, j, beta, v) in nonzeros(w) {
        if i != j {
            continue;
        }
        for b in 0..pr {
            let e = v * er.get(b, beta, b);
            for a in 0..p {
                diag[a + p * (i + 2 * b)] += e * el.get(a, alpha, a);
            }
        }
    }
    diag
}

fn local_dense(el: &Env, w: &Core, er: &Env) -> DMatrix<f64> {
    let (p, pr) = (el.p, er.p);
    let n = p * 2 * pr;
    let mut m = DMatrix::zeros(n, n);
    for (alpha, i, j, beta, v) in nonzeros(w) {
        for qr in 0..pr {
            for b in 0..pr {
                let e = v * er.get(b, beta, qr);
                if e == 0.0 {
                    continue;
                }
                let col0 = p * (j + 2 * qr);
                let row0 = p * (i + 2 * b);
                for q in 0..p {
                    let col = col0 + q;
                    for a in 0..p {
                        m[(row0 + a, col)] += e * el.get(a, alpha, q);
                    }
                }
            }
        }
    }
    m
}

fn sub(a: &Core, b: &Core) -> Core {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
    Core::from_data(a.left(), a.mode(), a.right(), data)
}

fn identity_core() -> Core {
    Core::from_data(1, 4, 1, vec![1.0, 0.0, 0.0, 1.0])
}

struct LocalSystem<'a> {
    el: &'a Env,
    w: &'a Core,
    er: &'a Env,
}

impl LocalSystem<'_> {
    fn apply(&self, x: &Core) -> Core {
        local_apply(self.el, self.w, self.er, x)
    }

    fn shape(&self) -> (usize, usize) {
        (self.el.p, self.er.p)
    }

    fn residual(&self, x: &Core, rhs: &Core) -> f64 {
        norm(sub(&self.apply(x), rhs).data())
    }

    /// Solves the projected system, warm-started from `guess`.
    fn solve(&self, rhs: &Core, guess: &Core, rel_tol: f64) -> Core {
        let (p, pr) = self.shape();
        let n = p * 2 * pr;
        if n <= DENSE_LOCAL_MAX {
            let m = local_dense(self.el, self.w, self.er);
            let b = DVector::from_column_slice(rhs.data());
            if let Some(x) = solve_spd(m, &b) {
                return Core::from_data(p, 2, pr, x.as_slice().to_vec());
            }
        }
        self.pcg(rhs, guess, rel_tol, 4 * n)
    }

    /// Jacobi-preconditioned conjugate gradient on the local system.
    fn pcg(&self, rhs: &Core, guess: &Core, rel_tol: f64, max_iters: usize) -> Core {
        let diag = local_diagonal(self.el, self.w, self.er);
        let inv: Vec<f64> = diag.iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
        let bnorm = norm(rhs.data());
        let mut x = if guess.data().len() == rhs.data().len() {
            guess.clone()
        } else {
            Core::zeros(rhs.left(), 2, rhs.right())
        };
        if bnorm == 0.0 {
            return Core::zeros(rhs.left(), 2, rhs.right());
        }
        let mut r = sub(rhs, &self.apply(&x));
        let mut z: Vec<f64> = r.data().iter().zip(&inv).map(|(a, b)| a * b).collect();
        let mut pdir = Core::from_data(rhs.left(), 2, rhs.right(), z.clone());
        let mut rz: f64 = r.data().iter().zip(&z).map(|(a, b)| a * b).sum();
        for _ in 0..max_iters {
            if norm(r.data()) <= rel_tol * bnorm {
                break;
            }
            let ap = self.apply(&pdir);
            let pap: f64 = pdir.data().iter().zip(ap.data()).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for (xv, pv) in x.data_mut().iter_mut().zip(pdir.data()) {
                *xv += alpha * pv;
            }
            for (rv, av) in r.data_mut().iter_mut().zip(ap.data()) {
                *rv -= alpha * av;
            }
            z = r.data().iter().zip(&inv).map(|(a, b)| a * b).collect();
            let rz_new: f64 = r.data().iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for (pv, zv) in pdir.data_mut().iter_mut().zip(&z) {
                *pv = zv + beta * *pv;
            }
        }
        x
    }
}

/// Relative residual `|Ax - b| / |b|` computed without rounding.
pub(crate) fn relative_residual(a: &Mpo, x: &TtVector, b: &TtVector) -> Result<f64> {
    let ax = mpo_apply(a, x)?;
    let r = tt_add(&ax, b, 1.0, -1.0)?;
    let bn = b.norm();
    Ok(if bn > 0.0 { r.norm() / bn } else { r.norm() })
}

fn random_cores(num_cores: usize, rank: usize, rng: &mut ChaCha8Rng) -> Vec<Core> {
    let ranks: Vec<usize> = (1..num_cores)
        .map(|t| {
            let cap = 1usize.checked_shl(t.min(num_cores - t) as u32).unwrap_or(usize::MAX);
            rank.min(cap).max(1)
        })
        .collect();
    TtVector::random(num_cores, &ranks, rng).into_cores()
}

struct Problem {
    a: Vec<Core>,
    b: Vec<Core>,
    x: Vec<Core>,
    z: Vec<Core>,
}

impl Problem {
    fn reverse(&mut self) {
        for v in [&mut self.a, &mut self.b, &mut self.x, &mut self.z] {
            *v = v.iter().rev().map(Core::transpose_bonds).collect();
        }
    }
}

/// One left-to-right pass. Expects `x` and `z` right-orthonormal from core
/// 1 on; leaves `x` left-orthonormal up to the last core.
fn half_sweep(pb: &mut Problem, config: &SolveConfig) {
    let d = pb.x.len();
    let id = identity_core();
    let local_tol = config.tolerance / (d as f64).sqrt();

    // right environments, indexed by bond
    let mut xax_r = vec![Env::unit(); d + 1];
    let mut xb_r = vec![Env::unit(); d + 1];
    let mut zax_r = vec![Env::unit(); d + 1];
    let mut zb_r = vec![Env::unit(); d + 1];
    for t in (1..d).rev() {
        xax_r[t] = extend_right(&xax_r[t + 1], &pb.x[t], &pb.a[t], &pb.x[t]);
        xb_r[t] = extend_right(&xb_r[t + 1], &pb.x[t], &id, &pb.b[t]);
        zax_r[t] = extend_right(&zax_r[t + 1], &pb.z[t], &pb.a[t], &pb.x[t]);
        zb_r[t] = extend_right(&zb_r[t + 1], &pb.z[t], &id, &pb.b[t]);
    }

    let (mut xax_l, mut xb_l, mut zax_l, mut zb_l) = (Env::unit(), Env::unit(), Env::unit(), Env::unit());
    for t in 0..d {
        let sys = LocalSystem {
            el: &xax_l,
            w: &pb.a[t],
            er: &xax_r[t + 1],
        };
        let rhs = local_apply(&xb_l, &id, &xb_r[t + 1], &pb.b[t]);
        let rhs_norm = norm(rhs.data());
        let sol = sys.solve(&rhs, &pb.x[t], 0.1 * local_tol);

        if t == d - 1 {
            pb.x[t] = sol;
            break;
        }

        let (p, pr) = sys.shape();
        let full = svd(DMatrix::from_column_slice(p * 2, pr, sol.data()));
        let cap = full.rank().min(config.max_rank);
        let truncated = |k: usize| {
            let f = full.keep(k);
            Core::from_data(p, 2, pr, f.reconstruct().as_slice().to_vec())
        };
        // smallest rank meeting the local residual target
        let target = local_tol * rhs_norm;
        let (mut lo, mut hi) = (1, cap);
        if sys.residual(&truncated(hi), &rhs) <= target {
            while lo < hi {
                let mid = (lo + hi) / 2;
                if sys.residual(&truncated(mid), &rhs) <= target {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
        }
        let k = hi;
        let kept = full.keep(k);
        let x_trunc = truncated(k);

        // residual projection for the auxiliary tensor
        let z_core = sub(
            &local_apply(&zb_l, &id, &zb_r[t + 1], &pb.b[t]),
            &local_apply(&zax_l, &pb.a[t], &zax_r[t + 1], &x_trunc),
        );
        let (zq, _) = thin_qr(z_core.left_unfolding().into_owned());
        let z_new = Core::from_left_unfolding(&zq, z_core.left(), 2);

        // enrichment of the left basis
        let room = config.max_rank.saturating_sub(k);
        let basis = if room > 0 {
            let e = sub(
                &local_apply(&xb_l, &id, &zb_r[t + 1], &pb.b[t]),
                &local_apply(&xax_l, &pb.a[t], &zax_r[t + 1], &x_trunc),
            );
            let mut extra = e.left_unfolding().into_owned();
            extra -= &kept.u * (kept.u.transpose() * &extra);
            if extra.norm() > 1e-12 * (1.0 + e.frobenius_norm()) {
                let more = orthonormal_columns(extra);
                let more = more.columns(0, more.ncols().min(room).min(p * 2 - k));
                let mut stacked = DMatrix::zeros(p * 2, k + more.ncols());
                stacked.columns_mut(0, k).copy_from(&kept.u);
                stacked.columns_mut(k, more.ncols()).copy_from(&more);
                // one more pass keeps the stacked columns orthonormal to rounding
                thin_qr(stacked).0
            } else {
                kept.u.clone()
            }
        } else {
            kept.u.clone()
        };

        // carry the coefficients into the next core
        let coeff = basis.transpose() * (&kept.u * kept.sv());
        let next = &pb.x[t + 1];
        let merged = coeff * next.right_unfolding();
        pb.x[t + 1] = Core::from_right_unfolding(&merged, 2, next.right());
        pb.x[t] = Core::from_left_unfolding(&basis, p, 2);

        let new_xax = extend_left(&xax_l, &pb.x[t], &pb.a[t], &pb.x[t]);
        let new_xb = extend_left(&xb_l, &pb.x[t], &id, &pb.b[t]);
        let new_zax = extend_left(&zax_l, &z_new, &pb.a[t], &pb.x[t]);
        let new_zb = extend_left(&zb_l, &z_new, &id, &pb.b[t]);
        pb.z[t] = z_new;
        xax_l = new_xax;
        xb_l = new_xb;
        zax_l = new_zax;
        zb_l = new_zb;
    }
    // z core at the end is only a placeholder for the next reversed sweep
    let last = d - 1;
    if pb.z[last].left() != pb.z[last - 1].right() {
        let l = pb.z[last - 1].right();
        pb.z[last] = Core::from_data(l, 2, 1, vec![1.0 / (2.0 * l as f64).sqrt(); l * 2]);
    }
}

/// Solves `a x = b` for symmetric positive definite `a`.
///
/// Returns [`TensorError::NotConverged`], carrying the last iterate and its
/// residual, when `max_sweeps` half-sweeps do not reach the tolerance.
pub fn amen_solve(a: &Mpo, b: &TtVector, config: &SolveConfig) -> Result<AmenSolution> {
    let d = b.num_cores();
    if a.num_cores() != d {
        return Err(TensorError::CoreCountMismatch {
            left: a.num_cores(),
            right: d,
        });
    }
    if !(config.tolerance > 0.0) || config.max_rank == 0 || config.max_sweeps == 0 {
        return Err(TensorError::InvalidArgument(
            "tolerance must be positive and max_rank, max_sweeps at least 1".into(),
        ));
    }
    if b.norm() == 0.0 {
        return Ok(AmenSolution {
            solution: b.clone(),
            residual: 0.0,
            sweeps: 0,
            residual_history: Vec::new(),
        });
    }
    if d == 1 {
        return solve_single_core(a, b);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x = b.cores().to_vec();
    right_orthogonalize(&mut x);
    let mut z = random_cores(d, config.enrichment.max(1), &mut rng);
    right_orthogonalize(&mut z);
    let mut pb = Problem {
        a: a.cores().to_vec(),
        b: b.cores().to_vec(),
        x,
        z,
    };

    // A sweep is a left-to-right pass followed by a right-to-left pass. The
    // residual is checked after both halves; the history keeps one entry per
    // sweep because the first half on its own can overshoot.
    let mut history = Vec::new();
    let mut reversed = false;
    for sweep in 1..=config.max_sweeps {
        let mut res = f64::INFINITY;
        for _ in 0..2 {
            half_sweep(&mut pb, config);
            pb.reverse();
            reversed = !reversed;
            res = current_residual(&pb)?;
            if res <= config.tolerance {
                break;
            }
        }
        history.push(res);
        if res <= config.tolerance || sweep == config.max_sweeps {
            let x = TtVector::from_cores_unchecked(pb.x.clone());
            let solution = if reversed { x.reversed() } else { x };
            if res <= config.tolerance {
                return Ok(AmenSolution {
                    solution,
                    residual: res,
                    sweeps: sweep,
                    residual_history: history,
                });
            }
            return Err(TensorError::NotConverged {
                residual: res,
                sweeps: sweep,
                solution: Box::new(solution),
            });
        }
    }
    unreachable!("loop returns on the last sweep")
}

fn current_residual(pb: &Problem) -> Result<f64> {
    let x = TtVector::from_cores_unchecked(pb.x.clone());
    let op = Mpo::from_cores(pb.a.clone())?;
    let rhs = TtVector::from_cores_unchecked(pb.b.clone());
    relative_residual(&op, &x, &rhs)
}

fn solve_single_core(a: &Mpo, b: &TtVector) -> Result<AmenSolution> {
    let dense = a.to_dense()?;
    let m = DMatrix::from_row_slice(2, 2, &dense);
    let rhs = DVector::from_column_slice(b.cores()[0].data());
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| TensorError::InvalidArgument("singular operator".into()))?;
    let solution = TtVector::from_cores(vec![Core::from_data(1, 2, 1, x.as_slice().to_vec())])?;
    let residual = relative_residual(a, &solution, b)?;
    Ok(AmenSolution {
        solution,
        residual,
        sweeps: 1,
        residual_history: vec![residual],
    })
}
