//! Adam and a central-difference gradient used as a test oracle.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("length mismatch: {params} parameters, {grads} gradients")]
    LengthMismatch { params: usize, grads: usize },
    #[error("non-finite gradient at index {0}")]
    NonFiniteGradient(usize),
    #[error("non-finite function value at index {0}")]
    NonFiniteValue(usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Result<Self, OptimError> {
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(OptimError::InvalidHyperparameter("lr must be positive"));
        }
        Ok(Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        })
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam step, in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), OptimError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(OptimError::LengthMismatch {
                params: params.len(),
                grads: grads.len(),
            });
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(OptimError::NonFiniteGradient(i));
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h`.
pub fn finite_diff_grad<F>(mut f: F, params: &[f64], h: f64) -> Result<Vec<f64>, OptimError>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(OptimError::InvalidHyperparameter("h must be positive"));
    }
    let mut x = params.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let orig = x[k];
        x[k] = orig + h;
        let up = f(&x);
        x[k] = orig - h;
        let down = f(&x);
        x[k] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(OptimError::NonFiniteValue(k));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_is_identity() {
        let mut adam = Adam::new(3, 0.1).unwrap();
        let mut p = vec![1.0, -2.0, 0.5];
        for _ in 0..5 {
            adam.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut adam = Adam::new(1, 0.1).unwrap();
        let mut p = vec![0.0];
        adam.step(&mut p, &[1.0]).unwrap();
        // m_hat = 1, v_hat = 1
        assert!((p[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_validated() {
        let run = || {
            let mut adam = Adam::new(2, 0.01).unwrap();
            let mut p = vec![0.3, 0.4];
            for k in 0..10 {
                adam.step(&mut p, &[k as f64, -1.0]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
        let mut adam = Adam::new(2, 0.01).unwrap();
        assert!(matches!(adam.step(&mut [0.0], &[0.0]), Err(OptimError::LengthMismatch { .. })));
        assert_eq!(adam.step(&mut [0.0, 0.0], &[0.0, f64::INFINITY]), Err(OptimError::NonFiniteGradient(1)));
        assert_eq!(adam.steps(), 0);
        assert!(Adam::new(1, 0.0).is_err());
    }

    #[test]
    fn finite_differences_on_known_functions() {
        let g = finite_diff_grad(|x| x[0] * x[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = finite_diff_grad(|_| 4.0, &[1.0, 2.0], 1e-5).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let g = finite_diff_grad(|x| x[0].cos(), &[0.7], 1e-5).unwrap();
        assert!((g[0] + 0.7f64.sin()).abs() < 1e-6);
        assert!(finite_diff_grad(|x| 1.0 / x[0], &[1e-6], 1e-5).is_ok());
        assert_eq!(finite_diff_grad(|x| x[0].ln(), &[0.0], 1e-5), Err(OptimError::NonFiniteValue(0)));
    }

    proptest! {
        #[test]
        fn step_is_bounded_by_lr(g in prop::collection::vec(-1e6f64..1e6, 1..8), lr in 1e-4f64..1.0) {
            let mut adam = Adam::new(g.len(), lr).unwrap();
            let mut p = vec![0.0; g.len()];
            for _ in 0..3 {
                let before = p.clone();
                adam.step(&mut p, &g).unwrap();
                for (a, b) in p.iter().zip(&before) {
                    prop_assert!((a - b).abs() <= lr / (1.0 - adam.beta1) + 1e-12);
                }
            }
        }

        #[test]
        fn quadratics_are_differentiated_exactly(a in -5.0f64..5.0, b in -5.0f64..5.0, x in -3.0f64..3.0) {
            let g = finite_diff_grad(|v| a * v[0] * v[0] + b * v[0], &[x], 1e-3).unwrap();
            prop_assert!((g[0] - (2.0 * a * x + b)).abs() <= 1e-8);
        }
    }
}
