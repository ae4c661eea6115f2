//! Damped Gauss-Newton with a finite-difference Jacobian.
//!
//! Residual functions map `n` unknowns to `m >= n` residuals. Overdetermined
//! systems are allowed as long as they are consistent; each step is the
//! least-squares solution of the linearized system.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Convergence threshold on the max-norm of the residual.
    pub tolerance: f64,
    /// Central-difference step relative to `max(1, |x_j|)`.
    pub fd_step: f64,
    /// Give up when the squared residual has dropped by less than 10% over this many iterations.
    pub stall_window: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            max_halvings: 20,
            tolerance: 1e-10,
            fd_step: 1e-7,
            stall_window: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    /// Max-norm of the residual at `x` (infinite if it could not be evaluated).
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn max_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |acc, v| {
        if v.is_finite() {
            acc.max(v.abs())
        } else {
            f64::INFINITY
        }
    })
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn eval<F>(f: &F, x: &[f64], r: &mut [f64]) -> bool
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    f(x, r).is_ok() && r.iter().all(|v| v.is_finite())
}

/// Minimizes `|f(x)|` from `x0`; `m` is the residual length.
pub fn damped_newton<F>(f: F, x0: &[f64], m: usize, opts: &NewtonOptions) -> NewtonOutcome
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = vec![0.0; m];
    if !eval(&f, &x, &mut r) {
        return NewtonOutcome {
            x,
            residual: f64::INFINITY,
            iterations: 0,
            converged: false,
        };
    }
    let mut res = max_norm(&r);
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut history = vec![sum_sq(&r)];
    let mut iterations = opts.max_iterations;

    for it in 0..opts.max_iterations {
        if res < opts.tolerance {
            return NewtonOutcome {
                x,
                residual: res,
                iterations: it,
                converged: true,
            };
        }

        let mut xs = x.clone();
        for j in 0..n {
            let h = opts.fd_step * x[j].abs().max(1.0);
            xs[j] = x[j] + h;
            let up = eval(&f, &xs, &mut rp);
            xs[j] = x[j] - h;
            let down = eval(&f, &xs, &mut rm);
            xs[j] = x[j];
            for i in 0..m {
                jac[(i, j)] = match (up, down) {
                    (true, true) => (rp[i] - rm[i]) / (2.0 * h),
                    (true, false) => (rp[i] - r[i]) / h,
                    (false, true) => (r[i] - rm[i]) / h,
                    (false, false) => {
                        return NewtonOutcome {
                            x,
                            residual: res,
                            iterations: it,
                            converged: false,
                        }
                    }
                };
            }
        }

        let rhs = -DVector::from_column_slice(&r);
        let svd = jac.clone().svd(true, true);
        let Ok(step) = svd.solve(&rhs, 1e-14 * svd.singular_values.max().max(1e-300)) else {
            iterations = it;
            break;
        };

        let merit = sum_sq(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        let mut xn = x.clone();
        for _ in 0..=opts.max_halvings {
            for j in 0..n {
                xn[j] = x[j] + lambda * step[j];
            }
            if eval(&f, &xn, &mut trial) && sum_sq(&trial) < merit {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            iterations = it;
            break;
        }
        x.copy_from_slice(&xn);
        r.copy_from_slice(&trial);
        res = max_norm(&r);
        let merit = sum_sq(&r);
        history.push(merit);
        // converging to a nonzero least-squares minimum: no root nearby
        if history.len() > opts.stall_window
            && merit > 0.9 * history[history.len() - 1 - opts.stall_window]
            && res >= opts.tolerance
        {
            return NewtonOutcome {
                x,
                residual: res,
                iterations: it + 1,
                converged: false,
            };
        }
    }

    NewtonOutcome {
        converged: res < opts.tolerance,
        x,
        residual: res,
        iterations,
    }
}
