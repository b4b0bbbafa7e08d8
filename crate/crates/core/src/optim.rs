//! Quasi-Newton minimizer used by the Gaussian-process maximum likelihood
//! fits: BFGS with Armijo backtracking on an objective that may be
//! infeasible (returns `None`) at some points, e.g. when a covariance
//! factorization fails.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

pub(crate) struct Options {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iter: 120,
            grad_tol: 1e-5,
        }
    }
}

pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Objective value after each accepted step, for monotonicity checks.
    pub trajectory: Vec<f64>,
}

/// Minimizes `f`, which returns the value and writes the gradient, or `None`
/// where the objective is not defined. Returns `None` if the start itself is
/// infeasible.
pub(crate) fn bfgs<F>(mut f: F, x0: &[f64], opts: &Options) -> Option<Minimum>
where
    F: FnMut(&[f64], &mut [f64]) -> Option<f64>,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut g = DVector::zeros(n);
    let mut gbuf = alloc::vec![0.0; n];
    let mut fx = f(x.as_slice(), &mut gbuf)?;
    g.copy_from_slice(&gbuf);

    let mut h = DMatrix::<f64>::identity(n, n);
    let mut trajectory = alloc::vec![fx];

    for _ in 0..opts.max_iter {
        let gnorm = g.amax();
        if gnorm <= opts.grad_tol * (1.0 + fx.abs()) {
            break;
        }
        let mut dir = -(&h * &g);
        if dir.dot(&g) >= 0.0 {
            // Reset on a non-descent direction.
            h = DMatrix::identity(n, n);
            dir = -g.clone();
        }

        // Armijo backtracking.
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted: Option<(DVector<f64>, f64, DVector<f64>)> = None;
        for _ in 0..40 {
            let xn = &x + &dir * step;
            if let Some(fn_) = f(xn.as_slice(), &mut gbuf) {
                if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                    accepted = Some((xn, fn_, DVector::from_column_slice(&gbuf)));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };

        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            // BFGS update of the inverse Hessian.
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            let ss = &s * s.transpose();
            let hys = &hy * s.transpose();
            h += ss * (rho * (1.0 + rho * yhy)) - (&hys + hys.transpose()) * rho;
        }
        x = xn;
        fx = fn_;
        g = gn;
        trajectory.push(fx);
    }

    Some(Minimum {
        x: x.as_slice().to_vec(),
        value: fx,
        grad_norm: g.amax(),
        trajectory,
    })
}
