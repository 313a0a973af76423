//! Quasi-Newton minimization of a sum of squared residuals over ℝ⁶.
//!
//! The gradient of `f(x) = ‖r(x)‖²` is assembled as `2 Jᵀ r` from a
//! central-difference Jacobian of the residual map. Differencing `r` rather
//! than `f` keeps the gradient exactly zero wherever `r` vanishes, so noiseless
//! problems converge to the exact solution instead of a truncation-biased one.

use nalgebra::{DVector, SMatrix, SVector};

pub(crate) type Params = SVector<f64, 6>;
type Hessian = SMatrix<f64, 6, 6>;

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const FAILURES_BEFORE_SIMPLEX: usize = 3;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iters: usize,
    pub fd_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Params,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub simplex_restarts: usize,
}

struct Problem<F> {
    residual: F,
    fd_step: f64,
}

impl<F> Problem<F>
where
    F: Fn(&Params) -> DVector<f64>,
{
    fn value(&self, x: &Params) -> f64 {
        let v = (self.residual)(x).norm_squared();
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    fn gradient(&self, x: &Params, r: &DVector<f64>) -> Params {
        let mut g = Params::zeros();
        for i in 0..6 {
            let h = self.fd_step * x[i].abs().max(1.0);
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            // Use the actually representable step.
            let span = xp[i] - xm[i];
            let column = ((self.residual)(&xp) - (self.residual)(&xm)) / span;
            g[i] = 2.0 * column.dot(r);
        }
        g
    }
}

/// BFGS on the inverse Hessian with backtracking Armijo line search.
///
/// Converges when `‖∇f‖∞ ≤ grad_tol · max(1, f)` or an accepted step is no
/// longer than `step_tol`. After three consecutive line-search failures a
/// Nelder–Mead pass restarts the search from its best vertex.
pub(crate) fn minimize<F>(residual: F, x0: Params, settings: &Settings) -> Outcome
where
    F: Fn(&Params) -> DVector<f64>,
{
    let problem = Problem {
        residual,
        fd_step: settings.fd_step,
    };
    let mut x = x0;
    let r0 = (problem.residual)(&x);
    let mut f = r0.norm_squared();
    let mut g = problem.gradient(&x, &r0);
    let mut h_inv = Hessian::identity();
    let mut fresh_hessian = true;
    let mut failures = 0usize;
    let mut simplex_restarts = 0usize;
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < settings.max_iters {
        if !f.is_finite() {
            break;
        }
        if g.amax() <= settings.grad_tol * f.max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut p = -(h_inv * g);
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            h_inv = Hessian::identity();
            fresh_hessian = true;
            p = -g;
            slope = g.dot(&p);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            if (p * alpha).amax() <= settings.step_tol {
                break;
            }
            let trial = x + p * alpha;
            let f_trial = problem.value(&trial);
            if f_trial <= f + ARMIJO_C * alpha * slope {
                accepted = Some((trial, f_trial));
                break;
            }
            alpha *= BACKTRACK;
        }

        let Some((x_new, _)) = accepted else {
            if (p * alpha).amax() <= settings.step_tol {
                // No representable decrease along a vanishing step.
                converged = true;
                break;
            }
            failures += 1;
            h_inv = Hessian::identity();
            fresh_hessian = true;
            if failures >= FAILURES_BEFORE_SIMPLEX {
                failures = 0;
                simplex_restarts += 1;
                let (x_nm, f_nm) = nelder_mead(&problem, &x, f, settings.max_iters.min(2000));
                if f_nm < f {
                    x = x_nm;
                    let r = (problem.residual)(&x);
                    f = r.norm_squared();
                    g = problem.gradient(&x, &r);
                } else {
                    break;
                }
            }
            continue;
        };
        failures = 0;

        let r_new = (problem.residual)(&x_new);
        let f_new = r_new.norm_squared();
        let g_new = problem.gradient(&x_new, &r_new);
        let s = x_new - x;
        let y = g_new - g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh_hessian {
                h_inv = Hessian::identity() * (sy / y.norm_squared());
                fresh_hessian = false;
            }
            let rho = 1.0 / sy;
            let id = Hessian::identity();
            let left = id - s * y.transpose() * rho;
            let right = id - y * s.transpose() * rho;
            h_inv = left * h_inv * right + s * s.transpose() * rho;
        }

        x = x_new;
        f = f_new;
        g = g_new;
        if s.amax() <= settings.step_tol {
            converged = true;
            break;
        }
    }

    Outcome {
        x,
        value: f,
        iterations,
        converged,
        simplex_restarts,
    }
}

/// Plain Nelder–Mead (reflection 1, expansion 2, contraction ½, shrink ½).
fn nelder_mead<F>(problem: &Problem<F>, start: &Params, f_start: f64, max_iters: usize) -> (Params, f64)
where
    F: Fn(&Params) -> DVector<f64>,
{
    let mut simplex: Vec<(Params, f64)> = Vec::with_capacity(7);
    simplex.push((*start, f_start));
    for i in 0..6 {
        let mut v = *start;
        v[i] += 0.05 * start[i].abs().max(0.1);
        simplex.push((v, problem.value(&v)));
    }

    for _ in 0..max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[6].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| (v - simplex[0].0).amax())
            .fold(0.0, f64::max);
        if size <= 1e-14 || spread <= 1e-30 {
            break;
        }
        let centroid = simplex[..6].iter().fold(Params::zeros(), |acc, (v, _)| acc + v) / 6.0;
        let worst = simplex[6];
        let reflected = centroid + (centroid - worst.0);
        let f_reflected = problem.value(&reflected);

        if f_reflected < simplex[0].1 {
            let expanded = centroid + (centroid - worst.0) * 2.0;
            let f_expanded = problem.value(&expanded);
            simplex[6] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[5].1 {
            simplex[6] = (reflected, f_reflected);
        } else {
            let contracted = if f_reflected < worst.1 {
                centroid + (reflected - centroid) * 0.5
            } else {
                centroid + (worst.0 - centroid) * 0.5
            };
            let f_contracted = problem.value(&contracted);
            if f_contracted < worst.1.min(f_reflected) {
                simplex[6] = (contracted, f_contracted);
            } else {
                let best = simplex[0].0;
                for vertex in simplex.iter_mut().skip(1) {
                    let v = best + (vertex.0 - best) * 0.5;
                    *vertex = (v, problem.value(&v));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> Settings {
        Settings {
            grad_tol: 1e-12,
            step_tol: 1e-14,
            max_iters: 10_000,
            fd_step: 1e-6,
        }
    }

    #[test]
    fn solves_linear_least_squares() {
        let target = Params::from_column_slice(&[1.0, -2.0, 0.5, 3.0, 0.0, -1.5]);
        let scales = Params::from_column_slice(&[1.0, 10.0, 0.1, 2.0, 5.0, 0.5]);
        let residual = |x: &Params| DVector::from_iterator(6, (0..6).map(|i| scales[i] * (x[i] - target[i])));
        let out = minimize(residual, Params::zeros(), &settings());
        assert!(out.converged);
        assert!((out.x - target).amax() < 1e-10, "{:?}", out.x);
    }

    #[test]
    fn solves_rosenbrock_style_residuals() {
        // r = (10(x1 − x0²), 1 − x0) per pair; minimum at all ones.
        let residual = |x: &Params| {
            let mut r = DVector::zeros(6);
            for k in 0..3 {
                r[2 * k] = 10.0 * (x[2 * k + 1] - x[2 * k] * x[2 * k]);
                r[2 * k + 1] = 1.0 - x[2 * k];
            }
            r
        };
        let out = minimize(residual, Params::from_element(-1.2), &settings());
        assert!(out.converged);
        assert!((out.x - Params::from_element(1.0)).amax() < 1e-8);
    }

    #[test]
    fn reports_iteration_cap() {
        let residual = |x: &Params| DVector::from_iterator(6, x.iter().map(|v| v * v * v - 1.0));
        let mut s = settings();
        s.max_iters = 2;
        let out = minimize(residual, Params::from_element(10.0), &s);
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
    }

    #[test]
    fn nelder_mead_improves_from_bad_start() {
        let problem = Problem {
            residual: |x: &Params| DVector::from_iterator(6, x.iter().map(|v| v - 0.3)),
            fd_step: 1e-6,
        };
        let start = Params::zeros();
        let (x, f) = nelder_mead(&problem, &start, problem.value(&start), 5000);
        assert!(f < 1e-10);
        assert!((x - Params::from_element(0.3)).amax() < 1e-5);
    }
}
