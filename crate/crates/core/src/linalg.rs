//! Small dense real linear algebra.
//!
//! Everything here works on matrices of at most a few dozen entries per side:
//! a one-sided Jacobi SVD, a shifted power iteration for the algebraically
//! largest eigenpair of a symmetric 4×4 matrix, the 4×4 matrix exponential by
//! scaling and squaring, the principal real logarithm by inverse scaling and
//! squaring, and the Moore-Penrose pseudoinverse.

use nalgebra::{DMatrix, DVector, Matrix4, Schur, Vector4};

use crate::error::{Error, Result};

/// Default relative cutoff below which singular values are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Full singular value decomposition `M = U · diag(σ) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// m×m orthogonal.
    pub u: DMatrix<f64>,
    /// min(m, n) values, nonincreasing.
    pub singular_values: Vec<f64>,
    /// n×n orthogonal.
    pub v: DMatrix<f64>,
}

impl Svd {
    /// Rebuilds `U · Σ · Vᵀ` with a rectangular Σ.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut sigma = DMatrix::zeros(m, n);
        for (i, s) in self.singular_values.iter().enumerate() {
            sigma[(i, i)] = *s;
        }
        &self.u * sigma * self.v.transpose()
    }
}

pub(crate) fn ensure_finite<'a, I>(entries: I, what: &'static str) -> Result<()>
where
    I: IntoIterator<Item = &'a f64>,
{
    if entries.into_iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
///
/// The rotations act on the smaller dimension, so a 4×n input costs 6 column
/// pairs per sweep regardless of n.
pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::Empty("svd input"));
    }
    ensure_finite(m.iter(), "svd input")?;

    // Orthogonalize the columns of g (p×k, k ≤ p): g·w = left·Σ.
    let transposed = m.nrows() < m.ncols();
    let mut g = if transposed { m.transpose() } else { m.clone() };
    let (p, k) = g.shape();
    let mut w = DMatrix::<f64>::identity(k, k);

    // Columns below this squared norm are numerically zero; their
    // orthogonality to the rest is irrelevant.
    let floor = (f64::EPSILON * m.norm()).powi(2);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let alpha = g.column(i).norm_squared();
                let beta = g.column(j).norm_squared();
                let gamma = g.column(i).dot(&g.column(j));
                if alpha <= floor || beta <= floor || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut g, i, j, c, s);
                rotate_columns(&mut w, i, j, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations: JACOBI_MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = (0..k).map(|i| g.column(i).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));

    let sigma_max = norms[order[0]];
    let cutoff = sigma_max * f64::EPSILON * p as f64;
    let mut left = Vec::with_capacity(p);
    let mut right = DMatrix::zeros(k, k);
    let mut singular_values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        right.set_column(dst, &w.column(src));
        if s > cutoff && s > 0.0 {
            left.push(g.column(src) / s);
        }
    }
    // Left vectors for numerically zero singular values are arbitrary; any
    // orthonormal completion gives an exact decomposition.
    let left = complete_orthonormal_basis(left, p);

    let (u, v) = if transposed {
        (right, left)
    } else {
        (left, right)
    };
    Ok(Svd {
        u,
        singular_values,
        v,
    })
}

fn rotate_columns(a: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..a.nrows() {
        let ai = a[(r, i)];
        let aj = a[(r, j)];
        a[(r, i)] = c * ai - s * aj;
        a[(r, j)] = s * ai + c * aj;
    }
}

/// Extends an orthonormal set to a basis of ℝ^dim, re-orthogonalizing the
/// given vectors against each other on the way.
fn complete_orthonormal_basis(vectors: Vec<DVector<f64>>, dim: usize) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim);
    for v in vectors {
        if let Some(q) = orthonormalize_against(&basis, v) {
            basis.push(q);
        }
    }
    while basis.len() < dim {
        // Greedily add the standard basis vector with the largest component
        // outside the current span.
        let best = (0..dim)
            .map(|j| {
                let mut e = DVector::zeros(dim);
                e[j] = 1.0;
                let r = project_out(&basis, e);
                (r.norm(), r)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("dim > 0");
        let q = orthonormalize_against(&basis, best.1).expect("residual of a standard vector");
        basis.push(q);
    }
    DMatrix::from_columns(&basis)
}

fn project_out(basis: &[DVector<f64>], mut v: DVector<f64>) -> DVector<f64> {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
    }
    v
}

fn orthonormalize_against(basis: &[DVector<f64>], v: DVector<f64>) -> Option<DVector<f64>> {
    let r = project_out(basis, v);
    let n = r.norm();
    (n > 1e-8).then(|| r / n)
}

/// Algebraically largest eigenvalue and a unit eigenvector of a symmetric 4×4
/// matrix.
///
/// Power iteration on `S + μI`, `μ = ‖S‖_F + 1`, which makes every shifted
/// eigenvalue positive so the dominant one is the largest in the algebraic
/// sense. The iteration matrix is squared after each step, so iteration `k`
/// applies `(S + μI)^(2^k)`; slow gaps still converge in a few dozen steps.
/// Converges when `‖Se − λe‖ ≤ tol · ‖S‖_F` and `(λ + δ)I − S` admits a
/// Cholesky factorization, which certifies that no larger eigenvalue was
/// missed. A start vector orthogonal to the dominant eigenvector fails that
/// check and the iteration restarts from the next of four orthogonal starts.
pub fn principal_eigenpair(s: &Matrix4<f64>, tol: f64, max_iter: usize) -> Result<(f64, Vector4<f64>)> {
    ensure_finite(s.iter(), "eigenpair input")?;
    let scale = s.norm();
    if (s - s.transpose()).norm() > 1e-10 * scale {
        return Err(Error::InvalidInput("eigenpair input is not symmetric".into()));
    }
    if scale == 0.0 {
        return Ok((0.0, Vector4::new(1.0, 0.0, 0.0, 0.0)));
    }

    let starts = [
        Vector4::new(0.5, 0.5, 0.5, 0.5),
        Vector4::new(0.5, -0.5, 0.5, -0.5),
        Vector4::new(0.5, 0.5, -0.5, -0.5),
        Vector4::new(0.5, -0.5, -0.5, 0.5),
    ];
    let mut used = 0;
    for start in starts {
        let mut b = s + Matrix4::identity() * (scale + 1.0);
        b /= b.norm();
        let mut v = start;
        let mut last_rayleigh = f64::NAN;
        while used < max_iter {
            used += 1;
            let next = b * v;
            let len = next.norm();
            if len < 1e-150 || !len.is_finite() {
                break;
            }
            v = next / len;
            let rayleigh = v.dot(&(s * v));
            if (s * v - v * rayleigh).norm() <= tol * scale {
                if is_upper_bound(s, rayleigh, scale) {
                    return Ok((rayleigh, v));
                }
                // Converged to a subdominant eigenvector.
                break;
            }
            if rayleigh == last_rayleigh && used > 64 {
                break;
            }
            last_rayleigh = rayleigh;
            b = b * b;
            let bn = b.norm();
            if bn == 0.0 || !bn.is_finite() {
                break;
            }
            b /= bn;
        }
    }
    Err(Error::Convergence { iterations: used })
}

/// True when `λ + δ` bounds every eigenvalue of `s` from above.
fn is_upper_bound(s: &Matrix4<f64>, lambda: f64, scale: f64) -> bool {
    let delta = 1e-10 * scale;
    (Matrix4::identity() * (lambda + delta) - s).cholesky().is_some()
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor
/// polynomial. The scaling `s` gives `‖M‖_F / 2^s ≤ 0.5`.
pub fn mat_exp_series(m: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    ensure_finite(m.iter(), "exponential input")?;
    Ok(exp_series_unchecked(m))
}

pub(crate) fn exp_series_unchecked(m: &Matrix4<f64>) -> Matrix4<f64> {
    let norm = m.norm();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = m / 2f64.powi(squarings as i32);

    // Horner: I + X(I + X/2(I + X/3(...)))
    let id = Matrix4::identity();
    let mut acc = id;
    for k in (1..=18).rev() {
        acc = id + scaled * acc / k as f64;
    }
    for _ in 0..squarings {
        acc = acc * acc;
    }
    acc
}

// Gauss-Legendre nodes and weights on [-1, 1], 7 points. The quadrature
// rule for ∫₀¹ X (I + tX)⁻¹ dt is the [7/7] Padé approximant of log(I + X).
const GL7_NODES: [f64; 7] = [
    -0.949_107_912_342_758_5,
    -0.741_531_185_599_394_4,
    -0.405_845_151_377_397_2,
    0.0,
    0.405_845_151_377_397_2,
    0.741_531_185_599_394_4,
    0.949_107_912_342_758_5,
];
const GL7_WEIGHTS: [f64; 7] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_6,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_9,
    0.279_705_391_489_276_6,
    0.129_484_966_168_869_7,
];

const LOG_SQRT_TARGET: f64 = 0.25;
const LOG_MAX_SQRTS: usize = 64;

/// Principal real logarithm by inverse scaling and squaring.
///
/// Takes Denman–Beavers square roots until `‖M^(1/2^k) − I‖_F ≤ 0.25`,
/// applies the [7/7] Padé approximant of `log(I + X)`, and scales back by
/// `2^k`. Fails when `M` is singular or has an eigenvalue on the closed
/// negative real axis.
pub fn mat_log_real(m: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    ensure_finite(m.iter(), "logarithm input")?;
    check_principal_log_exists(m)?;

    let id = Matrix4::identity();
    let mut root = *m;
    let mut k = 0usize;
    while (root - id).norm() > LOG_SQRT_TARGET {
        if k == LOG_MAX_SQRTS {
            return Err(Error::NotInIdentityComponent(format!(
                "no convergence toward the identity after {k} square roots"
            )));
        }
        root = sqrt_denman_beavers(&root)?;
        k += 1;
    }

    let x = root - id;
    let mut log = Matrix4::zeros();
    for (node, weight) in GL7_NODES.iter().zip(GL7_WEIGHTS) {
        let t = 0.5 * (node + 1.0);
        let inv = (id + x * t)
            .try_inverse()
            .ok_or_else(|| Error::NotInIdentityComponent("singular Padé denominator".into()))?;
        log += x * inv * (0.5 * weight);
    }
    Ok(log * 2f64.powi(k as i32))
}

fn check_principal_log_exists(m: &Matrix4<f64>) -> Result<()> {
    let scale = m.norm();
    if scale == 0.0 {
        return Err(Error::NotInIdentityComponent("zero matrix".into()));
    }
    // Every eigenvalue lies within ‖M − I‖₂ ≤ ‖M − I‖_F of 1.
    if (m - Matrix4::identity()).norm() < 1.0 {
        return Ok(());
    }
    // An uncapped Schur iteration can cycle; if it gives up, the square-root
    // iteration is left to reject bad inputs.
    let Some(schur) = Schur::try_new(*m, f64::EPSILON, 10_000) else {
        return Ok(());
    };
    for lambda in schur.complex_eigenvalues().iter() {
        let modulus = lambda.norm();
        if modulus <= 1e-14 * scale {
            return Err(Error::NotInIdentityComponent("singular matrix".into()));
        }
        if lambda.re < 0.0 && lambda.im.abs() <= 1e-12 * modulus {
            return Err(Error::NotInIdentityComponent(format!(
                "eigenvalue {} on the negative real axis",
                lambda.re
            )));
        }
    }
    Ok(())
}

fn sqrt_denman_beavers(m: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let singular = || Error::NotInIdentityComponent("singular iterate in square root".into());
    let mut y = *m;
    let mut z = Matrix4::identity();
    let mut prev_step = f64::INFINITY;
    for _ in 0..100 {
        let y_inv = y.try_inverse().ok_or_else(singular)?;
        let z_inv = z.try_inverse().ok_or_else(singular)?;
        let y_next = (y + z_inv) * 0.5;
        z = (z + y_inv) * 0.5;
        let step = (y_next - y).norm();
        let size = y_next.norm();
        y = y_next;
        if step <= 1e-15 * size || (step >= prev_step && prev_step <= 1e-10 * size) {
            return Ok(y);
        }
        prev_step = step;
    }
    Err(Error::NotInIdentityComponent(
        "square-root iteration did not converge".into(),
    ))
}

/// Moore-Penrose pseudoinverse with its numerical rank.
#[derive(Debug, Clone)]
pub struct Pseudoinverse {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

impl Pseudoinverse {
    /// True when the effective rank is below `min(rows, cols)` of the input.
    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.singular_values.len()
    }
}

/// `X⁺ = V Σ⁺ Uᵀ`, with singular values below `rank_tol · σ₁` treated as zero.
pub fn pseudoinverse(x: &DMatrix<f64>, rank_tol: f64) -> Result<Pseudoinverse> {
    let dec = svd(x)?;
    let (m, n) = x.shape();
    let cutoff = rank_tol * dec.singular_values[0];
    let mut rank = 0;
    let mut sigma_inv = DMatrix::zeros(n, m);
    for (i, &s) in dec.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            sigma_inv[(i, i)] = 1.0 / s;
            rank += 1;
        }
    }
    Ok(Pseudoinverse {
        matrix: &dec.v * sigma_inv * dec.u.transpose(),
        rank,
        singular_values: dec.singular_values,
    })
}
