//! Lorentz alignment: find Λ ∈ SO(3,1)+ with `Λ xᵢ ≈ yᵢ`.
//!
//! Data are 4×n matrices whose columns are the paired 4-vectors. Two solvers
//! are provided:
//!
//! * [`align_direct`] minimizes `Σ ‖yᵢ − exp(A(ζ, θ)) xᵢ‖²` over the six
//!   algebra coordinates with a quasi-Newton method. The norm is the
//!   Euclidean norm of the components, not the Minkowski norm.
//! * [`align_lie`] fits the unconstrained linear map `Λ₀ = Y X⁺`, takes its
//!   principal logarithm, projects that onto so(3,1) and exponentiates.
//!
//! Both return matrices that are group elements by construction.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{exp_lorentz, project_to_algebra, FourVector, LorentzAlgebraElement, LorentzMatrix};
use crate::linalg::{ensure_finite, mat_log_real, pseudoinverse, Pseudoinverse, DEFAULT_RANK_TOL};
use crate::optimize::{self, Params, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    LieAlgebra,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Direct, Method::LieAlgebra];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::LieAlgebra => "lie-algebra",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Method::Direct),
            "lie-algebra" | "lie" => Ok(Method::LieAlgebra),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

/// Warnings attached to an otherwise usable result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Diagnostic {
    /// The frame-A vectors span fewer than 4 dimensions.
    RankDeficient { rank: usize },
    /// Fewer vectors than needed to pin down the six parameters.
    Underdetermined { vectors: usize },
    /// The quasi-Newton line search stalled and a simplex search took over.
    SimplexRestart { count: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub lambda: LorentzMatrix,
    /// Algebra element with `exp_lorentz(algebra) == lambda`.
    pub algebra: LorentzAlgebraElement,
    /// Sum of squared component residuals at the solution.
    pub residual: f64,
    pub method: Method,
    pub iterations: usize,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iters: usize,
    pub fd_step: f64,
    pub init: LorentzAlgebraElement,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-12,
            step_tol: 1e-14,
            max_iters: 10_000,
            fd_step: 1e-6,
            init: LorentzAlgebraElement::zero(),
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.grad_tol) && positive(self.step_tol) && positive(self.fd_step)) {
            return Err(Error::InvalidInput("solver tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        ensure_finite(self.init.to_array().iter(), "initial algebra element")
    }
}

/// Packs 4-vectors as the columns of a 4×n matrix.
pub fn vectors_to_matrix(vs: &[FourVector]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4, vs.len());
    for (i, v) in vs.iter().enumerate() {
        m.set_column(i, &v.to_vector());
    }
    m
}

pub fn matrix_to_vectors(m: &DMatrix<f64>) -> Vec<FourVector> {
    m.column_iter()
        .map(|c| FourVector::new(c[0], c[1], c[2], c[3]))
        .collect()
}

/// `Λ X` as a dynamically sized 4×n matrix.
pub fn transform_columns(lambda: &Matrix4<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(4, x.ncols(), (lambda * x).as_slice())
}

fn check_frames(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != 4 {
        return Err(Error::ShapeMismatch {
            expected: "4 rows".into(),
            found: format!("{} rows", x.nrows()),
        });
    }
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", x.nrows(), x.ncols()),
            found: format!("{}x{}", y.nrows(), y.ncols()),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::Empty("vector set"));
    }
    ensure_finite(x.iter().chain(y.iter()), "vector set")
}

fn residual_vector(lambda: &Matrix4<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DVector<f64> {
    let diff = y - lambda * x;
    DVector::from_column_slice(diff.as_slice())
}

/// `Σᵢ ‖yᵢ − Λ(ζ, θ) xᵢ‖²` with the Euclidean component norm.
pub fn objective(e: &LorentzAlgebraElement, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    check_frames(x, y)?;
    Ok((y - exp_lorentz(e).matrix() * x).norm_squared())
}

/// Direct minimization of [`objective`] over (ζ, θ).
///
/// Rank-deficient or too-small inputs are solved anyway and flagged in the
/// diagnostics. Running out of iterations returns
/// [`Error::NonConvergence`] carrying the best point found.
pub fn align_direct(x: &DMatrix<f64>, y: &DMatrix<f64>, opts: &SolverOptions) -> Result<AlignmentResult> {
    check_frames(x, y)?;
    opts.validate()?;

    let mut diagnostics = Vec::new();
    if x.ncols() < 3 {
        diagnostics.push(Diagnostic::Underdetermined { vectors: x.ncols() });
    }
    let rank = pseudoinverse(x, DEFAULT_RANK_TOL)?.rank;
    if rank < 4 {
        diagnostics.push(Diagnostic::RankDeficient { rank });
    }

    let residual = |p: &Params| {
        let e = LorentzAlgebraElement::from_array([p[0], p[1], p[2], p[3], p[4], p[5]]);
        residual_vector(exp_lorentz(&e).matrix(), x, y)
    };
    let settings = Settings {
        grad_tol: opts.grad_tol,
        step_tol: opts.step_tol,
        max_iters: opts.max_iters,
        fd_step: opts.fd_step,
    };
    let out = optimize::minimize(residual, Params::from(opts.init.to_array()), &settings);
    if out.simplex_restarts > 0 {
        diagnostics.push(Diagnostic::SimplexRestart {
            count: out.simplex_restarts,
        });
    }

    let algebra = LorentzAlgebraElement::from_array(out.x.into());
    let result = AlignmentResult {
        lambda: exp_lorentz(&algebra),
        algebra,
        residual: out.value,
        method: Method::Direct,
        iterations: out.iterations,
        diagnostics,
    };
    if out.converged {
        Ok(result)
    } else {
        Err(Error::NonConvergence {
            best: Box::new(result),
        })
    }
}

/// [`align_direct`] started from the [`align_lie`] estimate when that
/// succeeds, from `opts.init` otherwise.
pub fn align_direct_warm(x: &DMatrix<f64>, y: &DMatrix<f64>, opts: &SolverOptions) -> Result<AlignmentResult> {
    let mut opts = *opts;
    if let Ok(lie) = align_lie(x, y) {
        opts.init = lie.algebra;
    }
    align_direct(x, y, &opts)
}

/// Intermediate quantities of the pseudoinverse-projection method.
#[derive(Debug, Clone)]
pub struct LieFit {
    /// Unconstrained least-squares map `Y X⁺`.
    pub lambda0: Matrix4<f64>,
    /// Principal logarithm of `lambda0`.
    pub log: Matrix4<f64>,
    /// Frobenius-nearest so(3,1) element to `log`.
    pub projected: LorentzAlgebraElement,
    pub pinv: Pseudoinverse,
}

impl LieFit {
    /// `‖l − l₀‖_F`, the distance the projection moved the logarithm.
    pub fn projection_distance(&self) -> f64 {
        (self.projected.to_matrix() - self.log).norm()
    }
}

/// Runs the linear fit, logarithm and projection steps of [`align_lie`].
pub fn lie_fit(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<LieFit> {
    check_frames(x, y)?;
    if x.ncols() < 4 {
        return Err(Error::RankDeficient {
            rank: x.ncols(),
            required: 4,
        });
    }
    let pinv = pseudoinverse(x, DEFAULT_RANK_TOL)?;
    if pinv.rank < 4 {
        return Err(Error::RankDeficient {
            rank: pinv.rank,
            required: 4,
        });
    }
    let lambda0: Matrix4<f64> = (y * &pinv.matrix).fixed_view::<4, 4>(0, 0).into_owned();
    let log = mat_log_real(&lambda0)?;
    Ok(LieFit {
        lambda0,
        log,
        projected: project_to_algebra(&log),
        pinv,
    })
}

/// Pseudoinverse fit, logarithm, projection onto so(3,1), exponential.
///
/// Needs at least 4 vectors spanning ℝ⁴; fails when the linear fit has no
/// principal real logarithm.
pub fn align_lie(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<AlignmentResult> {
    let fit = lie_fit(x, y)?;
    let algebra = fit.projected;
    let lambda = exp_lorentz(&algebra);
    let residual = (y - lambda.matrix() * x).norm_squared();
    Ok(AlignmentResult {
        lambda,
        algebra,
        residual,
        method: Method::LieAlgebra,
        iterations: 0,
        diagnostics: Vec::new(),
    })
}

/// Dispatches on `method`.
pub fn align(method: Method, x: &DMatrix<f64>, y: &DMatrix<f64>, opts: &SolverOptions) -> Result<AlignmentResult> {
    match method {
        Method::Direct => align_direct(x, y, opts),
        Method::LieAlgebra => align_lie(x, y),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    /// `‖Λ_est − Λ_true‖_F`
    pub frob: f64,
    /// Largest absolute entry of the difference.
    pub max_abs: f64,
}

pub fn error_norms(estimate: &Matrix4<f64>, truth: &Matrix4<f64>) -> ErrorNorms {
    let d = estimate - truth;
    ErrorNorms {
        frob: d.norm(),
        max_abs: d.amax(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn sample_x() -> DMatrix<f64> {
        let s = 2f64.sqrt();
        // Rows of the printed sanity matrix become columns here.
        DMatrix::from_row_slice(4, 4, &[1.0, s, s, s, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    }

    fn element() -> LorentzAlgebraElement {
        LorentzAlgebraElement::new(Vector3::new(0.15, -0.1, 0.3), Vector3::new(0.4, 0.9, -0.6)).unwrap()
    }

    #[test]
    fn objective_basics() {
        let x = sample_x();
        let zero = LorentzAlgebraElement::zero();
        assert_eq!(objective(&zero, &x, &x).unwrap(), 0.0);
        let delta = DMatrix::from_fn(4, 4, |i, j| 0.01 * (i as f64 - j as f64));
        let y = &x + &delta;
        assert!((objective(&zero, &x, &y).unwrap() - delta.norm_squared()).abs() < 1e-15);
        assert!(objective(&zero, &x, &DMatrix::zeros(4, 3)).is_err());
    }

    #[test]
    fn lie_recovers_exact_transformation() {
        let x = sample_x();
        let truth = exp_lorentz(&element());
        let y = transform_columns(truth.matrix(), &x);
        let r = align_lie(&x, &y).unwrap();
        assert!(error_norms(r.lambda.matrix(), truth.matrix()).frob < 1e-12);
        assert_eq!(r.method, Method::LieAlgebra);
        assert!((r.algebra.exp().matrix() - r.lambda.matrix()).norm() == 0.0);
    }

    #[test]
    fn lie_identity() {
        let x = sample_x();
        let r = align_lie(&x, &x).unwrap();
        assert!((r.lambda.matrix() - Matrix4::identity()).norm() <= 1e-12);
    }

    #[test]
    fn lie_rejects_too_few_vectors() {
        let x = sample_x().columns(0, 3).into_owned();
        assert!(matches!(
            align_lie(&x, &x),
            Err(Error::RankDeficient { rank: 3, required: 4 })
        ));
    }

    #[test]
    fn lie_rejects_coplanar_vectors() {
        let mut x = DMatrix::from_fn(4, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.5 * i as f64);
        x.row_mut(3).fill(0.0);
        assert!(matches!(align_lie(&x, &x), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn lie_reports_missing_logarithm() {
        // Frame B is frame A reflected through time: Λ₀ = diag(−1, 1, 1, 1).
        let x = sample_x();
        let mut y = x.clone();
        y.row_mut(0).neg_mut();
        assert!(matches!(align_lie(&x, &y), Err(Error::NotInIdentityComponent(_))));
    }

    #[test]
    fn direct_recovers_exact_transformation() {
        let x = sample_x();
        let truth = exp_lorentz(&element());
        let y = transform_columns(truth.matrix(), &x);
        let r = align_direct(&x, &y, &SolverOptions::default()).unwrap();
        assert!(error_norms(r.lambda.matrix(), truth.matrix()).frob < 1e-8);
        assert!(r.iterations > 0);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn direct_identity() {
        let x = sample_x();
        let r = align_direct(&x, &x, &SolverOptions::default()).unwrap();
        assert!(r.residual <= 1e-20);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn direct_warns_on_rank_deficiency() {
        let x = sample_x().columns(0, 2).into_owned();
        let truth = exp_lorentz(&element());
        let y = transform_columns(truth.matrix(), &x);
        let r = align_direct(&x, &y, &SolverOptions::default()).unwrap();
        assert!(r.diagnostics.contains(&Diagnostic::Underdetermined { vectors: 2 }));
        assert!(r.diagnostics.contains(&Diagnostic::RankDeficient { rank: 2 }));
        assert!(r.residual < 1e-16);
    }

    #[test]
    fn direct_non_convergence_keeps_best() {
        let x = sample_x();
        let y = transform_columns(exp_lorentz(&element()).matrix(), &x);
        let opts = SolverOptions {
            max_iters: 1,
            ..SolverOptions::default()
        };
        match align_direct(&x, &y, &opts) {
            Err(Error::NonConvergence { best }) => {
                assert_eq!(best.iterations, 1);
                assert!(best.residual < objective(&LorentzAlgebraElement::zero(), &x, &y).unwrap());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn direct_rejects_bad_options() {
        let x = sample_x();
        let opts = SolverOptions {
            grad_tol: 0.0,
            ..SolverOptions::default()
        };
        assert!(matches!(align_direct(&x, &x, &opts), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let x = sample_x();
        let truth = exp_lorentz(&element());
        let y = transform_columns(truth.matrix(), &x);
        let warm = align_direct_warm(&x, &y, &SolverOptions::default()).unwrap();
        assert!(error_norms(warm.lambda.matrix(), truth.matrix()).frob < 1e-10);
    }

    #[test]
    fn error_norm_examples() {
        let a = Matrix4::identity();
        assert_eq!(error_norms(&a, &a), ErrorNorms { frob: 0.0, max_abs: 0.0 });
        let mut b = a;
        b[(2, 3)] += 0.5;
        assert_eq!(error_norms(&b, &a), ErrorNorms { frob: 0.5, max_abs: 0.5 });
        let ones = Matrix4::from_element(1.0);
        assert_eq!(error_norms(&(a + ones), &a), ErrorNorms { frob: 4.0, max_abs: 1.0 });
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("kabsch".parse::<Method>().is_err());
    }
}
