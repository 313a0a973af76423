//! Built-in exact-recovery check: four unit timelike vectors and a β = 0.3
//! boost along x, solved by both Lorentz methods and both exponential paths.

use std::time::Instant;

use nalgebra::{DMatrix, Matrix4};
use serde::Serialize;

use crate::align::{align_direct, align_lie, error_norms, transform_columns, Method, SolverOptions};
use crate::error::Result;
use crate::lie::lorentz_defect;
use crate::linalg::mat_exp_series;

pub const SANITY_BETA: f64 = 0.3;
pub const LIE_MAX_ERROR: f64 = 1e-8;
pub const DIRECT_MAX_ERROR: f64 = 1e-6;
pub const DET_TOLERANCE: f64 = 1e-13;

/// Boost with velocity +β along x: `(γ, −βγ | −βγ, γ)` in the t–x block.
pub fn x_boost(beta: f64) -> Matrix4<f64> {
    let gamma = 1.0 / (1.0 - beta * beta).sqrt();
    let mut m = Matrix4::identity();
    m[(0, 0)] = gamma;
    m[(1, 1)] = gamma;
    m[(0, 1)] = -beta * gamma;
    m[(1, 0)] = -beta * gamma;
    m
}

/// Frame-A vectors (1,0,0,0), (√2,1,0,0), (√2,0,1,0), (√2,0,0,1) as columns.
pub fn sanity_frame_a() -> DMatrix<f64> {
    let s = 2f64.sqrt();
    DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, s, s, s, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )
}

/// `(X, Y, Λ)` with `Y = Λ X`.
pub fn sanity_problem() -> (DMatrix<f64>, DMatrix<f64>, Matrix4<f64>) {
    let x = sanity_frame_a();
    let lambda = x_boost(SANITY_BETA);
    let y = transform_columns(&lambda, &x);
    (x, y, lambda)
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodReport {
    pub method: Method,
    /// Largest entrywise deviation from the true boost.
    pub max_error: f64,
    pub frob_error: f64,
    pub det_defect: f64,
    pub eta_defect: f64,
    pub wall_time_s: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SanityReport {
    pub direct: MethodReport,
    pub lie: MethodReport,
    /// Lie estimate re-exponentiated through the power series.
    pub lie_series_max_error: f64,
    pub lie_series_det_defect: f64,
    pub failures: Vec<String>,
}

impl SanityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn report(method: Method, estimate: &Matrix4<f64>, truth: &Matrix4<f64>, secs: f64, iterations: usize) -> MethodReport {
    let e = error_norms(estimate, truth);
    let d = lorentz_defect(estimate);
    MethodReport {
        method,
        max_error: e.max_abs,
        frob_error: e.frob,
        det_defect: d.det_defect,
        eta_defect: d.eta_defect,
        wall_time_s: secs,
        iterations,
    }
}

pub fn run_sanity(opts: &SolverOptions) -> Result<SanityReport> {
    let (x, y, truth) = sanity_problem();

    let start = Instant::now();
    let lie = align_lie(&x, &y)?;
    let lie_secs = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let direct = match align_direct(&x, &y, opts) {
        Ok(r) => r,
        Err(crate::Error::NonConvergence { best }) => *best,
        Err(e) => return Err(e),
    };
    let direct_secs = start.elapsed().as_secs_f64();

    let series = mat_exp_series(&lie.algebra.to_matrix())?;
    let lie_report = report(Method::LieAlgebra, lie.lambda.matrix(), &truth, lie_secs, lie.iterations);
    let direct_report = report(Method::Direct, direct.lambda.matrix(), &truth, direct_secs, direct.iterations);
    let series_err = error_norms(&series, &truth).max_abs;
    let series_det = lorentz_defect(&series).det_defect;

    let mut failures = Vec::new();
    if lie_report.max_error > LIE_MAX_ERROR {
        failures.push(format!("lie-algebra max error {:e} > {LIE_MAX_ERROR:e}", lie_report.max_error));
    }
    if direct_report.max_error > DIRECT_MAX_ERROR {
        failures.push(format!("direct max error {:e} > {DIRECT_MAX_ERROR:e}", direct_report.max_error));
    }
    for (label, det) in [
        ("closed-form exponential", lie_report.det_defect),
        ("series exponential", series_det),
        ("direct", direct_report.det_defect),
    ] {
        if det > DET_TOLERANCE {
            failures.push(format!("{label} |det - 1| {det:e} > {DET_TOLERANCE:e}"));
        }
    }
    let both_small = lie_report.max_error <= DIRECT_MAX_ERROR && direct_report.max_error <= DIRECT_MAX_ERROR;
    if !(lie_report.max_error <= direct_report.max_error || both_small) {
        failures.push("lie-algebra error exceeds direct error".into());
    }

    Ok(SanityReport {
        direct: direct_report,
        lie: lie_report,
        lie_series_max_error: series_err,
        lie_series_det_defect: series_det,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::minkowski_inner;
    use crate::align::matrix_to_vectors;

    #[test]
    fn frame_a_vectors_are_unit_timelike() {
        for v in matrix_to_vectors(&sanity_frame_a()) {
            assert!((minkowski_inner(&v, &v) + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sanity_passes() {
        let r = run_sanity(&SolverOptions::default()).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
    }
}
