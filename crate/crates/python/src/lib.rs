//! Python bindings. Matrices are nested lists of rows; vector sets are lists
//! of vectors, one per row, matching the CLI file layout.

use align_core::bench::{self, BenchConfig};
use align_core::euclid;
use align_core::lie::{self, LorentzAlgebraElement as CoreElement};
use align_core::linalg;
use align_core::{Error, Method, SolverOptions};
use nalgebra::{DMatrix, Matrix4, Vector3};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(lorentz_align, AlignmentError, PyValueError, "Raised by every failing operation; `kind` names the cause.");

fn to_py(e: Error) -> PyErr {
    let kind = e.kind();
    let err = AlignmentError::new_err(format!("{kind}: {e}"));
    Python::attach(|py| {
        let _ = err.value(py).setattr("kind", kind);
    });
    err
}

fn invalid(msg: impl Into<String>) -> PyErr {
    AlignmentError::new_err(format!("invalid-input: {}", msg.into()))
}

fn matrix4(rows: &[Vec<f64>]) -> PyResult<Matrix4<f64>> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(invalid("expected a 4x4 matrix"));
    }
    Ok(Matrix4::from_fn(|i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rows4(m: &Matrix4<f64>) -> Vec<Vec<f64>> {
    (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect()
}

/// Vectors given as rows become the columns of a `dim × n` matrix.
fn frame(vectors: &[Vec<f64>], dim: usize) -> PyResult<DMatrix<f64>> {
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(invalid(format!("every vector must have {dim} components")));
    }
    Ok(DMatrix::from_fn(dim, vectors.len(), |i, j| vectors[j][i]))
}

fn vec3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

/// Element of so(3,1): boost vector `zeta`, rotation vector `theta`.
#[pyclass(name = "LorentzAlgebraElement", frozen, from_py_object)]
#[derive(Clone)]
struct PyElement {
    inner: CoreElement,
}

#[pymethods]
impl PyElement {
    #[new]
    fn new(zeta: [f64; 3], theta: [f64; 3]) -> PyResult<Self> {
        CoreElement::new(vec3(zeta), vec3(theta))
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn zeta(&self) -> [f64; 3] {
        self.inner.zeta.into()
    }

    #[getter]
    fn theta(&self) -> [f64; 3] {
        self.inner.theta.into()
    }

    fn to_matrix(&self) -> Vec<Vec<f64>> {
        rows4(&self.inner.to_matrix())
    }

    /// Closed-form exponential, a proper orthochronous Lorentz matrix.
    fn exp(&self) -> Vec<Vec<f64>> {
        rows4(lie::exp_lorentz(&self.inner).matrix())
    }

    fn __repr__(&self) -> String {
        format!("LorentzAlgebraElement(zeta={:?}, theta={:?})", self.zeta(), self.theta())
    }
}

#[pyclass(name = "AlignmentResult", frozen, get_all)]
struct PyAlignmentResult {
    matrix: Vec<Vec<f64>>,
    algebra: PyElement,
    residual: f64,
    method: String,
    iterations: usize,
    diagnostics: Vec<String>,
}

#[pymethods]
impl PyAlignmentResult {
    fn __repr__(&self) -> String {
        format!(
            "AlignmentResult(method='{}', residual={:e}, iterations={})",
            self.method, self.residual, self.iterations
        )
    }
}

/// `exp` of the generator with boost vector `zeta` and rotation vector `theta`.
#[pyfunction]
fn exp_lorentz(zeta: [f64; 3], theta: [f64; 3]) -> PyResult<Vec<Vec<f64>>> {
    PyElement::new(zeta, theta).map(|e| e.exp())
}

/// Scaling-and-squaring power series exponential of any 4x4 matrix.
#[pyfunction]
fn exp_series(matrix: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    linalg::mat_exp_series(&matrix4(&matrix)?).map(|m| rows4(&m)).map_err(to_py)
}

/// Principal real logarithm of a 4x4 matrix.
#[pyfunction]
fn log_real(matrix: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    linalg::mat_log_real(&matrix4(&matrix)?).map(|m| rows4(&m)).map_err(to_py)
}

/// Frobenius-nearest so(3,1) element to a 4x4 matrix.
#[pyfunction]
fn project_to_algebra(matrix: Vec<Vec<f64>>) -> PyResult<PyElement> {
    Ok(PyElement {
        inner: lie::project_to_algebra(&matrix4(&matrix)?),
    })
}

/// `(eta_defect, det_defect, orthochronous)` of a 4x4 matrix.
#[pyfunction]
fn lorentz_defect(matrix: Vec<Vec<f64>>) -> PyResult<(f64, f64, bool)> {
    let d = lie::lorentz_defect(&matrix4(&matrix)?);
    Ok((d.eta_defect, d.det_defect, d.orthochronous))
}

/// Lorentz transformation mapping `frame_a` onto `frame_b` (lists of 4-vectors
/// `[t, x, y, z]`). `method` is `"lie"` or `"direct"`.
#[pyfunction]
#[pyo3(signature = (frame_a, frame_b, method = "lie"))]
fn align(frame_a: Vec<Vec<f64>>, frame_b: Vec<Vec<f64>>, method: &str) -> PyResult<PyAlignmentResult> {
    let method: Method = method.parse().map_err(to_py)?;
    let x = frame(&frame_a, 4)?;
    let y = frame(&frame_b, 4)?;
    let r = align_core::align(method, &x, &y, &SolverOptions::default()).map_err(to_py)?;
    Ok(PyAlignmentResult {
        matrix: rows4(r.lambda.matrix()),
        algebra: PyElement { inner: r.algebra },
        residual: r.residual,
        method: r.method.to_string(),
        iterations: r.iterations,
        diagnostics: r.diagnostics.iter().map(|d| format!("{d:?}")).collect(),
    })
}

/// Optimal rotation matrix by the SVD method; vectors given as rows.
#[pyfunction]
fn kabsch(frame_a: Vec<Vec<f64>>, frame_b: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let dim = frame_a.first().map_or(0, Vec::len);
    let a = frame(&frame_a, dim)?;
    let b = frame(&frame_b, dim)?;
    let k = euclid::kabsch(&a, &b).map_err(to_py)?;
    Ok(rows_of(k.rotation.matrix()))
}

/// Optimal 3D rotation as a canonical unit quaternion `[q0, q1, q2, q3]`.
#[pyfunction]
fn horn(frame_a: Vec<Vec<f64>>, frame_b: Vec<Vec<f64>>) -> PyResult<[f64; 4]> {
    let a = frame(&frame_a, 3)?;
    let b = frame(&frame_b, 3)?;
    let q = euclid::horn(&a, &b).map_err(to_py)?.quaternion;
    Ok([q.q0, q.q1, q.q2, q.q3])
}

/// Rotation matrix of a unit quaternion.
#[pyfunction]
fn quaternion_to_matrix(q: [f64; 4]) -> PyResult<Vec<Vec<f64>>> {
    let r = euclid::Quaternion::new(q[0], q[1], q[2], q[3])
        .to_rotation_matrix()
        .map_err(to_py)?;
    Ok(rows_of(r.matrix()))
}

/// Runs the built-in boost recovery check.
#[pyfunction]
fn sanity<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let r = align_core::sanity::run_sanity(&SolverOptions::default()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("passed", r.passed())?;
    d.set_item("lie_max_error", r.lie.max_error)?;
    d.set_item("direct_max_error", r.direct.max_error)?;
    d.set_item("lie_det_defect", r.lie.det_defect)?;
    d.set_item("series_det_defect", r.lie_series_det_defect)?;
    d.set_item("failures", r.failures)?;
    Ok(d)
}

/// Seeded benchmark grid; one dict per trial and method.
#[pyfunction]
#[pyo3(signature = (trials = 10, seed = 0, n_vectors = vec![4, 8, 16], noise_eps = vec![0.0, 0.01, 0.1], timing = true))]
fn benchmark<'py>(
    py: Python<'py>,
    trials: usize,
    seed: u64,
    n_vectors: Vec<usize>,
    noise_eps: Vec<f64>,
    timing: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = BenchConfig {
        trials,
        seed,
        n_vectors,
        noise_eps,
        disable_timing: !timing,
        ..BenchConfig::default()
    };
    let records = py.detach(|| bench::run_benchmark(&cfg)).map_err(to_py)?;
    records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("trial_id", r.trial_id)?;
            d.set_item("n", r.n)?;
            d.set_item("eps", r.eps)?;
            d.set_item("method", r.method.as_str())?;
            d.set_item("frob_error", r.frob_error)?;
            d.set_item("max_error", r.max_error)?;
            d.set_item("wall_time_s", r.wall_time)?;
            d.set_item("converged", r.converged)?;
            d.set_item("seed_used", r.seed_used)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "lorentz_align")]
fn lorentz_align_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AlignmentError", m.py().get_type::<AlignmentError>())?;
    m.add_class::<PyElement>()?;
    m.add_class::<PyAlignmentResult>()?;
    for f in [
        wrap_pyfunction!(exp_lorentz, m)?,
        wrap_pyfunction!(exp_series, m)?,
        wrap_pyfunction!(log_real, m)?,
        wrap_pyfunction!(project_to_algebra, m)?,
        wrap_pyfunction!(lorentz_defect, m)?,
        wrap_pyfunction!(align, m)?,
        wrap_pyfunction!(kabsch, m)?,
        wrap_pyfunction!(horn, m)?,
        wrap_pyfunction!(quaternion_to_matrix, m)?,
        wrap_pyfunction!(sanity, m)?,
        wrap_pyfunction!(benchmark, m)?,
    ] {
        m.add_function(f)?;
    }
    Ok(())
}
