//! The Lorentz algebra so(3,1) and the proper orthochronous group SO(3,1)+.
//!
//! Components are ordered (t, x, y, z) with metric η = diag(−1, +1, +1, +1).
//! An algebra element with boost vector ζ and rotation vector θ has the matrix
//!
//! ```text
//!     ⎡ 0    ζ¹   ζ²   ζ³ ⎤
//!     ⎢ ζ¹   0   −θ³   θ² ⎥
//!     ⎢ ζ²   θ³   0   −θ¹ ⎥
//!     ⎣ ζ³  −θ²   θ¹   0  ⎦
//! ```
//!
//! so a positive ζ¹ generates `cosh φ` on the diagonal and `+sinh φ` off it.
//! A boost with velocity +β along x (`−βγ` off-diagonal) is ζ¹ = −artanh β.

use std::ops::Mul;

use nalgebra::{Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, exp_series_unchecked};

/// Tolerance on `‖mᵀηm − η‖_F` and `|det m − 1|` for accepted group elements.
pub const LORENTZ_TOL: f64 = 1e-9;

/// The Minkowski metric diag(−1, 1, 1, 1).
pub fn eta() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

/// A 4-vector in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourVector {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FourVector {
    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.t, self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Minkowski square `−t² + x² + y² + z²`.
    pub fn minkowski_norm_sq(&self) -> f64 {
        minkowski_inner(self, self)
    }
}

/// `−u_t v_t + u_x v_x + u_y v_y + u_z v_z`.
pub fn minkowski_inner(u: &FourVector, v: &FourVector) -> f64 {
    -u.t * v.t + u.x * v.x + u.y * v.y + u.z * v.z
}

/// An element of so(3,1): boost vector ζ (rapidity) and rotation vector θ
/// (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzAlgebraElement {
    pub zeta: Vector3<f64>,
    pub theta: Vector3<f64>,
}

impl Default for LorentzAlgebraElement {
    fn default() -> Self {
        Self::zero()
    }
}

impl LorentzAlgebraElement {
    pub fn new(zeta: Vector3<f64>, theta: Vector3<f64>) -> Result<Self> {
        ensure_finite(zeta.iter().chain(theta.iter()), "algebra element")?;
        Ok(Self { zeta, theta })
    }

    pub fn zero() -> Self {
        Self {
            zeta: Vector3::zeros(),
            theta: Vector3::zeros(),
        }
    }

    /// Coordinates packed as `[ζ¹, ζ², ζ³, θ¹, θ², θ³]`.
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.zeta[0],
            self.zeta[1],
            self.zeta[2],
            self.theta[0],
            self.theta[1],
            self.theta[2],
        ]
    }

    pub fn from_array(p: [f64; 6]) -> Self {
        Self {
            zeta: Vector3::new(p[0], p[1], p[2]),
            theta: Vector3::new(p[3], p[4], p[5]),
        }
    }

    /// The 4×4 generator matrix.
    pub fn to_matrix(&self) -> Matrix4<f64> {
        let (z, t) = (&self.zeta, &self.theta);
        Matrix4::new(
            0.0, z[0], z[1], z[2], //
            z[0], 0.0, -t[2], t[1], //
            z[1], t[2], 0.0, -t[0], //
            z[2], -t[1], t[0], 0.0,
        )
    }

    /// Inverse of [`to_matrix`](Self::to_matrix). Fails when any entry of `m`
    /// deviates from the generator pattern by more than `tol`.
    pub fn from_matrix(m: &Matrix4<f64>, tol: f64) -> Result<Self> {
        ensure_finite(m.iter(), "algebra matrix")?;
        let e = project_to_algebra(m);
        let deviation = (m - e.to_matrix()).amax();
        if deviation > tol {
            return Err(Error::NotAlgebraElement { deviation, tol });
        }
        Ok(e)
    }

    /// Closed-form exponential; see [`exp_lorentz`].
    pub fn exp(&self) -> LorentzMatrix {
        exp_lorentz(self)
    }
}

/// Nearest so(3,1) element to an arbitrary 4×4 matrix in the Frobenius norm:
/// the diagonal is dropped, the first row and column are symmetrized and the
/// spatial block is antisymmetrized.
pub fn project_to_algebra(l0: &Matrix4<f64>) -> LorentzAlgebraElement {
    let m = l0;
    LorentzAlgebraElement {
        zeta: Vector3::new(
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(0, 3)] + m[(3, 0)]),
        ),
        theta: Vector3::new(
            0.5 * (m[(3, 2)] - m[(2, 3)]),
            0.5 * (m[(1, 3)] - m[(3, 1)]),
            0.5 * (m[(2, 1)] - m[(1, 2)]),
        ),
    }
}

/// A validated element of SO(3,1)+.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzMatrix(Matrix4<f64>);

impl LorentzMatrix {
    /// Checks η-orthogonality, properness and orthochronicity.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        ensure_finite(m.iter(), "Lorentz matrix")?;
        let d = lorentz_defect(&m);
        if d.eta_defect > LORENTZ_TOL || d.det_defect > LORENTZ_TOL || m[(0, 0)] < 1.0 - 1e-12 {
            return Err(Error::NotLorentz {
                eta_defect: d.eta_defect,
                det_defect: d.det_defect,
                orthochronous: d.orthochronous,
            });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be in the group by construction.
    pub(crate) fn from_exp(m: Matrix4<f64>) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix4<f64> {
        self.0
    }

    /// `Λ⁻¹ = η Λᵀ η`.
    pub fn inverse(&self) -> Self {
        let eta = eta();
        Self(eta * self.0.transpose() * eta)
    }

    pub fn apply(&self, v: &FourVector) -> FourVector {
        apply(self, v)
    }

    pub fn defect(&self) -> LorentzDefect {
        lorentz_defect(&self.0)
    }
}

impl Mul for LorentzMatrix {
    type Output = LorentzMatrix;

    fn mul(self, rhs: LorentzMatrix) -> LorentzMatrix {
        LorentzMatrix(self.0 * rhs.0)
    }
}

/// Matrix–vector product in (t, x, y, z) order.
pub fn apply(lambda: &LorentzMatrix, v: &FourVector) -> FourVector {
    FourVector::from_vector(&(lambda.0 * v.to_vector()))
}

/// How far a matrix is from SO(3,1)+.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzDefect {
    /// `‖mᵀηm − η‖_F`
    pub eta_defect: f64,
    /// `|det m − 1|`
    pub det_defect: f64,
    /// `m₀₀ ≥ 0`
    pub orthochronous: bool,
}

pub fn lorentz_defect(m: &Matrix4<f64>) -> LorentzDefect {
    let eta = eta();
    LorentzDefect {
        eta_defect: (m.transpose() * eta * m - eta).norm(),
        det_defect: (m.determinant() - 1.0).abs(),
        orthochronous: m[(0, 0)] >= 0.0,
    }
}

// Below this value of a² + b² the closed form is replaced by the series.
const DEGENERATE_INVARIANT: f64 = 1e-8;
const SMALL_ARG: f64 = 1e-4;

/// Closed-form exponential of an so(3,1) element.
///
/// With the invariants `a² + b² = √((|θ|² − |ζ|²)² + 4(θ·ζ)²)` and
/// `a² − b² = |θ|² − |ζ|²` (both roots nonnegative),
///
/// ```text
/// exp A = [f₀ I + f₁ A + f₂ A² + f₃ A³] / (a² + b²)
/// f₀ = b² cos a + a² cosh b
/// f₁ = b² sin a / a + a² sinh b / b
/// f₂ = cosh b − cos a
/// f₃ = sinh b / b − sin a / a
/// ```
///
/// The `sinh b / b` in f₃ is the form that agrees with the power series; a
/// `sinh b / a` term would break the pure-rotation limit. Lightlike
/// generators (`a² + b² < 1e-8`) go through the series instead, and the
/// cancelling differences in f₂ and f₃ are evaluated without subtraction.
pub fn exp_lorentz(e: &LorentzAlgebraElement) -> LorentzMatrix {
    let a_mat = e.to_matrix();
    let theta2 = e.theta.norm_squared();
    let zeta2 = e.zeta.norm_squared();
    let cross = e.theta.dot(&e.zeta);
    let diff = theta2 - zeta2;
    let sum = diff.hypot(2.0 * cross);

    if sum < DEGENERATE_INVARIANT {
        return LorentzMatrix::from_exp(exp_series_unchecked(&a_mat));
    }

    // a² b² = (θ·ζ)²; take the larger root from the sum and the smaller from
    // the product to avoid cancellation.
    let (a2, b2) = if diff >= 0.0 {
        let a2 = 0.5 * (diff + sum);
        (a2, cross * cross / a2)
    } else {
        let b2 = 0.5 * (sum - diff);
        (cross * cross / b2, b2)
    };
    let (a, b) = (a2.sqrt(), b2.sqrt());

    let sinc_a = sinc(a);
    let sinhc_b = sinhc(b);
    let c0 = (b2 * a.cos() + a2 * b.cosh()) / sum;
    let c1 = (b2 * sinc_a + a2 * sinhc_b) / sum;
    let half_sin = (0.5 * a).sin();
    let half_sinh = (0.5 * b).sinh();
    let c2 = 2.0 * (half_sinh * half_sinh + half_sin * half_sin) / sum;
    let c3 = (sinhc_minus_one(b) + one_minus_sinc(a)) / sum;

    let a_sq = a_mat * a_mat;
    let a_cube = a_sq * a_mat;
    LorentzMatrix::from_exp(Matrix4::identity() * c0 + a_mat * c1 + a_sq * c2 + a_cube * c3)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < SMALL_ARG {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn sinhc(x: f64) -> f64 {
    if x.abs() < SMALL_ARG {
        let x2 = x * x;
        1.0 + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

/// Sum of `sign^k x^(2k) / (2k+1)!` for k ≥ 1, to full precision for |x| ≤ 1.
fn odd_factorial_tail(x: f64, sign: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut acc = 0.0;
    for k in 1..=12 {
        term *= sign * x2 / ((2 * k) as f64 * (2 * k + 1) as f64);
        acc += term;
        if term.abs() <= 1e-18 * acc.abs() {
            break;
        }
    }
    acc
}

/// `sinh x / x − 1`
fn sinhc_minus_one(x: f64) -> f64 {
    if x.abs() < 1.0 {
        odd_factorial_tail(x, 1.0)
    } else {
        x.sinh() / x - 1.0
    }
}

/// `1 − sin x / x`
fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 1.0 {
        -odd_factorial_tail(x, -1.0)
    } else {
        1.0 - x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_exp_series;

    fn el(z: [f64; 3], t: [f64; 3]) -> LorentzAlgebraElement {
        LorentzAlgebraElement::new(Vector3::from(z), Vector3::from(t)).unwrap()
    }

    fn series(e: &LorentzAlgebraElement) -> Matrix4<f64> {
        mat_exp_series(&e.to_matrix()).unwrap()
    }

    #[test]
    fn generator_layout() {
        assert_eq!(LorentzAlgebraElement::zero().to_matrix(), Matrix4::zeros());

        let m = el([1.0, 0.0, 0.0], [0.0; 3]).to_matrix();
        let mut expected = Matrix4::zeros();
        expected[(0, 1)] = 1.0;
        expected[(1, 0)] = 1.0;
        assert_eq!(m, expected);

        let m = el([0.0; 3], [0.0, 0.0, 1.0]).to_matrix();
        let mut expected = Matrix4::zeros();
        expected[(1, 2)] = -1.0;
        expected[(2, 1)] = 1.0;
        assert_eq!(m, expected);
    }

    #[test]
    fn generator_is_eta_antisymmetric() {
        let a = el([0.3, -0.2, 0.9], [1.1, 0.4, -0.7]).to_matrix();
        assert_eq!(a.transpose() * eta() + eta() * a, Matrix4::zeros());
    }

    #[test]
    fn from_matrix_roundtrip_and_rejection() {
        let z = LorentzAlgebraElement::from_matrix(&Matrix4::zeros(), 1e-12).unwrap();
        assert_eq!(z, LorentzAlgebraElement::zero());

        let e = el([0.1, -0.25, 3.5], [-1.5, 0.125, 2.0]);
        assert_eq!(LorentzAlgebraElement::from_matrix(&e.to_matrix(), 0.0).unwrap(), e);

        let mut m = e.to_matrix();
        m[(2, 2)] = 1e-3;
        assert!(matches!(
            LorentzAlgebraElement::from_matrix(&m, 1e-6),
            Err(Error::NotAlgebraElement { .. })
        ));
    }

    #[test]
    fn element_rejects_non_finite() {
        assert!(LorentzAlgebraElement::new(Vector3::new(f64::NAN, 0.0, 0.0), Vector3::zeros()).is_err());
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(*exp_lorentz(&LorentzAlgebraElement::zero()).matrix(), Matrix4::identity());
    }

    #[test]
    fn exp_sign_convention_for_x_boost() {
        let beta: f64 = 0.3;
        let gamma = 1.0 / (1.0 - beta * beta).sqrt();
        let lambda = exp_lorentz(&el([-beta.atanh(), 0.0, 0.0], [0.0; 3]));
        let m = lambda.matrix();
        assert!((m[(0, 0)] - gamma).abs() < 1e-15);
        assert!((m[(1, 1)] - gamma).abs() < 1e-15);
        assert!((m[(0, 1)] + beta * gamma).abs() < 1e-15);
        assert!((m[(1, 0)] + beta * gamma).abs() < 1e-15);
        // Opposite sign of the rapidity flips the off-diagonal.
        let flipped = exp_lorentz(&el([beta.atanh(), 0.0, 0.0], [0.0; 3]));
        assert!((flipped.matrix()[(0, 1)] - beta * gamma).abs() < 1e-15);
    }

    #[test]
    fn exp_matches_series_generic() {
        let e = el([0.1, 0.2, -0.3], [1.0, -0.5, 0.25]);
        let s = series(&e);
        assert!((exp_lorentz(&e).matrix() - s).norm() <= 1e-10 * s.norm());
    }

    #[test]
    fn exp_matches_series_on_degenerate_families() {
        let mut cases = Vec::new();
        for k in 2..=12 {
            let s = 10f64.powi(-k);
            // |θ| = |ζ|, θ ⊥ ζ: a = b = 0.
            cases.push(el([s, 0.0, 0.0], [0.0, s, 0.0]));
            cases.push(el([s, 0.0, 0.0], [0.0; 3]));
            cases.push(el([0.0; 3], [0.0, 0.0, s]));
            cases.push(el([s, 2.0 * s, 0.0], [s * 0.5, 0.0, s]));
        }
        // Null generators of unit size and their near neighbours.
        cases.push(el([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]));
        cases.push(el([1.0, 0.0, 0.0], [0.0, 1.0 + 1e-5, 0.0]));
        cases.push(el([1.0, 0.0, 0.0], [1e-5, 1.0, 0.0]));
        cases.push(el([2.0, 0.0, 0.0], [0.0; 3]));
        cases.push(el([0.0; 3], [0.0, 3.0, 0.0]));
        for e in cases {
            let got = exp_lorentz(&e);
            assert!(got.matrix().iter().all(|x| x.is_finite()));
            let s = series(&e);
            let err = (got.matrix() - s).norm() / s.norm();
            assert!(err <= 1e-10, "{e:?}: relative error {err:e}");
        }
    }

    #[test]
    fn exp_output_is_in_the_group() {
        let lambda = exp_lorentz(&el([0.4, -0.1, 0.2], [2.0, 1.0, -0.5]));
        let d = lambda.defect();
        assert!(d.eta_defect <= 1e-12);
        assert!(d.det_defect <= 1e-13);
        assert!(d.orthochronous);
        assert!(LorentzMatrix::new(*lambda.matrix()).is_ok());
    }

    #[test]
    fn defect_probes() {
        let d = lorentz_defect(&Matrix4::identity());
        assert_eq!((d.eta_defect, d.det_defect, d.orthochronous), (0.0, 0.0, true));
        let d = lorentz_defect(&eta());
        assert_eq!((d.eta_defect, d.det_defect, d.orthochronous), (0.0, 2.0, false));
        assert!(LorentzMatrix::new(eta()).is_err());
    }

    #[test]
    fn projection_fixed_points() {
        let e = el([0.3, -0.4, 0.5], [1.0, 2.0, -3.0]);
        assert_eq!(project_to_algebra(&e.to_matrix()), e);
        assert_eq!(project_to_algebra(&Matrix4::identity()), LorentzAlgebraElement::zero());
    }

    #[test]
    fn minkowski_inner_examples() {
        let tv = FourVector::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(minkowski_inner(&tv, &tv), -1.0);
        let lv = FourVector::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(minkowski_inner(&lv, &lv), 0.0);
        let u = FourVector::new(2f64.sqrt(), 1.0, 0.0, 0.0);
        assert!((minkowski_inner(&u, &u) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn apply_boost_to_rest_frame() {
        let beta: f64 = 0.3;
        let gamma = 1.0 / (1.0 - beta * beta).sqrt();
        let boost = exp_lorentz(&el([-beta.atanh(), 0.0, 0.0], [0.0; 3]));
        let v = boost.apply(&FourVector::new(1.0, 0.0, 0.0, 0.0));
        assert!((v.t - gamma).abs() < 1e-15);
        assert!((v.x + beta * gamma).abs() < 1e-15);
        assert_eq!((v.y, v.z), (0.0, 0.0));

        let w = FourVector::new(0.3, -1.0, 2.0, 0.5);
        assert_eq!(LorentzMatrix::identity().apply(&w), w);
    }

    #[test]
    fn inverse_undoes_transformation() {
        let l = exp_lorentz(&el([0.2, 0.1, -0.3], [0.5, -1.0, 0.2]));
        assert!(((l * l.inverse()).into_matrix() - Matrix4::identity()).norm() < 1e-14);
    }

    #[test]
    fn series_helpers_are_accurate_near_switch() {
        for x in [1e-6f64, 1e-3, 0.1, 0.5, 0.999, 1.0, 1.5] {
            let direct_sinh = x.sinh() / x - 1.0;
            let direct_sin = 1.0 - x.sin() / x;
            // Direct evaluation is accurate when x is not small.
            if x >= 0.5 {
                assert!((sinhc_minus_one(x) - direct_sinh).abs() < 1e-15);
                assert!((one_minus_sinc(x) - direct_sin).abs() < 1e-15);
            }
            assert!((sinhc_minus_one(x) - x * x / 6.0).abs() <= x.powi(4) / 100.0);
            assert!((one_minus_sinc(x) - x * x / 6.0).abs() <= x.powi(4) / 100.0);
        }
    }
}
