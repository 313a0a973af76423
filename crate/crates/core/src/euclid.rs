//! Rotation alignment in Euclidean space: Kabsch (SVD, any dimension) and
//! Horn (unit quaternion, 3D only).
//!
//! Both take column-paired data: column `i` of `a` is mapped onto column `i`
//! of `b`. Vectors share a common origin; no centering is performed.

use std::ops::Mul;

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, principal_eigenpair, svd};

const UNIT_TOL: f64 = 1e-10;

/// `q0 + q1 i + q2 j + q3 k`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Quaternion {
    pub const fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self { q0, q1, q2, q3 }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn pure(r: &Vector3<f64>) -> Self {
        Self::new(0.0, r[0], r[1], r[2])
    }

    /// Rotation by `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.normalize();
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(c, s * n[0], s * n[1], s * n[2])
    }

    pub fn conj(&self) -> Self {
        Self::new(self.q0, -self.q1, -self.q2, -self.q3)
    }

    /// `q q*` as a real number.
    pub fn norm_squared(&self) -> f64 {
        self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn vector_part(&self) -> Vector3<f64> {
        Vector3::new(self.q1, self.q2, self.q3)
    }

    /// Sign-canonical form: `q0 > 0`, or the first nonzero component positive.
    pub fn canonical(self) -> Self {
        let lead = [self.q0, self.q1, self.q2, self.q3]
            .into_iter()
            .find(|c| *c != 0.0)
            .unwrap_or(0.0);
        if lead < 0.0 {
            Self::new(-self.q0, -self.q1, -self.q2, -self.q3)
        } else {
            self
        }
    }

    fn ensure_unit(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
            return Err(Error::NonUnitQuaternion(n));
        }
        Ok(())
    }

    /// Rotates `r` as the vector part of `q (0, r) q*`.
    pub fn rotate(&self, r: &Vector3<f64>) -> Result<Vector3<f64>> {
        self.ensure_unit()?;
        Ok((*self * Self::pure(r) * self.conj()).vector_part())
    }

    /// The rotation matrix whose columns are the rotated basis vectors.
    pub fn to_rotation_matrix(&self) -> Result<RotationMatrix> {
        self.ensure_unit()?;
        let mut m = DMatrix::zeros(3, 3);
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = 1.0;
            let col = (*self * Self::pure(&e) * self.conj()).vector_part();
            m.set_column(j, &col);
        }
        Ok(RotationMatrix(m))
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, q: Quaternion) -> Quaternion {
        let p = self;
        Quaternion::new(
            p.q0 * q.q0 - p.q1 * q.q1 - p.q2 * q.q2 - p.q3 * q.q3,
            p.q0 * q.q1 + p.q1 * q.q0 + p.q2 * q.q3 - p.q3 * q.q2,
            p.q0 * q.q2 - p.q1 * q.q3 + p.q2 * q.q0 + p.q3 * q.q1,
            p.q0 * q.q3 + p.q1 * q.q2 - p.q2 * q.q1 + p.q3 * q.q0,
        )
    }
}

/// A proper rotation of ℝᴺ.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix(DMatrix<f64>);

impl RotationMatrix {
    /// Accepts `m` when `‖mᵀm − I‖_F ≤ 1e-10` and `|det m − 1| ≤ 1e-10`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        ensure_finite(m.iter(), "rotation matrix")?;
        let n = m.nrows();
        let ortho = (m.transpose() * &m - DMatrix::identity(n, n)).norm();
        let det = m.determinant();
        if ortho > 1e-10 || (det - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "not a rotation: orthogonality defect {ortho:e}, det {det}"
            )));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// Non-fatal conditions found while solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EuclidWarning {
    /// Two smallest singular values of the cross-covariance vanish: the
    /// optimal rotation is not unique.
    AmbiguousAlignment { detail: String },
    /// The reflection-correcting branch fired.
    ReflectionCorrected,
}

#[derive(Debug, Clone)]
pub struct KabschResult {
    pub rotation: RotationMatrix,
    pub singular_values: Vec<f64>,
    pub warnings: Vec<EuclidWarning>,
}

fn check_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", a.nrows(), a.ncols()),
            found: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(Error::Empty("vector set"));
    }
    ensure_finite(a.iter().chain(b.iter()), "vector set")
}

/// Rotation `R` maximizing `tr(Rᵀ B Aᵀ)`, i.e. minimizing `‖B − RA‖_F`.
pub fn kabsch(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<KabschResult> {
    check_pair(a, b)?;
    let n = a.nrows();
    let h = b * a.transpose();
    let dec = svd(&h)?;
    let mut u = dec.u;
    let mut warnings = Vec::new();

    let sigma = &dec.singular_values;
    let scale = sigma[0].max(f64::MIN_POSITIVE);
    if n >= 2 && sigma[n - 1] + sigma[n - 2] <= 1e-10 * scale {
        warnings.push(EuclidWarning::AmbiguousAlignment {
            detail: format!(
                "smallest singular values {:e}, {:e} of the cross-covariance vanish",
                sigma[n - 2],
                sigma[n - 1]
            ),
        });
    } else if n == 1 && sigma[0] == 0.0 {
        warnings.push(EuclidWarning::AmbiguousAlignment {
            detail: "zero cross-covariance".into(),
        });
    }

    if (&u * dec.v.transpose()).determinant() < 0.0 {
        let mut last = u.column_mut(n - 1);
        last.neg_mut();
        warnings.push(EuclidWarning::ReflectionCorrected);
    }
    let r = &u * dec.v.transpose();
    Ok(KabschResult {
        rotation: RotationMatrix(r),
        singular_values: dec.singular_values,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct HornResult {
    pub quaternion: Quaternion,
    /// Largest eigenvalue of the 4×4 key matrix: the maximized `Σ (R a)·b`.
    pub eigenvalue: f64,
    pub warnings: Vec<EuclidWarning>,
}

/// Symmetric 4×4 matrix whose quadratic form `qᵀ N q` equals
/// `Σᵢ (q aᵢ q*)·bᵢ` for unit `q`. Built from `S = A Bᵀ`.
pub fn horn_key_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Matrix4<f64>> {
    check_pair(a, b)?;
    if a.nrows() != 3 {
        return Err(Error::ShapeMismatch {
            expected: "3 rows".into(),
            found: format!("{} rows", a.nrows()),
        });
    }
    let s: Matrix3<f64> = (a * b.transpose()).fixed_view::<3, 3>(0, 0).into_owned();
    let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    Ok(Matrix4::new(
        sxx + syy + szz, syz - szy, szx - sxz, sxy - syx, //
        syz - szy, sxx - syy - szz, sxy + syx, szx + sxz, //
        szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy, //
        sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz,
    ))
}

/// Unit quaternion of the rotation maximizing `Σᵢ (R aᵢ)·bᵢ`, returned in
/// sign-canonical form.
pub fn horn(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<HornResult> {
    let n_mat = horn_key_matrix(a, b)?;
    let scale = n_mat.norm();
    let mut warnings = Vec::new();
    if scale == 0.0 {
        warnings.push(EuclidWarning::AmbiguousAlignment {
            detail: "zero cross-covariance".into(),
        });
        return Ok(HornResult {
            quaternion: Quaternion::identity(),
            eigenvalue: 0.0,
            warnings,
        });
    }
    let (lambda, e) = principal_eigenpair(&n_mat, 1e-13, 10_000)?;

    // Gap to the next eigenvalue, from the deflated matrix.
    let deflated = n_mat - e * e.transpose() * (lambda + scale + 1.0);
    let (second, _) = principal_eigenpair(&deflated, 1e-10, 10_000)?;
    if lambda - second < 1e-10 * scale {
        warnings.push(EuclidWarning::AmbiguousAlignment {
            detail: format!("eigenvalue gap {:e} of the key matrix", lambda - second),
        });
    }

    let e = e.normalize();
    Ok(HornResult {
        quaternion: Quaternion::new(e[0], e[1], e[2], e[3]).canonical(),
        eigenvalue: lambda,
        warnings,
    })
}
