//! Property tests for the numerical kernels and the group structure.

use lorentz_align::euclid::{horn, kabsch, Quaternion};
use lorentz_align::lie::{exp_lorentz, lorentz_defect, project_to_algebra, LorentzAlgebraElement};
use lorentz_align::linalg::{mat_exp_series, mat_log_real, principal_eigenpair, pseudoinverse, svd, DEFAULT_RANK_TOL};
use nalgebra::{DMatrix, Matrix4, Vector3};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0..10.0f64, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn any_shape() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..=4, 1usize..=12).prop_flat_map(|(r, c)| matrix(r, c))
}

fn vec3(scale: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-scale..scale).prop_map(|a| Vector3::new(a[0], a[1], a[2]))
}

fn algebra(zeta: f64, theta: f64) -> impl Strategy<Value = LorentzAlgebraElement> {
    (vec3(zeta), vec3(theta)).prop_map(|(zeta, theta)| LorentzAlgebraElement { zeta, theta })
}

fn unit_quaternion() -> impl Strategy<Value = Quaternion> {
    prop::array::uniform4(-1.0..1.0f64)
        .prop_filter("away from zero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|a| {
            let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            Quaternion::new(a[0] / n, a[1] / n, a[2] / n, a[3] / n)
        })
}

fn ortho_defect(q: &DMatrix<f64>) -> f64 {
    (q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn svd_reconstructs(m in any_shape()) {
        let dec = svd(&m).unwrap();
        prop_assert!(ortho_defect(&dec.u) <= 1e-12);
        prop_assert!(ortho_defect(&dec.v) <= 1e-12);
        prop_assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(dec.singular_values.iter().all(|&s| s >= 0.0));
        prop_assert!((dec.reconstruct() - &m).norm() <= 1e-10 * m.norm().max(1.0));
    }

    #[test]
    fn svd_handles_low_rank(a in matrix(4, 2), b in matrix(2, 7)) {
        let m = a * b;
        let dec = svd(&m).unwrap();
        prop_assert!((dec.reconstruct() - &m).norm() <= 1e-10 * m.norm().max(1.0));
        prop_assert!(dec.singular_values[2] <= 1e-12 * dec.singular_values[0].max(1.0));
    }

    #[test]
    fn pseudoinverse_satisfies_penrose(m in any_shape()) {
        let p = pseudoinverse(&m, DEFAULT_RANK_TOL).unwrap().matrix;
        let tol = 1e-9 * (m.norm() * p.norm()).max(1.0);
        prop_assert!((&m * &p * &m - &m).norm() <= tol * m.norm().max(1.0));
        prop_assert!((&p * &m * &p - &p).norm() <= tol * p.norm().max(1.0));
        let mp = &m * &p;
        let pm = &p * &m;
        prop_assert!((&mp - mp.transpose()).norm() <= tol);
        prop_assert!((&pm - pm.transpose()).norm() <= tol);
    }

    #[test]
    fn eigenpair_is_algebraically_largest(m in matrix(4, 4)) {
        let s: Matrix4<f64> = Matrix4::from_iterator(m.iter().cloned());
        let s = (s + s.transpose()) * 0.5;
        let (lambda, e) = principal_eigenpair(&s, 1e-12, 10_000).unwrap();
        prop_assert!((s * e - e * lambda).norm() <= 1e-10 * s.norm().max(1.0));
        let reference = s.symmetric_eigenvalues().max();
        prop_assert!((lambda - reference).abs() <= 1e-9 * s.norm().max(1.0));
    }

    #[test]
    fn closed_form_exp_matches_series(e in algebra(2.0, 3.0)) {
        let closed = exp_lorentz(&e).into_matrix();
        let series = mat_exp_series(&e.to_matrix()).unwrap();
        prop_assert!((closed - series).norm() <= 1e-10 * series.norm());
    }

    #[test]
    fn exponential_lands_in_the_group(e in algebra(2.0, 10.0)) {
        let d = lorentz_defect(exp_lorentz(&e).matrix());
        prop_assert!(d.orthochronous);
        prop_assert!(d.det_defect <= 1e-12);
        prop_assert!(d.eta_defect <= 1e-10 * exp_lorentz(&e).matrix().norm_squared());
    }

    #[test]
    fn log_inverts_exp(e in algebra(1.0, 1.0)) {
        // |θ| < √3 < π keeps the rotation part on the principal branch.
        let log = mat_log_real(exp_lorentz(&e).matrix()).unwrap();
        prop_assert!((log - e.to_matrix()).norm() <= 1e-10 * e.to_matrix().norm().max(1.0));
    }

    #[test]
    fn exp_inverts_log(e in algebra(1.0, 1.0)) {
        let lambda = exp_lorentz(&e).into_matrix();
        let back = mat_exp_series(&mat_log_real(&lambda).unwrap()).unwrap();
        prop_assert!((back - lambda).norm() <= 1e-11 * lambda.norm());
    }

    #[test]
    fn group_closed_under_products_and_inverses(a in algebra(1.0, 3.0), b in algebra(1.0, 3.0)) {
        let la = exp_lorentz(&a);
        let lb = exp_lorentz(&b);
        let product = la.clone() * lb;
        let d = lorentz_defect(product.matrix());
        prop_assert!(d.orthochronous && d.det_defect <= 1e-11 && d.eta_defect <= 1e-9);
        let id = la.inverse().into_matrix() * la.matrix();
        prop_assert!((id - Matrix4::identity()).norm() <= 1e-10 * la.matrix().norm_squared());
    }

    #[test]
    fn projection_fixes_algebra_elements(e in algebra(5.0, 5.0)) {
        let p = project_to_algebra(&e.to_matrix());
        prop_assert!((p.to_matrix() - e.to_matrix()).norm() <= 1e-14 * e.to_matrix().norm().max(1.0));
    }

    #[test]
    fn projection_is_nearest(m in matrix(4, 4), probe in algebra(1.0, 1.0)) {
        let m: Matrix4<f64> = Matrix4::from_iterator(m.iter().cloned());
        let p = project_to_algebra(&m);
        let moved = LorentzAlgebraElement { zeta: p.zeta + probe.zeta, theta: p.theta + probe.theta };
        prop_assert!((m - moved.to_matrix()).norm() >= (m - p.to_matrix()).norm() - 1e-12);
    }

    #[test]
    fn horn_matches_kabsch(q in unit_quaternion(), a in matrix(3, 8)) {
        let r = q.to_rotation_matrix().unwrap().into_matrix();
        let b = &r * &a;
        let k = kabsch(&a, &b).unwrap();
        let h = horn(&a, &b).unwrap();
        let hr = h.quaternion.to_rotation_matrix().unwrap().into_matrix();
        prop_assert!((k.rotation.matrix() - &r).amax() <= 1e-9);
        prop_assert!((hr - &r).amax() <= 1e-8);
        prop_assert!((h.quaternion.canonical().q0 - h.quaternion.q0).abs() == 0.0);
    }

    #[test]
    fn kabsch_beats_random_rotations(a in matrix(3, 6), b in matrix(3, 6), q in unit_quaternion()) {
        let k = kabsch(&a, &b).unwrap();
        let other = q.to_rotation_matrix().unwrap().into_matrix();
        let best = (&b - k.rotation.matrix() * &a).norm_squared();
        prop_assert!(best <= (&b - other * &a).norm_squared() + 1e-9 * b.norm_squared().max(1.0));
    }

    #[test]
    fn quaternion_rotation_matches_matrix(q in unit_quaternion(), v in vec3(5.0)) {
        let via_product = q.rotate(&v).unwrap();
        let r = q.to_rotation_matrix().unwrap().into_matrix();
        let via_matrix = r * nalgebra::DVector::from_column_slice(v.as_slice());
        for i in 0..3 {
            prop_assert!((via_product[i] - via_matrix[i]).abs() <= 1e-12 * v.norm().max(1.0));
        }
    }
}
