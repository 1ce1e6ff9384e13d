use aglerlab::numkernel::{
    gram_factor, hermitian_eig, lu_solve, nearest_unitary, operator_norm, orthonormal_complement,
    pinv_apply, psd_project, vec_norm, CMatrix, HermMatrix, C64,
};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(complex(), rows * cols)
        .prop_map(move |v| CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j]))
}

fn square() -> impl Strategy<Value = CMatrix> {
    (1usize..9).prop_flat_map(|n| matrix(n, n))
}

fn herm() -> impl Strategy<Value = HermMatrix> {
    square().prop_map(HermMatrix::new)
}

fn unitarity(v: &CMatrix) -> f64 {
    (&v.adjoint_mul(v) - &CMatrix::identity(v.cols())).max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs(h in herm()) {
        let e = hermitian_eig(&h).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(unitarity(&e.vectors) <= 1e-12);
        let back = e.reassemble(|x| x);
        let scale = 1.0 + h.frobenius_norm();
        prop_assert!((&back - &h).frobenius_norm() <= 1e-10 * scale);
        let trace: f64 = e.values.iter().sum();
        prop_assert!((trace - h.trace()).abs() <= 1e-10 * scale);
    }

    #[test]
    fn psd_projection_is_nearest(h in herm(), seed in square()) {
        let p = psd_project(&h).unwrap();
        prop_assert!(hermitian_eig(&p).unwrap().min() >= -1e-12 * (1.0 + h.frobenius_norm()));
        let again = psd_project(&p).unwrap();
        prop_assert!((&again - &p).frobenius_norm() <= 1e-10 * (1.0 + p.frobenius_norm()));
        if seed.rows() == h.n() {
            let q = HermMatrix::new(seed.adjoint_mul(&seed));
            prop_assert!((&h - &p).frobenius_norm() <= (&h - &q).frobenius_norm() + 1e-10);
        }
    }

    #[test]
    fn gram_factor_reproduces_psd(m in square()) {
        let n = m.cols();
        let b = HermMatrix::new(m.adjoint_mul(&m));
        let f = gram_factor(&b, 1e-12).unwrap();
        prop_assert!(f.rank() <= n);
        let back = f.vectors.adjoint_mul(&f.vectors);
        prop_assert!((&back - b.as_matrix()).max_abs() <= 1e-9 * (1.0 + b.frobenius_norm()));
    }

    #[test]
    fn low_rank_gram_factor_has_that_rank(m in (1usize..4, 4usize..9).prop_flat_map(|(r, n)| matrix(r, n))) {
        let b = HermMatrix::new(m.adjoint_mul(&m));
        let f = gram_factor(&b, 1e-9).unwrap();
        prop_assert!(f.rank() <= m.rows());
    }

    #[test]
    fn operator_norm_dominates_vectors(m in square(), v in proptest::collection::vec(complex(), 8)) {
        let norm = operator_norm(&m);
        let x: Vec<C64> = v[..m.cols()].to_vec();
        let nx = vec_norm(&x);
        prop_assume!(nx > 1e-6);
        prop_assert!(vec_norm(&m.mul_vec(&x)) <= norm * nx * (1.0 + 1e-10) + 1e-12);
        prop_assert!(norm <= m.frobenius_norm() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn nearest_unitary_is_unitary(m in square()) {
        let u = nearest_unitary(&m).unwrap();
        prop_assert!(unitarity(&u) <= 1e-9);
    }

    #[test]
    fn complement_is_orthonormal(q in (2usize..8).prop_flat_map(|n| matrix(n, 1))) {
        let nq = q.frobenius_norm();
        prop_assume!(nq > 1e-3);
        let q = q.scale_real(1.0 / nq);
        let c = orthonormal_complement(&q);
        prop_assert_eq!(c.cols(), q.rows() - 1);
        prop_assert!(unitarity(&c) <= 1e-10);
        prop_assert!(q.adjoint_mul(&c).max_abs() <= 1e-10);
    }

    #[test]
    fn lu_solve_inverts_well_conditioned(m in square(), b in proptest::collection::vec(complex(), 8)) {
        let n = m.rows();
        let a = &m + &CMatrix::identity(n).scale_real(4.0 * (n as f64));
        let rhs = CMatrix::from_fn(n, 1, |i, _| b[i]);
        let (x, _) = lu_solve(&a, &rhs).unwrap();
        prop_assert!((&a.matmul(&x) - &rhs).max_abs() <= 1e-10);
    }

    #[test]
    fn pinv_solves_consistent_systems(g in (1usize..5, 1usize..6).prop_flat_map(|(r, n)| matrix(r, n)), x in proptest::collection::vec(complex(), 6)) {
        let y = g.matmul(&CMatrix::from_fn(g.cols(), 1, |i, _| x[i]));
        let sol = pinv_apply(&g, &y, 1e-12).unwrap();
        prop_assert!((&g.matmul(&sol) - &y).max_abs() <= 1e-8 * (1.0 + y.max_abs()));
    }
}
