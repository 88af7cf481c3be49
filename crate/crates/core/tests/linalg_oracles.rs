mod common;

use common::*;
use nlpkit::linalg::{
    inertia_correct, ldlt_factorize, qp_solve, Inertia, Matrix, QpData, QpStatus, RegularizationSchedule,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sign_counts(vals: &[f64]) -> Inertia {
    let scale = vals.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let tol = 1e-10 * scale;
    Inertia::new(
        vals.iter().filter(|&&v| v > tol).count(),
        vals.iter().filter(|&&v| v < -tol).count(),
        vals.iter().filter(|&&v| v.abs() <= tol).count(),
    )
}

#[test]
fn inertia_matches_jacobi_on_random_8x8() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let m = random_symmetric(&mut rng, 8);
        assert_eq!(ldlt_factorize(&m).inertia(), sign_counts(&jacobi_eigenvalues(&m)));
    }
}

#[test]
fn inertia_of_rank_deficient_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    for _ in 0..20 {
        let n = rng.gen_range(3..=9);
        let r = rng.gen_range(1..n);
        let b = Matrix::from_row_major(r, n, (0..r * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let signs: Vec<f64> = (0..r).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let m = b.transpose().matmul(&Matrix::from_diagonal(&signs)).matmul(&b);
        let expected = sign_counts(&jacobi_eigenvalues(&m));
        assert_eq!(ldlt_factorize(&m).inertia(), expected);
        assert_eq!(expected.zero, n - r);
    }
}

#[test]
fn spd_solve_matches_gaussian_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let b = Matrix::from_row_major(10, 10, (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let mut m = b.transpose().matmul(&b);
        m.add_diagonal(1.0);
        let rhs: Vec<f64> = (0..10).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let x = ldlt_factorize(&m).solve(&rhs).unwrap();
        let oracle = gauss_solve(&m, &rhs).unwrap();
        for (a, b) in x.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn indefinite_solve_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.gen_range(1..=12);
        let m = random_symmetric(&mut rng, n);
        let f = ldlt_factorize(&m);
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = f.solve(&rhs).unwrap();
        let r = m.mul_vec(&x);
        let cond_guard = x.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        for (ri, bi) in r.iter().zip(&rhs) {
            assert!((ri - bi).abs() <= 1e-11 * cond_guard.max(1.0) * (1.0 + m.max_abs()));
        }
        let mut diff = f.reconstruct();
        diff.axpy(-1.0, &m);
        assert!(diff.frobenius_norm() <= 1e-10 * m.frobenius_norm().max(1.0));
    }
}

#[test]
fn inertia_correction_schedule_against_eigen_oracle() {
    // H = diag(-1, 1) with the constraint fixing d2: the reduced Hessian -1
    // needs δ_w > 1, so the schedule 1e-4·8^k first succeeds at k = 5.
    let h = Matrix::from_diagonal(&[-1.0, 1.0]);
    let a = Matrix::from_rows(&[vec![0.0, 1.0]]);
    let sched = RegularizationSchedule::default();
    let c = inertia_correct(&h, &a, &sched, 0.0, 1e-8).unwrap();
    let mut expected = None;
    let mut dw = sched.initial;
    while expected.is_none() {
        let mut k = Matrix::zeros(3, 3);
        k[(0, 0)] = -1.0 + dw;
        k[(1, 1)] = 1.0 + dw;
        k[(1, 2)] = 1.0;
        k[(2, 1)] = 1.0;
        if sign_counts(&jacobi_eigenvalues(&k)) == Inertia::new(2, 1, 0) {
            expected = Some(dw);
        }
        dw *= sched.increase;
    }
    assert_eq!(c.delta_w, expected.unwrap());
    assert_eq!(c.factorization.inertia(), Inertia::new(2, 1, 0));

    // With the constraint on d1 instead, the unregularized matrix already has
    // inertia (2, 1, 0) and no regularization is applied.
    let a = Matrix::from_rows(&[vec![1.0, 0.0]]);
    let c = inertia_correct(&h, &a, &sched, 0.0, 1e-8).unwrap();
    assert_eq!(c.delta_w, 0.0);
}

#[test]
fn random_convex_qps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..200 {
        let c = random_convex_qp(&mut rng);
        let (d_ref, f_ref) = enumerate_qp(&c).expect("feasible by construction");
        let qp = QpData {
            w: c.w.clone(),
            g: c.g.clone(),
            a: c.a.clone(),
            b: c.b.clone(),
            lower: c.lower.clone(),
            upper: c.upper.clone(),
        };
        let s = qp_solve(&qp, None).unwrap();
        assert_eq!(s.status, QpStatus::Optimal, "case {case}");
        assert!((s.objective_value - f_ref).abs() <= 1e-8, "case {case}: {} vs {f_ref}", s.objective_value);
        for (a, b) in s.d.iter().zip(&d_ref) {
            assert!((a - b).abs() <= 1e-6, "case {case}");
        }
    }
}

proptest! {
    #[test]
    fn ldlt_inertia_property(seed in any::<u64>(), n in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_symmetric(&mut rng, n);
        prop_assert_eq!(ldlt_factorize(&m).inertia(), sign_counts(&jacobi_eigenvalues(&m)));
    }

    #[test]
    fn qp_kkt_holds_on_nonconvex_boxes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(0..n);
        let w = random_symmetric(&mut rng, n);
        let a = Matrix::from_row_major(m, n, (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let qp = QpData {
            b: a.mul_vec(&x),
            w,
            g: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            a,
            lower: vec![-1.0; n],
            upper: vec![1.0; n],
        };
        let s = qp_solve(&qp, None).unwrap();
        prop_assert_eq!(s.status, QpStatus::Optimal);
        prop_assert!(nlpkit::linalg::qp::kkt_residual(&qp, &s) <= 1e-8);
    }
}
