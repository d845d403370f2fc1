use bosonic_lindblad::matkernel::{self, c, CMatrix};
use bosonic_lindblad::sampling;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expm_of_commuting_sum_factorizes(seed in any::<u64>(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let a = sampling::matrix(&mut rng(seed), 4);
        let lhs = matkernel::expm(&(&a * c(s + t, 0.0))).unwrap();
        let rhs = matkernel::expm(&(&a * c(s, 0.0))).unwrap() * matkernel::expm(&(&a * c(t, 0.0))).unwrap();
        prop_assert!(matkernel::max_abs(&(lhs - &rhs)) <= 1e-11 * (1.0 + matkernel::max_abs(&rhs)));
    }

    #[test]
    fn expm_apply_matches_dense_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = sampling::matrix(&mut r, 5);
        let x = matkernel::vec_rows(&sampling::matrix(&mut r, 1).resize(5, 1, c(0.3, -0.1)));
        let dense = matkernel::expm(&a).unwrap() * &x;
        let applied = matkernel::expm_apply(&a, &x).unwrap();
        prop_assert!((dense - applied).camax() <= 1e-12);
    }

    #[test]
    fn lyapunov_solution_is_hermitian_and_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let gamma = sampling::positive(&mut r, 3, 0.2);
        let l = sampling::hermitian(&mut r, 3) * c(0.0, -1.0) - &gamma;
        let rhs = sampling::positive(&mut r, 3, 0.0);
        let w = matkernel::solve_lyapunov(&l, &rhs).unwrap();
        let residual = &l * &w + &w * l.adjoint() + &rhs * c(2.0, 0.0);
        prop_assert!(matkernel::max_abs(&residual) <= 1e-12);
        prop_assert!(matkernel::is_hermitian(&w, 1e-12));
    }

    #[test]
    fn commutators_satisfy_the_jacobi_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let [a, b, d] = [0; 3].map(|_| sampling::matrix(&mut r, 3));
        let cm = matkernel::commutator;
        let jacobi = cm(&a, &cm(&b, &d)) + cm(&b, &cm(&d, &a)) + cm(&d, &cm(&a, &b));
        prop_assert!(matkernel::max_abs(&jacobi) <= 1e-13);
    }
}

#[test]
fn hermitian_function_inverts_positive_matrices() {
    let p = sampling::positive(&mut rng(3), 4, 0.5);
    let inv = matkernel::hermitian_function(&p, |x| 1.0 / x).unwrap();
    assert!(matkernel::max_abs(&(&p * inv - CMatrix::identity(4, 4))) < 1e-12);
}

#[test]
fn non_finite_input_is_rejected() {
    let mut a = CMatrix::identity(2, 2);
    a[(0, 1)] = c(f64::NAN, 0.0);
    assert!(matkernel::expm(&a).is_err());
}
