use posgain::numkernel::{is_schur_stable, perron_vector, solve_discrete_lyapunov, spectral_norm, sym_eig, Matrix, SymMatrix};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-5.0..5.0f64, rows * cols).prop_map(move |v| Matrix::new(rows, cols, v).unwrap())
}

fn symmetric(max_dim: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_dim).prop_flat_map(|n| matrix(n, n).prop_map(|m| SymMatrix::from_matrix(&m).unwrap()))
}

fn frobenius_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    (a.as_matrix() - b.as_matrix()).frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_reconstruction(s in symmetric(30)) {
        let e = sym_eig(&s).unwrap();
        let scale = 1.0 + s.as_matrix().frobenius_norm();
        prop_assert!(frobenius_diff(&e.reconstruct(), &s) <= 1e-9 * scale);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let gram = &e.vectors.transpose() * &e.vectors;
        prop_assert!(gram.max_abs_diff(&Matrix::identity(s.dim())) <= 1e-10);
    }

    #[test]
    fn spectral_norm_transpose_invariant(m in (1..8usize, 1..8usize).prop_flat_map(|(r, c)| matrix(r, c))) {
        let a = spectral_norm(&m).unwrap();
        let b = spectral_norm(&m.transpose()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        prop_assert!(a >= m.max_abs() - 1e-12);
    }

    #[test]
    fn perron_vector_is_nonnegative_unit(
        (n, v) in (1..10usize).prop_flat_map(|n| (Just(n), proptest::collection::vec(0.0..3.0f64, n * n)))
    ) {
        let z = SymMatrix::from_matrix(&Matrix::new(n, n, v).unwrap()).unwrap();
        let p = perron_vector(&z, true).unwrap();
        prop_assert!(p.vector.iter().all(|&x| x >= 0.0));
        let norm: f64 = p.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn lyapunov_residual(a in matrix(3, 3)) {
        let a = a.scale(0.95 / (1.0 + a.frobenius_norm()));
        let p = solve_discrete_lyapunov(&a, &SymMatrix::identity(3)).unwrap().unwrap();
        let residual = p.congruence(&a).sub(&p).add(&SymMatrix::identity(3));
        prop_assert!(residual.as_matrix().max_abs() <= 1e-10 * (1.0 + p.as_matrix().max_abs()));
        prop_assert!(is_schur_stable(&a).unwrap().stable);
    }
}

#[test]
fn schur_stability_matches_eigenvalue_moduli() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        let m = Matrix::from_fn(2, 2, |_, _| rng.gen_range(-1.5..1.5));
        let (tr, det) = (m.trace(), m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]);
        let disc = tr * tr / 4.0 - det;
        let radius = if disc >= 0.0 {
            (tr / 2.0).abs() + disc.sqrt()
        } else {
            det.sqrt()
        };
        if (radius - 1.0).abs() < 1e-3 {
            continue;
        }
        assert_eq!(is_schur_stable(&m).unwrap().stable, radius < 1.0, "{m:?} radius {radius}");
        checked += 1;
    }
}
