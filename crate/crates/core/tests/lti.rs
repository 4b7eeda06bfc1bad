mod common;

use common::random_system;
use posgain::datasets::four_state_siso;
use posgain::lti::{lift, lifting_identities_check, pack_signal, simulate, unpack_signal, Signal, StateSpace};
use posgain::numkernel::{is_schur_stable, Matrix};
use posgain::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_signal(rng: &mut ChaCha8Rng, channels: usize, len: usize) -> Signal {
    let steps: Vec<Vec<f64>> = (0..len)
        .map(|_| (0..channels).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    Signal::from_steps(channels, &steps).unwrap()
}

fn lifted_output(sys: &StateSpace, w: &Signal, order: usize) -> Signal {
    let lifted = lift(sys, order).unwrap().as_state_space();
    let packed = pack_signal(w, order).unwrap();
    let z = simulate(&lifted, &packed, packed.len()).unwrap().z;
    unpack_signal(&z, sys.outputs(), order).unwrap()
}

#[test]
fn impulse_energy_below_hinf() {
    let sys = four_state_siso();
    let z = simulate(&sys, &Signal::impulse(1, 200), 200).unwrap().z;
    let energy = z.l2_norm();
    assert!(energy > 0.0 && energy <= 9.0797, "impulse response energy {energy}");
}

#[test]
fn lifted_simulation_matches_original() {
    let sys = four_state_siso();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = random_signal(&mut rng, 1, 6);
    let z = simulate(&sys, &w, 6).unwrap().z;
    let zl = lifted_output(&sys, &w, 3);
    assert_eq!(zl.len(), 6);
    for k in 0..6 {
        assert!((z.step(k)[0] - zl.step(k)[0]).abs() <= 1e-12, "step {k}");
    }
}

#[test]
fn lifted_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sys = random_system(&mut rng, 3, 2, 2, 0.8);
    for order in 1..=5 {
        let l = lift(&sys, order).unwrap();
        assert!(l.a.max_abs_diff(&sys.a().pow(order)) <= 1e-14);
        assert_eq!(l.d.shape(), (2 * order, 2 * order));
        for i in 0..order {
            assert!(l.d.submatrix(2 * i, 2 * i, 2, 2).max_abs_diff(sys.d()) == 0.0);
            for j in i + 1..order {
                assert_eq!(l.d.submatrix(2 * i, 2 * j, 2, 2).max_abs(), 0.0);
            }
        }
    }
    assert!(matches!(lift(&sys, 0), Err(Error::InvalidOrder)));
}

#[test]
fn identities_on_example_system() {
    let sys = four_state_siso();
    assert!(lifting_identities_check(&sys, 1, 1));
    assert!(lifting_identities_check(&sys, 2, 3));
}

#[test]
fn identities_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (n, nw, nz) = (rng.gen_range(1..5), rng.gen_range(1..4), rng.gen_range(1..4));
        let sys = random_system(&mut rng, n, nw, nz, 0.9);
        for n1 in 1..=4 {
            for n2 in 1..=4 {
                assert!(lifting_identities_check(&sys, n1, n2), "({n1}, {n2})");
            }
        }
    }
}

/// Upper triangular `A` (eigenvalues on the diagonal) conjugated by a
/// well-conditioned random similarity.
fn matrix_with_eigenvalues(rng: &mut ChaCha8Rng, eigenvalues: &[f64]) -> Matrix {
    let n = eigenvalues.len();
    let t = Matrix::from_fn(n, n, |i, j| if i == j { eigenvalues[i] } else if i < j { rng.gen_range(-0.5..0.5) } else { 0.0 });
    let s = Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if i < j { rng.gen_range(-0.5..0.5) } else { 0.0 });
    let s_inv = posgain::numkernel::Lu::factor(&s, 1e-12).unwrap();
    let s_inv = Matrix::from_fn(n, n, |i, j| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        s_inv.solve(&e)[i]
    });
    &(&s * &t) * &s_inv
}

#[test]
fn lifting_preserves_stability() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..40 {
        let n = rng.gen_range(1..5);
        let stable = trial % 2 == 0;
        let mut eig: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.9..0.9)).collect();
        if !stable {
            eig[rng.gen_range(0..n)] = if rng.gen_bool(0.5) { 1.1 } else { -1.2 };
        }
        let a = matrix_with_eigenvalues(&mut rng, &eig);
        let sys = StateSpace::new(a, Matrix::zeros(n, 1), Matrix::zeros(1, n), Matrix::zeros(1, 1)).unwrap();
        assert_eq!(sys.is_stable().unwrap(), stable);
        for order in 1..=8 {
            let lifted = lift(&sys, order).unwrap().a;
            assert_eq!(is_schur_stable(&lifted).unwrap().stable, stable, "eigenvalues {eig:?}, order {order}");
        }
    }
}

#[test]
fn packing_preserves_nonnegativity_and_pads() {
    let w = Signal::from_steps(2, &[[1.0, 0.0], [2.0, 3.0], [0.5, 0.25]]).unwrap();
    let packed = pack_signal(&w, 2).unwrap();
    assert_eq!((packed.channels(), packed.len()), (4, 2));
    assert!(packed.is_nonnegative());
    assert_eq!(packed.step(1), &[0.5, 0.25, 0.0, 0.0]);
    let back = unpack_signal(&packed, 2, 2).unwrap();
    assert_eq!(back.truncated(3), w);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lifted_and_original_outputs_agree(seed in any::<u64>(), order in 1..7usize, len in 1..30usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, nw, nz) = (rng.gen_range(1..5), rng.gen_range(1..3), rng.gen_range(1..3));
        let sys = random_system(&mut rng, n, nw, nz, 0.9);
        let w = random_signal(&mut rng, nw, len);
        let z = simulate(&sys, &w, len).unwrap().z;
        let zl = lifted_output(&sys, &w, order);
        for k in 0..len {
            for (a, b) in z.step(k).iter().zip(zl.step(k)) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn pack_unpack_round_trip(seed in any::<u64>(), order in 1..6usize, len in 0..20usize, channels in 1..4usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_signal(&mut rng, channels, len);
        let back = unpack_signal(&pack_signal(&w, order).unwrap(), channels, order).unwrap();
        prop_assert_eq!(back.truncated(len), w);
    }
}
