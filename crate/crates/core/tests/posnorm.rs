mod common;

use common::{random_positive_system, random_system, siso_peak_gain};
use posgain::cones::{in_nn, in_psd};
use posgain::datasets::four_state_siso;
use posgain::lti::{lift, StateSpace};
use posgain::numkernel::{spectral_norm, Matrix, SymMatrix};
use posgain::posnorm::{
    bound_sweep, build_gain_lmi, composition_check, gain_matrix, hinf_norm, lower_bound_pos, pos_matnorm_bruteforce,
    pos_matnorm_exact_small, upper_bound_pos, verify_certificate, GammaTerm, Multiplier,
};
use posgain::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

fn scalar(a: f64, b: f64, c: f64, d: f64) -> StateSpace {
    let m = |v: f64| Matrix::new(1, 1, vec![v]).unwrap();
    StateSpace::new(m(a), m(b), m(c), m(d)).unwrap()
}

#[test]
fn gain_matrix_hand_evaluation() {
    let sys = scalar(0.0, 1.0, 1.0, 0.0);
    let zero = SymMatrix::zeros(1);
    let l = gain_matrix(&sys, &SymMatrix::identity(1), &zero, 1.1).unwrap();
    assert!(l.as_matrix().max_abs_diff(SymMatrix::diag(&[0.0, -0.21]).as_matrix()) < 1e-15);
    // Feasibility needs 1 < P < γ².
    let l = gain_matrix(&sys, &SymMatrix::diag(&[1.1]), &zero, 1.1).unwrap();
    assert!(l.as_matrix().max_abs_diff(SymMatrix::diag(&[-0.1, -0.11]).as_matrix()) < 1e-15);
    let l = gain_matrix(&sys, &SymMatrix::diag(&[0.9]), &zero, 1.1).unwrap();
    assert!(l[(0, 0)] > 0.0);
}

#[test]
fn lmi_map_agrees_with_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let sys = random_system(&mut rng, 3, 2, 2, 0.7);
    let lmi = build_gain_lmi(&sys, GammaTerm::Fixed(1.7), Multiplier::PsdPlusNn).unwrap();
    let constraint = &lmi.program.constraints()[lmi.lmi];
    for _ in 0..10 {
        let x: Vec<f64> = (0..lmi.program.num_vars()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = lmi.p.extract(&x);
        let q = lmi.q_psd.unwrap().extract(&x).add(&lmi.q_nn.unwrap().extract(&x));
        let direct = gain_matrix(&sys, &p, &q, 1.7).unwrap();
        let mapped = constraint.map.eval(&x);
        assert!(mapped.as_matrix().max_abs_diff(direct.as_matrix()) < 1e-12);
        let m = mapped.as_matrix();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }
    let plain = build_gain_lmi(&sys, GammaTerm::Fixed(1.7), Multiplier::Zero).unwrap();
    assert!(plain.q_psd.is_none() && plain.q_nn.is_none());
    assert!(plain.program.num_vars() < lmi.program.num_vars());
}

#[test]
fn gain_lmi_rejects_bad_dimensions() {
    let sys = scalar(0.5, 1.0, 1.0, 0.0);
    assert!(matches!(
        gain_matrix(&sys, &SymMatrix::identity(2), &SymMatrix::zeros(1), 1.0),
        Err(Error::DimensionError(_))
    ));
}

#[test]
fn hinf_simple_cases() {
    let static_sys = StateSpace::new(
        Matrix::zeros(1, 1),
        Matrix::zeros(1, 2),
        Matrix::zeros(2, 1),
        Matrix::diag(&[2.0, 5.0]),
    )
    .unwrap();
    assert!((hinf_norm(&static_sys, TOL).unwrap() - 5.0).abs() < 1e-5);
    assert!((hinf_norm(&StateSpace::static_gain(Matrix::diag(&[2.0, 5.0])), TOL).unwrap() - 5.0).abs() < 1e-12);
    assert!((hinf_norm(&scalar(0.5, 1.0, 1.0, 0.0), TOL).unwrap() - 2.0).abs() < 1e-5);
    assert!(matches!(hinf_norm(&scalar(1.0, 1.0, 1.0, 0.0), TOL), Err(Error::UnstableSystem(_))));
}

#[test]
fn hinf_matches_frequency_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..8 {
        let n = rng.gen_range(1..4);
        let sys = random_system(&mut rng, n, 1, 1, 0.8);
        let oracle = siso_peak_gain(&sys, 4000);
        let value = hinf_norm(&sys, TOL).unwrap();
        assert!(value >= oracle - 1e-6, "{value} below sampled peak {oracle}");
        assert!(value <= oracle * (1.0 + 1e-3), "{value} far above sampled peak {oracle}");
    }
}

#[test]
fn example_system_hinf() {
    let value = hinf_norm(&four_state_siso(), TOL).unwrap();
    assert!((value - 9.0797).abs() < 0.005, "{value}");
}

#[test]
fn single_input_first_order_equals_hinf() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut systems = vec![four_state_siso()];
    for _ in 0..5 {
        let n = rng.gen_range(1..5);
        let nz = rng.gen_range(1..3);
        systems.push(random_system(&mut rng, n, 1, nz, 0.85));
    }
    for sys in &systems {
        let h = hinf_norm(sys, TOL).unwrap();
        let (u, cert) = upper_bound_pos(sys, 1, TOL).unwrap();
        assert!((u - h).abs() <= 2.0 * TOL * (1.0 + h), "upper {u} hinf {h}");
        assert!(verify_certificate(sys, &cert).valid);
    }
}

#[test]
fn externally_positive_bounds_meet_hinf() {
    let geometric = scalar(0.5, 1.0, 1.0, 0.0);
    for order in [1, 2, 3, 5] {
        let (u, _) = upper_bound_pos(&geometric, order, TOL).unwrap();
        assert!((u - 2.0).abs() < 1e-5, "order {order}: {u}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..3 {
        let sys = random_positive_system(&mut rng, 3, 2, 2, 0.6);
        assert!(sys.is_entrywise_nonnegative());
        let h = hinf_norm(&sys, TOL).unwrap();
        let (u, _) = upper_bound_pos(&sys, 3, TOL).unwrap();
        assert!((u - h).abs() <= 1e-5 * (1.0 + h), "upper {u} hinf {h}");
    }
}

#[test]
fn upper_bound_rejects_unstable_and_zero_order() {
    assert!(matches!(upper_bound_pos(&scalar(1.2, 1.0, 1.0, 0.0), 2, TOL), Err(Error::UnstableSystem(_))));
    assert!(matches!(upper_bound_pos(&scalar(0.2, 1.0, 1.0, 0.0), 0, TOL), Err(Error::InvalidOrder)));
}

#[test]
fn certificate_replay_and_tampering() {
    let sys = four_state_siso();
    let (value, cert) = upper_bound_pos(&sys, 5, TOL).unwrap();
    assert_eq!(cert.order, 5);
    assert!((cert.gamma - value).abs() < 1e-15);
    let check = verify_certificate(&sys, &cert);
    assert!(check.valid, "{:?}", check.violation);
    assert!(check.lmi_max_eigenvalue <= 0.0);

    let mut lowered = cert.clone();
    lowered.gamma *= 0.9;
    let check = verify_certificate(&sys, &lowered);
    assert!(!check.valid && check.lmi_max_eigenvalue > 0.0);

    let mut flipped = cert.clone();
    flipped.q_psd = cert.q_psd.scale(-1.0);
    flipped.q_nn = cert.q_nn.scale(-1.0);
    let check = verify_certificate(&sys, &flipped);
    assert!(!check.valid);
    assert!(check.violation.unwrap().contains("Q"));

    let mut wrong_order = cert.clone();
    wrong_order.order = 4;
    assert!(!verify_certificate(&sys, &wrong_order).valid);
}

#[test]
fn composition_of_certificates() {
    let sys = four_state_siso();
    let (_, cert) = upper_bound_pos(&sys, 2, TOL).unwrap();
    assert_eq!(composition_check(&sys, &cert, 1), verify_certificate(&sys, &cert));
    for p in [2, 3] {
        let check = composition_check(&sys, &cert, p);
        assert!(check.valid, "p = {p}: {:?}", check.violation);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let sys = random_system(&mut rng, 3, 2, 2, 0.8);
    let (_, cert) = upper_bound_pos(&sys, 1, TOL).unwrap();
    let check = composition_check(&sys, &cert, 3);
    assert!(check.valid, "{:?}", check.violation);
}

#[test]
fn lower_bound_simple_cases() {
    let (value, w) = lower_bound_pos(&scalar(0.0, 0.0, 0.0, -3.0), 1, TOL).unwrap();
    assert!((value - 3.0).abs() < 1e-12);
    assert_eq!(w.v_star, vec![1.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..4 {
        let sys = random_positive_system(&mut rng, 2, 2, 2, 0.5);
        let (value, w) = lower_bound_pos(&sys, 3, TOL).unwrap();
        assert!((value - w.relaxation).abs() <= 1e-6 * (1.0 + value), "{value} vs {}", w.relaxation);
    }
}

#[test]
fn lower_bound_witness_invariants() {
    let sys = four_state_siso();
    for order in [2, 6, 10] {
        let (value, w) = lower_bound_pos(&sys, order, TOL).unwrap();
        let d = lift(&sys, order).unwrap().d;
        assert!((w.z_star.as_matrix().trace() - 1.0).abs() <= 1e-7);
        assert!(in_psd(&w.z_star, 1e-7) && in_nn(&w.z_star, 1e-7));
        assert!(w.v_star.iter().all(|&v| v >= 0.0));
        let norm: f64 = w.v_star.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let gain = d.mul_vec(&w.v_star).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((gain - value).abs() < 1e-12);
        assert!(value <= w.relaxation + 1e-6);
        assert!(pos_matnorm_bruteforce(&d, 2000, order as u64) <= w.relaxation + 1e-6);
    }
}

#[test]
fn exact_small_examples() {
    let row = |v: &[f64]| Matrix::new(1, v.len(), v.to_vec()).unwrap();
    assert!((pos_matnorm_exact_small(&row(&[1.0, -1.0])).unwrap() - 1.0).abs() < 1e-6);
    assert!((pos_matnorm_exact_small(&row(&[1.0, 1.0])).unwrap() - 2f64.sqrt()).abs() < 1e-6);
    assert!((pos_matnorm_exact_small(&Matrix::identity(2)).unwrap() - 1.0).abs() < 1e-6);
    assert!(matches!(
        pos_matnorm_exact_small(&Matrix::zeros(2, 5)),
        Err(Error::ColumnCountExceeded(5))
    ));
}

#[test]
fn exact_small_agrees_with_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for trial in 0..20 {
        let cols = 1 + trial % 4;
        let m = Matrix::from_fn(rng.gen_range(1..5), cols, |_, _| rng.gen_range(-1.0..1.0));
        let exact = pos_matnorm_exact_small(&m).unwrap();
        let sampled = pos_matnorm_bruteforce(&m, 20_000, trial as u64);
        assert!(sampled <= exact + 1e-6, "sampled {sampled} above exact {exact}");
        assert!(exact - sampled <= 2e-2 * (1.0 + exact), "sampled {sampled} far below exact {exact}");
    }
}

#[test]
fn bruteforce_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    for _ in 0..10 {
        let m = Matrix::from_fn(3, 4, |_, _| rng.gen_range(0.0..1.0));
        let s = spectral_norm(&m).unwrap();
        assert!((pos_matnorm_bruteforce(&m, 100, 1) - s).abs() < 1e-3);
        let mixed = Matrix::from_fn(3, 6, |_, _| rng.gen_range(-1.0..1.0));
        assert!(pos_matnorm_bruteforce(&mixed, 500, 2) <= spectral_norm(&mixed).unwrap() + 1e-12);
    }
    let m = Matrix::new(1, 2, vec![1.0, -1.0]).unwrap();
    assert!((pos_matnorm_bruteforce(&m, 100, 3) - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_invariants() {
    let sys = four_state_siso();
    let report = bound_sweep(&sys, 8, TOL).unwrap();
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    assert_eq!(report.rows.len(), 8);
    let uppers: Vec<f64> = report.rows.iter().map(|r| r.upper.unwrap()).collect();
    let lowers: Vec<f64> = report.rows.iter().map(|r| r.lower.unwrap()).collect();
    let best_upper = report.best_upper.unwrap();
    for (i, row) in report.rows.iter().enumerate() {
        assert_eq!(row.order, i + 1);
        assert!(uppers[i] <= report.hinf + TOL * (1.0 + report.hinf));
        assert!(lowers[i] <= best_upper + 2.0 * TOL);
        assert!(verify_certificate(&sys, row.certificate.as_ref().unwrap()).valid);
        if i > 0 {
            assert!(lowers[i] >= lowers[i - 1] - 1e-9, "lower bound decreased at N = {}", i + 1);
        }
    }
    for n in 1..=4 {
        for p in [2, 3] {
            if n * p <= 8 {
                assert!(uppers[n * p - 1] <= uppers[n - 1] + 2.0 * TOL * (1.0 + uppers[n - 1]));
            }
        }
    }
    assert_eq!(report.best_lower, lowers.iter().cloned().reduce(f64::max));
}
