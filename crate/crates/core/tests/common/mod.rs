#![allow(dead_code)]

use posgain::lti::StateSpace;
use posgain::numkernel::{spectral_norm, Matrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random system with `|A|₂ = radius`, hence Schur stable for `radius < 1`.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, nw: usize, nz: usize, radius: f64) -> StateSpace {
    let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let norm = spectral_norm(&a).unwrap().max(1e-3);
    StateSpace::new(
        a.scale(radius / norm),
        Matrix::from_fn(n, nw, |_, _| rng.gen_range(-1.0..1.0)),
        Matrix::from_fn(nz, n, |_, _| rng.gen_range(-1.0..1.0)),
        Matrix::from_fn(nz, nw, |_, _| rng.gen_range(-0.5..0.5)),
    )
    .unwrap()
}

/// Random system with every entry of `A, B, C, D` nonnegative and `|A|₂ = radius`.
pub fn random_positive_system(rng: &mut ChaCha8Rng, n: usize, nw: usize, nz: usize, radius: f64) -> StateSpace {
    let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
    let norm = spectral_norm(&a).unwrap().max(1e-3);
    StateSpace::new(
        a.scale(radius / norm),
        Matrix::from_fn(n, nw, |_, _| rng.gen_range(0.0..1.0)),
        Matrix::from_fn(nz, n, |_, _| rng.gen_range(0.0..1.0)),
        Matrix::from_fn(nz, nw, |_, _| rng.gen_range(0.0..0.5)),
    )
    .unwrap()
}

/// `max_θ |D + Σ_j C A^{j-1} B e^{-ijθ}|` for a single-input single-output
/// system, by frequency sampling of the truncated impulse response.
pub fn siso_peak_gain(sys: &StateSpace, samples: usize) -> f64 {
    assert!(sys.inputs() == 1 && sys.outputs() == 1);
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d()[(0, 0)]);
    let n = sys.states();
    let mut best: f64 = 0.0;
    for k in 0..=samples {
        let theta = std::f64::consts::PI * k as f64 / samples as f64;
        let (mut re, mut im) = (d, 0.0);
        let mut x: Vec<f64> = (0..n).map(|i| b[(i, 0)]).collect();
        for j in 1..4000 {
            let h: f64 = (0..n).map(|i| c[(0, i)] * x[i]).sum();
            let (cr, ci) = ((theta * j as f64).cos(), -(theta * j as f64).sin());
            re += h * cr;
            im += h * ci;
            x = a.mul_vec(&x);
            if x.iter().all(|v| v.abs() < 1e-16) {
                break;
            }
        }
        best = best.max(re.hypot(im));
    }
    best
}
