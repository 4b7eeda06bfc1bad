//! Cones of symmetric matrices, membership tests, and a conic program solver.
//!
//! The cones are PSD (positive semidefinite), NN (entrywise nonnegative),
//! their Minkowski sum PSD+NN, their intersection DNN, and COP (copositive:
//! `x^T S x >= 0` on the nonnegative orthant). The chain
//! `DNN ⊆ PSD, NN ⊆ PSD+NN ⊆ COP` holds in every dimension, and
//! `PSD+NN = COP` up to dimension four.
//!
//! The solver accepts PSD, NN, DNN and PSD+NN constraints. COP constraints
//! are rejected; use PSD+NN as the tractable inner approximation.

mod ipm;
mod program;
mod solve;

pub use program::{
    default_margin, AffineMap, ConicProgram, Constraint, ConstraintWitness, Orientation, SolveOptions,
    SolveResult, SolveStatus, SparseSym, SymVars,
};
pub use solve::{solve, solve_with};

use crate::error::{Error, Result};
use crate::numkernel::{min_eigenvalue, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeKind {
    Psd,
    Nn,
    PsdPlusNn,
    Dnn,
    Cop,
}

impl ConeKind {
    pub fn name(self) -> &'static str {
        match self {
            ConeKind::Psd => "PSD",
            ConeKind::Nn => "NN",
            ConeKind::PsdPlusNn => "PSD+NN",
            ConeKind::Dnn => "DNN",
            ConeKind::Cop => "COP",
        }
    }
}

/// `λ_min(S) >= -tol`.
pub fn in_psd(s: &SymMatrix, tol: f64) -> bool {
    min_eigenvalue(s).map(|l| l >= -tol).unwrap_or(false)
}

/// Every entry `>= -tol`.
pub fn in_nn(s: &SymMatrix, tol: f64) -> bool {
    s.as_matrix().as_slice().iter().all(|&v| v >= -tol)
}

/// Result of the PSD+NN membership program.
#[derive(Debug, Clone)]
pub struct PsdNnMembership {
    pub member: bool,
    /// Largest `t` with `S - t I ∈ PSD+NN`.
    pub margin: f64,
    /// `(psd, nn)` with `S = psd + nn`, present when `member`.
    pub split: Option<(SymMatrix, SymMatrix)>,
}

/// Decides `S ∈ PSD+NN` by maximizing `t` subject to `S - t I ∈ PSD+NN`.
///
/// The optimum is bounded by the smallest diagonal entry, so the program
/// always has a solution. Membership holds when `t >= -tol`.
pub fn in_psd_plus_nn(s: &SymMatrix, tol: f64) -> Result<PsdNnMembership> {
    let n = s.dim();
    if n == 0 {
        return Ok(PsdNnMembership {
            member: true,
            margin: f64::INFINITY,
            split: Some((SymMatrix::zeros(0), SymMatrix::zeros(0))),
        });
    }
    let mut map = AffineMap::new(n).with_constant(s.clone())?;
    for i in 0..n {
        map.add_entry(0, i, i, -1.0);
    }
    let mut prog = ConicProgram::new(1);
    prog.set_cost(0, -1.0);
    prog.add(Constraint::new(map, ConeKind::PsdPlusNn, Orientation::Member))?;
    let res = solve(&prog)?;
    if !res.status.is_solved() {
        return Err(Error::solver(res.status, "PSD+NN membership"));
    }
    let t = res.x[0];
    let member = t >= -tol;
    let split = member.then(|| {
        let (_, nn) = res.witnesses[0].split.clone().expect("PSD+NN constraint carries a split");
        (s.sub(&nn), nn)
    });
    Ok(PsdNnMembership { member, margin: t, split })
}

/// Exact copositivity of a 2x2 matrix: `s11 >= 0`, `s22 >= 0` and
/// `s12 + sqrt(s11 s22) >= 0`.
pub fn is_copositive_2x2(s: &SymMatrix) -> Result<bool> {
    if s.dim() != 2 {
        return Err(Error::dim(format!("expected a 2x2 matrix, got {}x{}", s.dim(), s.dim())));
    }
    let (a, b, d) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
    Ok(a >= 0.0 && d >= 0.0 && b + (a * d).sqrt() >= 0.0)
}

/// Evaluates `x^T S x` on the simplex grid `{x >= 0, sum x = 1}` with
/// spacing `1 / resolution`.
///
/// Returns false as soon as a sample is below `-1e-9`; a false answer is a
/// proof of non-copositivity, a true answer is only evidence.
///
/// # Panics
///
/// If the dimension exceeds six.
pub fn cop_bruteforce(s: &SymMatrix, resolution: usize) -> bool {
    let n = s.dim();
    assert!(n <= 6, "grid search is limited to dimension 6, got {n}");
    if n == 0 {
        return true;
    }
    let res = resolution.max(1);
    let mut x = vec![0.0; n];
    grid_nonnegative(s, res, res, 0, &mut x)
}

/// Walks the compositions of `remaining` into the entries `pos..` of `x`.
fn grid_nonnegative(s: &SymMatrix, res: usize, remaining: usize, pos: usize, x: &mut [f64]) -> bool {
    let n = x.len();
    if pos == n - 1 {
        x[pos] = remaining as f64 / res as f64;
        return s.quad_form(x) >= -1e-9;
    }
    for c in 0..=remaining {
        x[pos] = c as f64 / res as f64;
        if !grid_nonnegative(s, res, remaining - c, pos + 1, x) {
            return false;
        }
    }
    true
}
