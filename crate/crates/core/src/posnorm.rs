//! Bounds on the positive l2-induced norm `‖G‖₂₊`: the supremum of
//! `‖z‖₂ / ‖w‖₂` over nonzero, entrywise nonnegative inputs `w`.
//!
//! Upper bounds come from the gain LMI
//!
//! ```text
//! L = blockdiag(-P, -γ² I + Q) + [A B; C D]^T blockdiag(P, I) [A B; C D] ⪯ -εI
//! ```
//!
//! with `P ⪰ 0` and `Q` copositive, relaxed to `Q ∈ PSD+NN`. With `Q = 0` this
//! is the bounded-real LMI and yields the H∞ norm. Applied to the N-step
//! lifted system it gives `γ̄̄_N`, which never increases along divisor chains
//! of `N`.
//!
//! Lower bounds come from the static part `T_N` of the lift: the relaxed
//! problem `max trace(T_N^T T_N Z)` over `trace(Z) = 1`, `Z ∈ DNN` yields a
//! nonnegative Perron vector `v` and the bound `|T_N v|₂`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cones::{
    in_nn, in_psd, solve, AffineMap, ConeKind, ConicProgram, Constraint, Orientation, SolveResult, SolveStatus,
    SymVars,
};
use crate::error::{Error, Result};
use crate::lti::{lift, StateSpace};
use crate::numkernel::{is_schur_stable, max_eigenvalue, norm2, perron_vector, spectral_norm, sym_eig, Matrix, SymMatrix};

/// Which multiplier `Q` the gain LMI carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplier {
    /// `Q = 0`: the bounded-real lemma.
    Zero,
    /// `Q = Q₁ + Q₂` with `Q₁ ⪰ 0` and `Q₂` entrywise nonnegative.
    PsdPlusNn,
}

/// How `γ²` enters the gain LMI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaTerm {
    Fixed(f64),
    /// `γ²` is decision variable 0.
    Variable,
}

/// The gain LMI as a conic program, with the variable layout needed to read
/// back a certificate.
#[derive(Debug, Clone)]
pub struct GainLmi {
    pub program: ConicProgram,
    pub p: SymVars,
    pub q_psd: Option<SymVars>,
    pub q_nn: Option<SymVars>,
    pub gamma_sq: Option<usize>,
    /// Index of the `L ⪯ -εI` constraint.
    pub lmi: usize,
}

impl GainLmi {
    pub fn certificate(&self, x: &[f64], gamma: f64, order: usize) -> GainCertificate {
        let zero = |v: &Option<SymVars>, k: usize| v.map(|s| s.extract(x)).unwrap_or_else(|| SymMatrix::zeros(k));
        let nw = self.program.constraints()[self.lmi].map.dim() - self.p.dim;
        GainCertificate {
            gamma,
            p: self.p.extract(x),
            q_psd: zero(&self.q_psd, nw),
            q_nn: zero(&self.q_nn, nw),
            order,
        }
    }
}

/// A replayable witness for `‖G‖₂₊ < γ` (or `‖G‖₂ < γ` when `Q = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct GainCertificate {
    pub gamma: f64,
    pub p: SymMatrix,
    pub q_psd: SymMatrix,
    pub q_nn: SymMatrix,
    /// Lifting order the LMI was posed at.
    pub order: usize,
}

impl GainCertificate {
    pub fn q(&self) -> SymMatrix {
        self.q_psd.add(&self.q_nn)
    }
}

/// Evaluates `L(A, B, C, D, P, Q, γ)` directly.
pub fn gain_matrix(sys: &StateSpace, p: &SymMatrix, q: &SymMatrix, gamma: f64) -> Result<SymMatrix> {
    let (n, nw) = (sys.states(), sys.inputs());
    if p.dim() != n || q.dim() != nw {
        return Err(Error::dim(format!(
            "P must be {n}x{n} and Q {nw}x{nw}, got {}x{} and {}x{}",
            p.dim(),
            p.dim(),
            q.dim(),
            q.dim()
        )));
    }
    let ab = Matrix::hstack(&[sys.a(), sys.b()]);
    let cd = Matrix::hstack(&[sys.c(), sys.d()]);
    let corner = SymMatrix::block_diag(&[&p.scale(-1.0), &q.sub(&SymMatrix::identity(nw).scale(gamma * gamma))]);
    Ok(corner.add(&p.congruence(&ab)).add(&SymMatrix::gram(&cd)))
}

/// Builds the gain LMI for `sys` as a program in `(γ², P, Q₁, Q₂)`.
///
/// Variables are laid out as `[γ²]`, `P`, then `Q₁` and `Q₂` if present. The
/// LMI carries the default strictness margin; `P ⪰ 0`, `Q₁ ⪰ 0` and
/// `Q₂ ≥ 0` are non-strict. The objective is left at zero.
pub fn build_gain_lmi(sys: &StateSpace, gamma: GammaTerm, multiplier: Multiplier) -> Result<GainLmi> {
    if let GammaTerm::Fixed(g) = gamma {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidInput(format!("gain level must be positive, got {g}")));
        }
    }
    let (n, nw) = (sys.states(), sys.inputs());
    let mut next = 0;
    let gamma_sq = matches!(gamma, GammaTerm::Variable).then(|| {
        next += 1;
        0
    });
    let p = SymVars::new(next, n);
    next = p.end();
    let (q_psd, q_nn) = match multiplier {
        Multiplier::Zero => (None, None),
        Multiplier::PsdPlusNn => {
            let q1 = SymVars::new(next, nw);
            let q2 = SymVars::new(q1.end(), nw);
            next = q2.end();
            (Some(q1), Some(q2))
        }
    };

    let dim = n + nw;
    let cd = Matrix::hstack(&[sys.c(), sys.d()]);
    let mut f0 = SymMatrix::gram(&cd);
    if let GammaTerm::Fixed(g) = gamma {
        f0 = f0.sub(&SymMatrix::block_diag(&[&SymMatrix::zeros(n), &SymMatrix::identity(nw).scale(g * g)]));
    }
    let mut lmi = AffineMap::new(dim).with_constant(f0)?;
    p.add_to(&mut lmi, 0, -1.0);
    p.add_congruence(&mut lmi, &Matrix::hstack(&[sys.a(), sys.b()]), 0, 1.0);
    if let Some(g) = gamma_sq {
        for i in 0..nw {
            lmi.add_entry(g, n + i, n + i, -1.0);
        }
    }
    for q in [q_psd, q_nn].into_iter().flatten() {
        q.add_to(&mut lmi, n, 1.0);
    }

    let mut program = ConicProgram::new(next);
    let lmi_idx = program.add(Constraint::new(lmi, ConeKind::Psd, Orientation::NegatedMember).strict().labeled("L"))?;
    let mut pmap = AffineMap::new(n);
    p.add_to(&mut pmap, 0, 1.0);
    program.add(Constraint::new(pmap, ConeKind::Psd, Orientation::Member).labeled("P"))?;
    if let (Some(q1), Some(q2)) = (q_psd, q_nn) {
        let mut m1 = AffineMap::new(nw);
        q1.add_to(&mut m1, 0, 1.0);
        program.add(Constraint::new(m1, ConeKind::Psd, Orientation::Member).labeled("Q1"))?;
        let mut m2 = AffineMap::new(nw);
        q2.add_to(&mut m2, 0, 1.0);
        program.add(Constraint::new(m2, ConeKind::Nn, Orientation::Member).labeled("Q2"))?;
    }
    Ok(GainLmi {
        program,
        p,
        q_psd,
        q_nn,
        gamma_sq,
        lmi: lmi_idx,
    })
}

fn require_stable(sys: &StateSpace) -> Result<()> {
    let check = is_schur_stable(sys.a())?;
    if check.stable {
        Ok(())
    } else {
        Err(Error::UnstableSystem(
            check.diagnostic.unwrap_or_else(|| "A is not Schur stable".into()),
        ))
    }
}

fn accept(res: &SolveResult, tol: f64, what: &str) -> Result<()> {
    match res.status {
        SolveStatus::Optimal => Ok(()),
        SolveStatus::Feasible if res.gap <= tol => Ok(()),
        status => Err(Error::solver(
            status,
            format!(
                "{what}: gap {:.2e}, residual {:.2e}{}",
                res.gap,
                res.max_violation,
                res.message.as_deref().map(|m| format!(", {m}")).unwrap_or_default()
            ),
        )),
    }
}

/// Projects a solver point onto the exact cones so that replay does not
/// depend on interior-point round-off.
fn clean_certificate(mut cert: GainCertificate) -> GainCertificate {
    cert.p = project_psd(&cert.p);
    cert.q_psd = project_psd(&cert.q_psd);
    cert.q_nn = SymMatrix::from_upper(cert.q_nn.dim(), |r, c| cert.q_nn[(r, c)].max(0.0));
    cert
}

pub(crate) fn project_psd(s: &SymMatrix) -> SymMatrix {
    if s.dim() == 0 {
        return s.clone();
    }
    match sym_eig(s) {
        Ok(e) if e.min() < 0.0 => {
            let n = s.dim();
            SymMatrix::from_upper(n, |r, c| {
                (0..n)
                    .map(|k| e.values[k].max(0.0) * e.vectors[(r, k)] * e.vectors[(c, k)])
                    .sum()
            })
        }
        _ => s.clone(),
    }
}

/// Minimizes `γ²` over the gain LMI of `sys` and returns the certificate.
fn minimize_gain(sys: &StateSpace, multiplier: Multiplier, order: usize, tol: f64) -> Result<(f64, GainCertificate)> {
    let lmi = build_gain_lmi(sys, GammaTerm::Variable, multiplier)?;
    let mut program = lmi.program.clone();
    program.set_cost(0, 1.0);
    let res = solve(&program)?;
    accept(&res, tol, &format!("gain LMI at order {order}"))?;
    let gamma = res.x[0].max(0.0).sqrt();
    let cert = clean_certificate(lmi.certificate(&res.x, gamma, order));
    let check = replay(sys, &cert)?;
    if !check.valid {
        return Err(Error::solver(
            SolveStatus::NumericalFailure,
            format!(
                "certificate at order {order} failed replay: {}",
                check.violation.unwrap_or_default()
            ),
        ));
    }
    Ok((gamma, cert))
}

/// The H∞ norm `‖G‖₂`, as the minimal `γ` of the bounded-real LMI.
///
/// `tol` is the relative accuracy demanded of the solver; the returned value
/// is within `1e-7` relative of the LMI optimum when the solver converges
/// fully.
pub fn hinf_norm(sys: &StateSpace, tol: f64) -> Result<f64> {
    require_stable(sys)?;
    if sys.states() == 0 {
        return spectral_norm(sys.d());
    }
    Ok(minimize_gain(sys, Multiplier::Zero, 1, tol)?.0)
}

/// Upper bound `γ̄̄_N ≥ ‖G‖₂₊` from the gain LMI with a PSD+NN multiplier on
/// the N-step lift.
pub fn upper_bound_pos(sys: &StateSpace, order: usize, tol: f64) -> Result<(f64, GainCertificate)> {
    require_stable(sys)?;
    let lifted = lift(sys, order)?.as_state_space();
    minimize_gain(&lifted, Multiplier::PsdPlusNn, order, tol)
}

/// Outcome of [`verify_certificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateCheck {
    pub valid: bool,
    /// Largest eigenvalue of the replayed LMI matrix.
    pub lmi_max_eigenvalue: f64,
    /// The first violated clause, if any.
    pub violation: Option<String>,
}

fn replay(lifted: &StateSpace, cert: &GainCertificate) -> Result<CertificateCheck> {
    let fail = |lmax: f64, msg: String| CertificateCheck {
        valid: false,
        lmi_max_eigenvalue: lmax,
        violation: Some(msg),
    };
    let l = gain_matrix(lifted, &cert.p, &cert.q(), cert.gamma)?;
    let lmax = max_eigenvalue(&l)?;
    let round_off = |s: &SymMatrix| 1e-12 * (1.0 + s.as_matrix().max_abs());
    if !in_psd(&cert.p, round_off(&cert.p)) {
        return Ok(fail(lmax, "P is not positive semidefinite".into()));
    }
    if !in_psd(&cert.q_psd, round_off(&cert.q_psd)) {
        return Ok(fail(lmax, "Q1 is not positive semidefinite".into()));
    }
    if !in_nn(&cert.q_nn, 0.0) {
        return Ok(fail(lmax, "Q2 has negative entries".into()));
    }
    if !(lmax <= 0.0) {
        return Ok(fail(lmax, format!("LMI has positive eigenvalue {lmax:.3e}")));
    }
    Ok(CertificateCheck {
        valid: true,
        lmi_max_eigenvalue: lmax,
        violation: None,
    })
}

/// Re-evaluates the gain LMI of the `cert.order` lift at the witness values
/// and checks every cone membership, without calling the solver.
pub fn verify_certificate(sys: &StateSpace, cert: &GainCertificate) -> CertificateCheck {
    let lifted = match lift(sys, cert.order) {
        Ok(l) => l.as_state_space(),
        Err(e) => {
            return CertificateCheck {
                valid: false,
                lmi_max_eigenvalue: f64::NAN,
                violation: Some(e.to_string()),
            }
        }
    };
    replay(&lifted, cert).unwrap_or_else(|e| CertificateCheck {
        valid: false,
        lmi_max_eigenvalue: f64::NAN,
        violation: Some(e.to_string()),
    })
}

/// Builds the order `p N` certificate `(P, blockdiag(Q, .., Q), γ)` from an
/// order `N` one and replays it. A passing check shows that refining the lift
/// by an integer factor keeps the bound.
pub fn composition_check(sys: &StateSpace, cert: &GainCertificate, p: usize) -> CertificateCheck {
    if p == 0 {
        return CertificateCheck {
            valid: false,
            lmi_max_eigenvalue: f64::NAN,
            violation: Some("composition factor must be positive".into()),
        };
    }
    let repeat = |q: &SymMatrix| SymMatrix::block_diag(&vec![q; p]);
    let composed = GainCertificate {
        gamma: cert.gamma,
        p: cert.p.clone(),
        q_psd: repeat(&cert.q_psd),
        q_nn: repeat(&cert.q_nn),
        order: cert.order * p,
    };
    verify_certificate(sys, &composed)
}

/// Result of the relaxed positive matrix norm program.
struct RelaxedNorm {
    /// Optimum `g` of `min g s.t. g I - H ∈ PSD+NN`, equal to
    /// `max trace(H Z)` over `trace(Z) = 1, Z ∈ DNN`.
    value_sq: f64,
    z: SymMatrix,
}

fn relaxed_pos_norm_sq(h: &SymMatrix, tol: f64) -> Result<RelaxedNorm> {
    let k = h.dim();
    let mut map = AffineMap::new(k).with_constant(h.scale(-1.0))?;
    for i in 0..k {
        map.add_entry(0, i, i, 1.0);
    }
    let mut prog = ConicProgram::new(1);
    prog.set_cost(0, 1.0);
    prog.add(Constraint::new(map, ConeKind::PsdPlusNn, Orientation::Member))?;
    let res = solve(&prog)?;
    accept(&res, tol, "positive matrix norm relaxation")?;
    let z = res.witnesses[0].dual.clone().expect("PSD+NN constraint carries a dual");
    let tr = z.as_matrix().trace();
    let z = if tr > 0.0 { z.scale(1.0 / tr) } else { z };
    Ok(RelaxedNorm {
        value_sq: res.x[0].max(0.0),
        z,
    })
}

/// Witness for the lower bound `γ_N = |T_N v|₂ ≤ ‖G‖₂₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundWitness {
    pub order: usize,
    /// Optimal `Z` of the relaxed program, normalized to unit trace.
    pub z_star: SymMatrix,
    /// Nonnegative unit vector attaining `value`.
    pub v_star: Vec<f64>,
    pub value: f64,
    /// `sqrt` of the relaxed optimum, an upper bound on `‖T_N‖₂₊`.
    pub relaxation: f64,
    /// The top two eigenvalues of `Z` are separated by a factor of at least
    /// `1e6`, so `value` equals `‖T_N‖₂₊` up to solver accuracy.
    pub rank_one_exact: bool,
}

const RANK_ONE_RATIO: f64 = 1e-6;
/// Dual entries of `Z` this far below zero are interior-point round-off.
const DUAL_CLAMP: f64 = 1e-7;

fn best_nonneg_vector(d: &Matrix, z: &SymMatrix) -> Result<(Vec<f64>, f64, bool)> {
    let k = d.cols();
    if z.as_matrix().min_entry() < -DUAL_CLAMP * (1.0 + z.as_matrix().max_abs()) {
        return Err(Error::NotNonnegative {
            min_entry: z.as_matrix().min_entry(),
        });
    }
    let z = SymMatrix::from_upper(k, |r, c| z[(r, c)].max(0.0));
    let perron = perron_vector(&z, true)?;
    let eig = sym_eig(&z)?;
    let (l1, l2) = (eig.values[k - 1], if k > 1 { eig.values[k - 2] } else { 0.0 });
    let rank_one = l1 > 0.0 && l2.abs() / l1 <= RANK_ONE_RATIO;

    let mut best = perron.vector.clone();
    let mut value = norm2(&d.mul_vec(&best));
    for j in 0..k {
        let gain = norm2(&(0..d.rows()).map(|i| d[(i, j)]).collect::<Vec<_>>());
        if gain > value {
            value = gain;
            best = (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
        }
    }
    Ok((best, value, rank_one))
}

/// Lower bound `γ_N ≤ ‖G‖₂₊` from the static part of the N-step lift.
///
/// Solves `max trace(T^T T Z)` over `trace(Z) = 1`, `Z ∈ DNN`, extracts the
/// Perron vector `v` of the optimal `Z` and returns the larger of `|T v|₂` and
/// the best single-column gain of `T`.
pub fn lower_bound_pos(sys: &StateSpace, order: usize, tol: f64) -> Result<(f64, LowerBoundWitness)> {
    let lifted = lift(sys, order)?;
    let d = &lifted.d;
    if d.cols() == 0 {
        return Err(Error::dim("system has no inputs"));
    }
    let relaxed = relaxed_pos_norm_sq(&SymMatrix::gram(d), tol)?;
    let (v_star, value, rank_one_exact) = best_nonneg_vector(d, &relaxed.z)?;
    Ok((
        value,
        LowerBoundWitness {
            order,
            z_star: relaxed.z,
            v_star,
            value,
            relaxation: relaxed.value_sq.sqrt(),
            rank_one_exact,
        },
    ))
}

/// `‖D‖₂₊` for a matrix with at most four columns, where the PSD+NN
/// relaxation of copositivity is exact.
pub fn pos_matnorm_exact_small(d: &Matrix) -> Result<f64> {
    if d.cols() > 4 {
        return Err(Error::ColumnCountExceeded(d.cols()));
    }
    if d.cols() == 0 || d.rows() == 0 {
        return Ok(0.0);
    }
    Ok(relaxed_pos_norm_sq(&SymMatrix::gram(d), 1e-7)?.value_sq.sqrt())
}

/// Sampled lower bound on `‖M‖₂₊`: the best of `samples` random nonnegative
/// unit vectors, all canonical basis vectors, and the clamped top right
/// singular vector (both signs).
pub fn pos_matnorm_bruteforce(m: &Matrix, samples: usize, seed: u64) -> f64 {
    let k = m.cols();
    if k == 0 {
        return 0.0;
    }
    let gain = |v: &[f64]| -> f64 {
        let n = norm2(v);
        if n == 0.0 {
            0.0
        } else {
            norm2(&m.mul_vec(v)) / n
        }
    };
    let mut best = 0.0f64;
    for j in 0..k {
        let e: Vec<f64> = (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
        best = best.max(gain(&e));
    }
    if let Ok(e) = sym_eig(&SymMatrix::gram(m)) {
        let top = e.vector(k - 1);
        for sign in [1.0, -1.0] {
            let v: Vec<f64> = top.iter().map(|x| (sign * x).max(0.0)).collect();
            best = best.max(gain(&v));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; k];
    for _ in 0..samples {
        for x in v.iter_mut() {
            *x = rng.gen::<f64>();
        }
        best = best.max(gain(&v));
    }
    best
}

/// One lifting order of a [`BoundReport`].
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub order: usize,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub certificate: Option<GainCertificate>,
    pub witness: Option<LowerBoundWitness>,
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub hinf: f64,
    pub rows: Vec<BoundRow>,
    pub best_upper: Option<f64>,
    pub best_lower: Option<f64>,
    pub warnings: Vec<String>,
}

/// Runs the H∞ baseline and the upper and lower bounds for `N = 1..=n_max`.
///
/// Orders are solved in parallel. A failing order is recorded with empty
/// fields and a warning. The lower bound at `N` also tries the best vector of
/// `N - 1` padded with a zero block, which keeps the reported lower bounds
/// non-decreasing.
pub fn bound_sweep(sys: &StateSpace, n_max: usize, tol: f64) -> Result<BoundReport> {
    if n_max == 0 {
        return Err(Error::InvalidOrder);
    }
    require_stable(sys)?;
    let hinf = hinf_norm(sys, tol)?;
    let results: Vec<(usize, Result<(f64, GainCertificate)>, Result<(f64, LowerBoundWitness)>)> = (1..=n_max)
        .into_par_iter()
        .map(|n| (n, upper_bound_pos(sys, n, tol), lower_bound_pos(sys, n, tol)))
        .collect();

    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(n_max);
    let mut prev: Option<LowerBoundWitness> = None;
    for (n, up, lo) in results {
        let (upper, certificate) = match up {
            Ok((v, c)) => (Some(v), Some(c)),
            Err(e) => {
                warnings.push(format!("N={n}: upper bound failed: {e}"));
                (None, None)
            }
        };
        let mut witness = match lo {
            Ok((_, w)) => Some(w),
            Err(e) => {
                warnings.push(format!("N={n}: lower bound failed: {e}"));
                None
            }
        };
        if let (Some(w), Some(p)) = (witness.as_mut(), prev.as_ref()) {
            let lifted = lift(sys, n)?;
            let mut padded = p.v_star.clone();
            padded.resize(lifted.d.cols(), 0.0);
            let value = norm2(&lifted.d.mul_vec(&padded));
            if value > w.value {
                w.value = value;
                w.v_star = padded;
            }
        }
        if witness.is_some() {
            prev = witness.clone();
        }
        rows.push(BoundRow {
            order: n,
            upper,
            lower: witness.as_ref().map(|w| w.value),
            certificate,
            witness,
        });
    }

    let best_upper = rows.iter().filter_map(|r| r.upper).reduce(f64::min);
    let best_lower = rows.iter().filter_map(|r| r.lower).reduce(f64::max);
    if let (Some(u), Some(l)) = (best_upper, best_lower) {
        if l > u + 2.0 * tol * (1.0 + u) {
            warnings.push(format!("lower bound {l} exceeds upper bound {u}"));
        }
    }
    if let Some(u) = best_upper {
        if u > hinf + tol * (1.0 + hinf) {
            warnings.push(format!("best upper bound {u} exceeds the H-infinity norm {hinf}"));
        }
    }
    Ok(BoundReport {
        hinf,
        rows,
        best_upper,
        best_lower,
        warnings,
    })
}
