//! ReLU recurrent networks and their small-gain stability tests.
//!
//! The network is
//!
//! ```text
//! x(k+1) = Λ x(k) + W_in w(k) + v(k)
//! z(k)   = W_out x(k)
//! w(k)   = relu(z(k) + s(k))
//! ```
//!
//! with `x(0) = 0`. Because `w` is always nonnegative, the loop gain that
//! matters is the positive norm of `G0 = (Λ, W_in, W_out, 0)`, and the
//! scaled small-gain LMI
//!
//! ```text
//! blockdiag(-P, -S + Q) + [Λ W_in; W_out 0]^T blockdiag(P, S) [Λ W_in; W_out 0] ≺ 0
//! ```
//!
//! with `P ⪰ 0`, `S` positive diagonal and `Q` copositive certifies finite
//! gain. `Q = 0` is the classical scaled small-gain test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cones::{in_nn, in_psd, solve, AffineMap, ConeKind, ConicProgram, Constraint, Orientation, SolveStatus, SymVars};
use crate::error::{Error, Result};
use crate::lti::{Signal, StateSpace};
use crate::numkernel::{is_schur_stable, max_eigenvalue, norm2, spectral_norm, Matrix, SymMatrix};
use crate::posnorm::{hinf_norm, project_psd, upper_bound_pos};

#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    lambda: Matrix,
    w_in: Matrix,
    w_out: Matrix,
}

impl RnnModel {
    /// Checks dimensions and Schur stability of `lambda`.
    pub fn new(lambda: Matrix, w_in: Matrix, w_out: Matrix) -> Result<Self> {
        let n = lambda.rows();
        if !lambda.is_square() {
            return Err(Error::dim(format!("Lambda must be square, got {}x{}", n, lambda.cols())));
        }
        if w_in.rows() != n {
            return Err(Error::dim(format!("Win has {} rows, expected {n}", w_in.rows())));
        }
        let m = w_in.cols();
        if w_out.shape() != (m, n) {
            return Err(Error::dim(format!(
                "Wout is {}x{}, expected {m}x{n}",
                w_out.rows(),
                w_out.cols()
            )));
        }
        let check = is_schur_stable(&lambda)?;
        if !check.stable {
            return Err(Error::UnstableSystem(
                check.diagnostic.unwrap_or_else(|| "Lambda is not Schur stable".into()),
            ));
        }
        Ok(Self { lambda, w_in, w_out })
    }

    pub fn lambda(&self) -> &Matrix {
        &self.lambda
    }
    pub fn w_in(&self) -> &Matrix {
        &self.w_in
    }
    pub fn w_out(&self) -> &Matrix {
        &self.w_out
    }

    pub fn states(&self) -> usize {
        self.lambda.rows()
    }

    /// Number of activation channels `m`.
    pub fn channels(&self) -> usize {
        self.w_in.cols()
    }

    /// The equivalent network `(Λ, W_in D, D^{-1} W_out)` for a positive
    /// diagonal `D`. ReLU commutes with positive scaling, so this network has
    /// the same trajectories in the scaled coordinates `D^{-1} z`, `D^{-1} w`.
    pub fn scaled(&self, d: &[f64]) -> Result<RnnModel> {
        if d.len() != self.channels() {
            return Err(Error::dim(format!("scaling has {} entries, expected {}", d.len(), self.channels())));
        }
        if d.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput("scaling entries must be positive".into()));
        }
        let w_in = Matrix::from_fn(self.states(), self.channels(), |i, j| self.w_in[(i, j)] * d[j]);
        let w_out = Matrix::from_fn(self.channels(), self.states(), |i, j| self.w_out[(i, j)] / d[i]);
        Ok(Self {
            lambda: self.lambda.clone(),
            w_in,
            w_out,
        })
    }
}

pub fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

/// The linear parts of the loop.
#[derive(Debug, Clone)]
pub struct Subsystems {
    /// `(Λ, [W_in I], W_out, 0)`, from `(w, v)` to `z`.
    pub g: StateSpace,
    /// `(Λ, W_in, W_out, 0)`, from `w` to `z`.
    pub g0: StateSpace,
    /// `(Λ, I, W_out, 0)`, from `v` to `z`.
    pub g1: StateSpace,
}

pub fn subsystems(rnn: &RnnModel) -> Result<Subsystems> {
    let (n, m) = (rnn.states(), rnn.channels());
    let eye = Matrix::identity(n);
    Ok(Subsystems {
        g: StateSpace::new(
            rnn.lambda.clone(),
            Matrix::hstack(&[&rnn.w_in, &eye]),
            rnn.w_out.clone(),
            Matrix::zeros(m, m + n),
        )?,
        g0: StateSpace::new(rnn.lambda.clone(), rnn.w_in.clone(), rnn.w_out.clone(), Matrix::zeros(m, m))?,
        g1: StateSpace::new(rnn.lambda.clone(), eye, rnn.w_out.clone(), Matrix::zeros(m, n))?,
    })
}

#[derive(Debug, Clone)]
pub struct RnnTrajectory {
    pub x: Signal,
    pub z: Signal,
    pub w: Signal,
}

/// Runs the network for `horizon` steps from `x(0) = 0` with activation
/// offset `s` (m channels) and state disturbance `v` (n channels).
pub fn simulate_rnn(rnn: &RnnModel, s: &Signal, v: &Signal, horizon: usize) -> Result<RnnTrajectory> {
    let (n, m) = (rnn.states(), rnn.channels());
    if s.channels() != m || v.channels() != n {
        return Err(Error::dim(format!(
            "inputs have {} and {} channels, expected {m} and {n}",
            s.channels(),
            v.channels()
        )));
    }
    if s.len() < horizon || v.len() < horizon {
        return Err(Error::dim(format!("inputs are shorter than the horizon {horizon}")));
    }
    let mut x = vec![0.0; n];
    let mut xs = Signal::zeros(n, horizon);
    let mut zs = Signal::zeros(m, horizon);
    let mut ws = Signal::zeros(m, horizon);
    for k in 0..horizon {
        xs.step_mut(k).copy_from_slice(&x);
        let z = rnn.w_out.mul_vec(&x);
        let pre: Vec<f64> = z.iter().zip(s.step(k)).map(|(a, b)| a + b).collect();
        let w = relu(&pre);
        zs.step_mut(k).copy_from_slice(&z);
        ws.step_mut(k).copy_from_slice(&w);
        let lx = rnn.lambda.mul_vec(&x);
        let bw = rnn.w_in.mul_vec(&w);
        x = (0..n).map(|i| lx[i] + bw[i] + v.step(k)[i]).collect();
    }
    Ok(RnnTrajectory { x: xs, z: zs, w: ws })
}

/// The small-gain LMI in margin form, with the layout of its variables.
///
/// Variables are `t`, `P`, the diagonal of `S`, and `Q₁`, `Q₂` when the
/// copositive multiplier is enabled. The program minimizes `t` subject to
/// `L(P, S, Q) ⪯ t I`, `P ⪰ 0`, `S ≥ 0`, `Q₁ ⪰ 0`, `Q₂ ≥ 0` and the
/// normalization `trace(P) + trace(S) ≤ 1`. The LMI is homogeneous, so it is
/// strictly feasible exactly when the optimal `t` is negative.
#[derive(Debug, Clone)]
pub struct SsgLmi {
    pub program: ConicProgram,
    pub t: usize,
    pub p: SymVars,
    /// First of the `m` diagonal entries of `S`.
    pub s: usize,
    pub q_psd: Option<SymVars>,
    pub q_nn: Option<SymVars>,
}

pub fn ssg_lmi(rnn: &RnnModel, with_cop: bool) -> Result<SsgLmi> {
    let (n, m) = (rnn.states(), rnn.channels());
    let t = 0;
    let p = SymVars::new(1, n);
    let s = p.end();
    let (q_psd, q_nn, total) = if with_cop {
        let q1 = SymVars::new(s + m, m);
        let q2 = SymVars::new(q1.end(), m);
        (Some(q1), Some(q2), q2.end())
    } else {
        (None, None, s + m)
    };

    let dim = n + m;
    let mut lmi = AffineMap::new(dim);
    for i in 0..dim {
        lmi.add_entry(t, i, i, -1.0);
    }
    p.add_to(&mut lmi, 0, -1.0);
    p.add_congruence(&mut lmi, &Matrix::hstack(&[&rnn.lambda, &rnn.w_in]), 0, 1.0);
    for i in 0..m {
        lmi.add_entry(s + i, n + i, n + i, -1.0);
        for a in 0..n {
            for b in a..n {
                lmi.add_entry(s + i, a, b, rnn.w_out[(i, a)] * rnn.w_out[(i, b)]);
            }
        }
    }
    for q in [q_psd, q_nn].into_iter().flatten() {
        q.add_to(&mut lmi, n, 1.0);
    }

    let mut program = ConicProgram::new(total);
    program.set_cost(t, 1.0);
    program.add(Constraint::new(lmi, ConeKind::Psd, Orientation::NegatedMember).labeled("L - tI"))?;
    let mut pmap = AffineMap::new(n);
    p.add_to(&mut pmap, 0, 1.0);
    program.add(Constraint::new(pmap, ConeKind::Psd, Orientation::Member).labeled("P"))?;
    for i in 0..m {
        let mut smap = AffineMap::new(1);
        smap.add_entry(s + i, 0, 0, 1.0);
        program.add(Constraint::new(smap, ConeKind::Nn, Orientation::Member).labeled(format!("s{i}")))?;
    }
    let mut norm = AffineMap::new(1).with_constant(SymMatrix::identity(1))?;
    for i in 0..n {
        norm.add_entry(p.index(i, i), 0, 0, -1.0);
    }
    for i in 0..m {
        norm.add_entry(s + i, 0, 0, -1.0);
    }
    program.add(Constraint::new(norm, ConeKind::Nn, Orientation::Member).labeled("normalization"))?;
    if let (Some(q1), Some(q2)) = (q_psd, q_nn) {
        let mut m1 = AffineMap::new(m);
        q1.add_to(&mut m1, 0, 1.0);
        program.add(Constraint::new(m1, ConeKind::Psd, Orientation::Member).labeled("Q1"))?;
        let mut m2 = AffineMap::new(m);
        q2.add_to(&mut m2, 0, 1.0);
        program.add(Constraint::new(m2, ConeKind::Nn, Orientation::Member).labeled("Q2"))?;
    }
    Ok(SsgLmi {
        program,
        t,
        p,
        s,
        q_psd,
        q_nn,
    })
}

/// A strictly feasible point of the small-gain LMI.
#[derive(Debug, Clone, PartialEq)]
pub struct SsgWitness {
    pub p: SymMatrix,
    /// Diagonal of `S`, every entry at least [`S_FLOOR`].
    pub s: Vec<f64>,
    pub q_psd: SymMatrix,
    pub q_nn: SymMatrix,
}

impl SsgWitness {
    /// The witness `(P, D S D, D Q D)` for the scaled network
    /// [`RnnModel::scaled`]`(d)`.
    pub fn scaled(&self, d: &[f64]) -> SsgWitness {
        let dq = |q: &SymMatrix| SymMatrix::from_upper(q.dim(), |i, j| d[i] * q[(i, j)] * d[j]);
        SsgWitness {
            p: self.p.clone(),
            s: self.s.iter().zip(d).map(|(s, d)| s * d * d).collect(),
            q_psd: dq(&self.q_psd),
            q_nn: dq(&self.q_nn),
        }
    }
}

/// Lower limit on the entries of `S` in a witness.
pub const S_FLOOR: f64 = 1e-6;
/// Witnesses satisfy `L ⪯ -SSG_MARGIN I`.
pub const SSG_MARGIN: f64 = 1e-8;
/// Optimal margins above `-SSG_FEASIBILITY` count as infeasible.
pub const SSG_FEASIBILITY: f64 = 1e-7;

/// `L(P, S, Q)` of the small-gain LMI evaluated directly.
pub fn ssg_matrix(rnn: &RnnModel, w: &SsgWitness) -> Result<SymMatrix> {
    let (n, m) = (rnn.states(), rnn.channels());
    if w.p.dim() != n || w.s.len() != m || w.q_psd.dim() != m || w.q_nn.dim() != m {
        return Err(Error::dim("witness does not match the network dimensions"));
    }
    let s = SymMatrix::diag(&w.s);
    let corner = SymMatrix::block_diag(&[&w.p.scale(-1.0), &w.q_psd.add(&w.q_nn).sub(&s)]);
    let top = Matrix::hstack(&[&rnn.lambda, &rnn.w_in]);
    let bottom = Matrix::hstack(&[&rnn.w_out, &Matrix::zeros(m, m)]);
    Ok(corner.add(&w.p.congruence(&top)).add(&s.congruence(&bottom)))
}

/// Solver-free check of a witness: cone memberships, `S ≥ S_FLOOR`, and
/// `λ_max(L) < 0`.
pub fn verify_ssg_witness(rnn: &RnnModel, w: &SsgWitness) -> bool {
    let Ok(l) = ssg_matrix(rnn, w) else {
        return false;
    };
    let round_off = |s: &SymMatrix| 1e-12 * (1.0 + s.as_matrix().max_abs());
    in_psd(&w.p, round_off(&w.p))
        && in_psd(&w.q_psd, round_off(&w.q_psd))
        && in_nn(&w.q_nn, 0.0)
        && w.s.iter().all(|&s| s >= S_FLOOR)
        && max_eigenvalue(&l).map(|v| v < 0.0).unwrap_or(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Feasible,
    Infeasible,
    /// The solver did not reach a decision.
    Indeterminate,
}

/// Result of one small-gain test.
#[derive(Debug, Clone)]
pub struct SsgResult {
    pub outcome: Outcome,
    /// Optimal `t` of the margin program.
    pub margin: Option<f64>,
    pub witness: Option<SsgWitness>,
    pub message: Option<String>,
}

/// Turns a margin-program point with `t < 0` into a witness that clears
/// [`S_FLOOR`] and [`SSG_MARGIN`], using homogeneity of the LMI.
fn strict_witness(rnn: &RnnModel, raw: SsgWitness, t: f64) -> Option<SsgWitness> {
    let wout = spectral_norm(&rnn.w_out).ok()?;
    let mut w = SsgWitness {
        p: project_psd(&raw.p),
        s: raw.s.iter().map(|v| v.max(0.0)).collect(),
        q_psd: project_psd(&raw.q_psd),
        q_nn: SymMatrix::from_upper(raw.q_nn.dim(), |i, j| raw.q_nn[(i, j)].max(0.0)),
    };
    // Raising S by δ moves L by at most δ (1 + |W_out|²).
    let delta = t.abs() / (2.0 * (1.0 + wout * wout));
    for s in w.s.iter_mut() {
        *s += delta;
    }
    let lmax = max_eigenvalue(&ssg_matrix(rnn, &w).ok()?).ok()?;
    if !(lmax < 0.0) {
        return None;
    }
    let s_min = w.s.iter().cloned().fold(f64::INFINITY, f64::min);
    let kappa = (S_FLOOR / s_min).max(2.0 * SSG_MARGIN / lmax.abs()).max(1.0);
    let w = SsgWitness {
        p: w.p.scale(kappa),
        s: w.s.iter().map(|v| v * kappa).collect(),
        q_psd: w.q_psd.scale(kappa),
        q_nn: w.q_nn.scale(kappa),
    };
    verify_ssg_witness(rnn, &w).then_some(w)
}

/// Runs the SSG (`with_cop = false`) or SSG+COP test.
pub fn ssg_test(rnn: &RnnModel, with_cop: bool) -> SsgResult {
    let indeterminate = |msg: String| SsgResult {
        outcome: Outcome::Indeterminate,
        margin: None,
        witness: None,
        message: Some(msg),
    };
    let lmi = match ssg_lmi(rnn, with_cop) {
        Ok(l) => l,
        Err(e) => return indeterminate(e.to_string()),
    };
    let res = match solve(&lmi.program) {
        Ok(r) => r,
        Err(e) => return indeterminate(e.to_string()),
    };
    if !matches!(res.status, SolveStatus::Optimal | SolveStatus::Feasible) {
        return indeterminate(format!(
            "solver status {:?}{}",
            res.status,
            res.message.map(|m| format!(": {m}")).unwrap_or_default()
        ));
    }
    let t = res.x[lmi.t];
    if t >= -SSG_FEASIBILITY {
        return SsgResult {
            outcome: Outcome::Infeasible,
            margin: Some(t),
            witness: None,
            message: None,
        };
    }
    let m = rnn.channels();
    let zero = SymMatrix::zeros(m);
    let raw = SsgWitness {
        p: lmi.p.extract(&res.x),
        s: res.x[lmi.s..lmi.s + m].to_vec(),
        q_psd: lmi.q_psd.map(|q| q.extract(&res.x)).unwrap_or_else(|| zero.clone()),
        q_nn: lmi.q_nn.map(|q| q.extract(&res.x)).unwrap_or(zero),
    };
    match strict_witness(rnn, raw, t) {
        Some(w) => SsgResult {
            outcome: Outcome::Feasible,
            margin: Some(t),
            witness: Some(w),
            message: None,
        },
        None => SsgResult {
            outcome: Outcome::Indeterminate,
            margin: Some(t),
            witness: None,
            message: Some("negative margin but the witness failed replay".into()),
        },
    }
}

/// `√2 |[[γ0/(1-γ0), γ1/(1-γ0)], [1/(1-γ0), γ1/(1-γ0)]]|₂`, the closed-loop
/// gain bound from `s, v` to `z, w` given `‖G0‖₂₊ ≤ γ0 < 1` and
/// `‖G1‖₂ ≤ γ1`. `None` when `γ0 >= 1`.
pub fn small_gain_bound(gamma0_plus: f64, gamma1: f64) -> Option<f64> {
    if !(gamma0_plus < 1.0) || gamma0_plus < 0.0 || gamma1 < 0.0 {
        return None;
    }
    let k = 1.0 / (1.0 - gamma0_plus);
    let m = Matrix::from_rows(&[[gamma0_plus * k, gamma1 * k], [k, gamma1 * k]]).ok()?;
    Some(std::f64::consts::SQRT_2 * spectral_norm(&m).ok()?)
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    /// Lifting order for the `‖G0‖₂₊` estimate.
    pub lift_order: usize,
    /// Also compute `γ0+`, `γ1` and the certified gain.
    pub gain_estimates: bool,
    pub tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            lift_order: 4,
            gain_estimates: true,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub ssg: SsgResult,
    pub ssg_cop: SsgResult,
    /// Upper estimate of `‖G0‖₂₊` from the lifted gain LMI.
    pub gamma0_plus: Option<f64>,
    /// `‖G1‖₂`.
    pub gamma1: Option<f64>,
    /// Bound on the gain from `(s, v)` to `(z, w)`.
    pub certified_gain: Option<f64>,
    /// Channel scaling used for `certified_gain`, when the unscaled estimate
    /// was not below one or the scaled one was tighter.
    pub scaling: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

impl StabilityVerdict {
    pub fn ssg_feasible(&self) -> bool {
        self.ssg.outcome == Outcome::Feasible
    }

    pub fn ssg_cop_feasible(&self) -> bool {
        self.ssg_cop.outcome == Outcome::Feasible
    }
}

/// Gain bound through the unscaled loop: `(γ0+, γ1, bound)`.
fn loop_gain(rnn: &RnnModel, opts: &CertifyOptions) -> Result<(f64, f64, Option<f64>)> {
    let subs = subsystems(rnn)?;
    let g0 = upper_bound_pos(&subs.g0, opts.lift_order, opts.tol)?.0;
    let g1 = hinf_norm(&subs.g1, opts.tol)?;
    Ok((g0, g1, small_gain_bound(g0, g1)))
}

pub fn certify(rnn: &RnnModel) -> StabilityVerdict {
    certify_with(rnn, &CertifyOptions::default())
}

/// Runs both small-gain tests and, when SSG+COP holds, bounds the gain.
///
/// An SSG witness is also an SSG+COP witness with `Q = 0`; it is used when
/// the SSG+COP solve alone does not reach a decision. The gain bound tries
/// the network as given and the network rescaled by `D = S^{-1/2}` from the
/// SSG+COP witness (normalized to `min D = 1`), for which the LMI itself
/// certifies `‖G0‖₂₊ < 1`; the scaled bound is multiplied by `max D`.
pub fn certify_with(rnn: &RnnModel, opts: &CertifyOptions) -> StabilityVerdict {
    let ssg = ssg_test(rnn, false);
    let mut ssg_cop = ssg_test(rnn, true);
    let mut notes = Vec::new();
    if ssg.outcome == Outcome::Feasible && ssg_cop.outcome != Outcome::Feasible {
        notes.push("SSG+COP solve inconclusive; using the SSG witness with Q = 0".into());
        ssg_cop = ssg.clone();
    }

    let mut verdict = StabilityVerdict {
        ssg,
        ssg_cop,
        gamma0_plus: None,
        gamma1: None,
        certified_gain: None,
        scaling: None,
        notes,
    };
    if !opts.gain_estimates {
        return verdict;
    }

    match loop_gain(rnn, opts) {
        Ok((g0, g1, bound)) => {
            verdict.gamma0_plus = Some(g0);
            verdict.gamma1 = Some(g1);
            if verdict.ssg_cop_feasible() {
                verdict.certified_gain = bound;
            }
        }
        Err(e) => verdict.notes.push(format!("gain estimate failed: {e}")),
    }

    if let Some(w) = verdict.ssg_cop.witness.clone() {
        let d: Vec<f64> = w.s.iter().map(|s| 1.0 / s.sqrt()).collect();
        let d_min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let d: Vec<f64> = d.iter().map(|v| v / d_min).collect();
        let cond = d.iter().cloned().fold(0.0, f64::max);
        match rnn.scaled(&d).and_then(|scaled| loop_gain(&scaled, opts)) {
            Ok((_, _, Some(bound))) => {
                let scaled_bound = cond * bound;
                if verdict.certified_gain.map_or(true, |g| scaled_bound < g) {
                    verdict.certified_gain = Some(scaled_bound);
                    verdict.scaling = Some(d);
                }
            }
            Ok((g0, _, None)) => verdict
                .notes
                .push(format!("scaled loop gain estimate {g0} is not below one")),
            Err(e) => verdict.notes.push(format!("scaled gain estimate failed: {e}")),
        }
    }
    if verdict.ssg_cop_feasible() && verdict.certified_gain.is_none() {
        verdict.notes.push("SSG+COP holds but no finite gain bound was obtained".into());
    }
    verdict
}

/// Samples the two-channel combination inequality: whenever
/// `|z| <= a|s| + b|v|` and `|w| <= c|s| + d|v|`, then
/// `|(z, w)| <= √2 |[[a, b], [c, d]]|₂ |(s, v)|`.
///
/// Only norms enter the inequality, so `s` and `v` are random vectors and
/// `|z|`, `|w|` are drawn up to their premise bounds, every other trial at
/// the bound itself.
pub fn gain_combination_lemma_check(a: f64, b: f64, c: f64, d: f64, trials: usize, seed: u64) -> bool {
    if [a, b, c, d].iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return false;
    }
    let Ok(norm) = Matrix::from_rows(&[[a, b], [c, d]]).and_then(|m| spectral_norm(&m)) else {
        return false;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let len = 1 + trial % 5;
        let scale_s = rng.gen_range(0.0..3.0);
        let scale_v = rng.gen_range(0.0..3.0);
        let s: Vec<f64> = (0..len).map(|_| scale_s * rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..len).map(|_| scale_v * rng.gen_range(-1.0..1.0)).collect();
        let (ns, nv) = (norm2(&s), norm2(&v));
        let (fz, fw) = if trial % 2 == 0 {
            (1.0, 1.0)
        } else {
            (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))
        };
        let nz = fz * (a * ns + b * nv);
        let nw = fw * (c * ns + d * nv);
        let lhs = nz.hypot(nw);
        let rhs = std::f64::consts::SQRT_2 * norm * ns.hypot(nv);
        if lhs > rhs * (1.0 + 1e-12) {
            return false;
        }
    }
    true
}

/// Closed interval sampled at `steps` evenly spaced points; one step means
/// the single point `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !lo.is_finite() || !hi.is_finite() || (steps > 1 && hi < lo) {
            return Err(Error::InvalidInput(format!("invalid grid axis {lo}:{hi}:{steps}")));
        }
        Ok(Self { lo, hi, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// A network family with two scalar parameters: `a` is added to one entry
/// of `W_in` and `b` replaces another.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnTemplate {
    pub base: RnnModel,
    pub a_entry: (usize, usize),
    pub b_entry: (usize, usize),
}

impl RnnTemplate {
    pub fn new(base: RnnModel, a_entry: (usize, usize), b_entry: (usize, usize)) -> Result<Self> {
        let (n, m) = (base.states(), base.channels());
        for (i, j) in [a_entry, b_entry] {
            if i >= n || j >= m {
                return Err(Error::dim(format!("entry ({i}, {j}) outside the {n}x{m} input weight")));
            }
        }
        Ok(Self { base, a_entry, b_entry })
    }

    pub fn instantiate(&self, a: f64, b: f64) -> RnnModel {
        let mut w_in = self.base.w_in.clone();
        w_in[self.a_entry] += a;
        w_in[self.b_entry] = b;
        RnnModel {
            lambda: self.base.lambda.clone(),
            w_in,
            w_out: self.base.w_out.clone(),
        }
    }
}

/// The six-channel network with `Λ = 0`, `W_out = I` and perturbation sites
/// `(0, 2)` (offset by `a`) and `(2, 1)` (set to `b`).
pub fn reference_template() -> RnnTemplate {
    let w_in = crate::datasets::relu_template_input_weight();
    let base = RnnModel::new(Matrix::zeros(6, 6), w_in, Matrix::identity(6)).expect("reference network is valid");
    RnnTemplate::new(base, (0, 2), (2, 1)).expect("entries inside the template")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellClass {
    /// SSG and SSG+COP both hold.
    Both,
    /// Only SSG+COP holds.
    CopOnly,
    Neither,
    Indeterminate,
}

impl CellClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CellClass::Both => "both",
            CellClass::CopOnly => "cop_only",
            CellClass::Neither => "neither",
            CellClass::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub a: f64,
    pub b: f64,
    pub class: CellClass,
}

/// Classifies a network by the two small-gain tests.
pub fn classify(rnn: &RnnModel) -> CellClass {
    let ssg = ssg_test(rnn, false).outcome;
    if ssg == Outcome::Feasible {
        return CellClass::Both;
    }
    match (ssg, ssg_test(rnn, true).outcome) {
        (_, Outcome::Feasible) => CellClass::CopOnly,
        (Outcome::Infeasible, Outcome::Infeasible) => CellClass::Neither,
        _ => CellClass::Indeterminate,
    }
}

/// Classifies every `(a, b)` grid point, in parallel. Output is ordered by
/// `a`, then `b`.
pub fn region_sweep(template: &RnnTemplate, a_axis: &GridAxis, b_axis: &GridAxis) -> Vec<SweepCell> {
    let points: Vec<(f64, f64)> = a_axis
        .points()
        .into_iter()
        .flat_map(|a| b_axis.points().into_iter().map(move |b| (a, b)))
        .collect();
    points
        .into_par_iter()
        .map(|(a, b)| SweepCell {
            a,
            b,
            class: classify(&template.instantiate(a, b)),
        })
        .collect()
}
