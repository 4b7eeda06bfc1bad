//! Primal-dual interior-point method for block-diagonal semidefinite programs
//! in inequality form:
//!
//! ```text
//! minimize  c . x   subject to  S_b = F0_b + sum_i x_i F_ib  ⪰ 0   (PSD blocks)
//!                               s_l = f0_l + sum_i a_li x_i  >= 0   (LP rows)
//! ```
//!
//! with dual `maximize -F0 . X  s.t.  F_i . X = c_i, X ⪰ 0`. Search
//! directions are HKM with a Mehrotra predictor-corrector, started from an
//! infeasible point.

use crate::numkernel::{min_eigenvalue, Cholesky, Matrix, SymMatrix};

use super::program::SparseSym;

pub(crate) struct PsdBlock {
    pub dim: usize,
    pub f0: Matrix,
    pub terms: Vec<(usize, SparseSym)>,
}

#[derive(Default)]
pub(crate) struct LpRows {
    pub f0: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl LpRows {
    pub fn push(&mut self, f0: f64, coeffs: Vec<(usize, f64)>) {
        self.f0.push(f0);
        self.rows.push(coeffs);
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }
}

pub(crate) struct BlockSdp {
    pub m: usize,
    pub c: Vec<f64>,
    pub psd: Vec<PsdBlock>,
    pub lp: LpRows,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum IpmStatus {
    Converged,
    Loose,
    MaxIterations,
    Stalled(String),
    Diverged(String),
}

pub(crate) struct IpmSolution {
    pub status: IpmStatus,
    pub x: Vec<f64>,
    pub dual: Vec<Matrix>,
    pub dual_lp: Vec<f64>,
    pub dobj: f64,
    pub pinf: f64,
    pub dinf: f64,
    pub gap: f64,
    pub iterations: usize,
}

pub(crate) struct IpmSettings {
    pub max_iterations: usize,
    pub tol: f64,
    pub loose_tol: f64,
}

struct Term {
    var: usize,
    full: Vec<(usize, usize, f64)>,
    dense: Option<Matrix>,
}

struct Prepared {
    dim: usize,
    f0: Matrix,
    terms: Vec<Term>,
}

fn prepare(blocks: &[PsdBlock]) -> Vec<Prepared> {
    blocks
        .iter()
        .map(|b| Prepared {
            dim: b.dim,
            f0: b.f0.clone(),
            terms: b
                .terms
                .iter()
                .filter(|(_, f)| f.nnz() > 0)
                .map(|(var, f)| {
                    let full = f.full_entries();
                    let dense = (full.len() >= b.dim).then(|| f.to_dense(b.dim).into_matrix());
                    Term { var: *var, full, dense }
                })
                .collect(),
        })
        .collect()
}

/// `trace(F W)` for sparse symmetric `F`.
fn inner(full: &[(usize, usize, f64)], w: &Matrix) -> f64 {
    full.iter().map(|&(a, b, v)| v * w[(b, a)]).sum()
}

fn eval_block(p: &Prepared, x: &[f64]) -> Matrix {
    let mut m = p.f0.clone();
    for t in &p.terms {
        let xv = x[t.var];
        if xv != 0.0 {
            for &(a, b, v) in &t.full {
                m[(a, b)] += xv * v;
            }
        }
    }
    m
}

fn eval_lp(lp: &LpRows, x: &[f64]) -> Vec<f64> {
    lp.f0
        .iter()
        .zip(&lp.rows)
        .map(|(f0, row)| f0 + row.iter().map(|&(i, a)| a * x[i]).sum::<f64>())
        .collect()
}

fn sym(m: &Matrix) -> Matrix {
    SymMatrix::symmetrize(m).into_matrix()
}

/// Largest `alpha` with `M + alpha dM ⪰ 0`, for `M` positive definite.
fn max_step_psd(m: &Matrix, dm: &Matrix) -> f64 {
    let Some(ch) = Cholesky::factor(m) else {
        return 0.0;
    };
    let linv = ch.lower_inverse();
    let b = &(&linv * dm) * &linv.transpose();
    match min_eigenvalue(&SymMatrix::symmetrize(&b)) {
        Ok(l) if l < 0.0 => -1.0 / l,
        Ok(_) => f64::INFINITY,
        Err(_) => 0.0,
    }
}

fn max_step_lp(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(s, d)| -s / d)
        .fold(f64::INFINITY, f64::min)
}

fn frob(m: &Matrix) -> f64 {
    m.frobenius_norm()
}

struct Snapshot {
    merit: f64,
    x: Vec<f64>,
    xm: Vec<Matrix>,
    x_lp: Vec<f64>,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    gap: f64,
}

struct Directions {
    dx: Vec<f64>,
    ds: Vec<Matrix>,
    dxm: Vec<Matrix>,
    ds_lp: Vec<f64>,
    dx_lp: Vec<f64>,
}

pub(crate) fn solve_block_sdp(p: &BlockSdp, settings: &IpmSettings) -> IpmSolution {
    let m = p.m;
    let blocks = prepare(&p.psd);
    let lp = &p.lp;
    let nlp = lp.len();
    let n_total: usize = blocks.iter().map(|b| b.dim).sum::<usize>() + nlp;

    // Coefficient norms per variable for the starting point and scaling.
    let mut coef_norm = vec![0.0f64; m];
    for b in &blocks {
        for t in &b.terms {
            coef_norm[t.var] += t.full.iter().map(|e| e.2 * e.2).sum::<f64>();
        }
    }
    for row in &lp.rows {
        for &(i, a) in row {
            coef_norm[i] += a * a;
        }
    }
    let coef_norm: Vec<f64> = coef_norm.into_iter().map(f64::sqrt).collect();
    let f0_norm = (blocks.iter().map(|b| frob(&b.f0).powi(2)).sum::<f64>()
        + lp.f0.iter().map(|v| v * v).sum::<f64>())
    .sqrt();
    let c_norm = p.c.iter().map(|v| v * v).sum::<f64>().sqrt();

    let alpha0 = (0..m)
        .map(|i| (1.0 + p.c[i].abs()) / (1.0 + coef_norm[i]))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let beta0 = (1.0 + coef_norm.iter().cloned().fold(f0_norm, f64::max)) / (n_total.max(1) as f64).sqrt();

    let mut x = vec![0.0; m];
    let mut xm: Vec<Matrix> = blocks
        .iter()
        .map(|b| Matrix::identity(b.dim).scale(10.0 * alpha0 * b.dim as f64))
        .collect();
    let mut sm: Vec<Matrix> = blocks.iter().map(|b| Matrix::identity(b.dim).scale(10.0 * beta0)).collect();
    let mut x_lp = vec![10.0 * alpha0 * (nlp.max(1) as f64); nlp];
    let mut s_lp = vec![10.0 * beta0; nlp];

    let mut status = IpmStatus::MaxIterations;
    let mut iterations = 0;
    let mut stalls = 0;
    let (mut dobj, mut pinf, mut dinf, mut gap) = (0.0, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut best: Option<Snapshot> = None;

    for it in 0..=settings.max_iterations {
        iterations = it;
        // Residuals.
        let rd: Vec<Matrix> = blocks.iter().zip(&sm).map(|(b, s)| &eval_block(b, &x) - s).collect();
        let rd_lp: Vec<f64> = eval_lp(lp, &x).iter().zip(&s_lp).map(|(f, s)| f - s).collect();
        let mut rp = p.c.clone();
        for (b, xb) in blocks.iter().zip(&xm) {
            for t in &b.terms {
                rp[t.var] -= inner(&t.full, xb);
            }
        }
        for (row, xl) in lp.rows.iter().zip(&x_lp) {
            for &(i, a) in row {
                rp[i] -= a * xl;
            }
        }

        let pobj: f64 = p.c.iter().zip(&x).map(|(c, v)| c * v).sum();
        dobj = -(blocks.iter().zip(&xm).map(|(b, xb)| b.f0.dot(xb)).sum::<f64>()
            + lp.f0.iter().zip(&x_lp).map(|(f, v)| f * v).sum::<f64>());
        let xs: f64 = xm.iter().zip(&sm).map(|(a, b)| a.dot(b)).sum::<f64>()
            + x_lp.iter().zip(&s_lp).map(|(a, b)| a * b).sum::<f64>();
        let mu = xs / n_total.max(1) as f64;

        let rd_norm = (rd.iter().map(|r| frob(r).powi(2)).sum::<f64>()
            + rd_lp.iter().map(|v| v * v).sum::<f64>())
        .sqrt();
        pinf = rd_norm / (1.0 + f0_norm);
        dinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + c_norm);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        gap = ((pobj - dobj).abs() / denom).max(xs.abs() / denom);

        let merit = pinf.max(dinf).max(gap);
        if best.as_ref().map_or(true, |b| merit < b.merit) {
            best = Some(Snapshot {
                merit,
                x: x.clone(),
                xm: xm.clone(),
                x_lp: x_lp.clone(),
                dobj,
                pinf,
                dinf,
                gap,
            });
        }
        if pinf <= settings.tol && dinf <= settings.tol && gap <= settings.tol {
            status = IpmStatus::Converged;
            break;
        }
        if it == settings.max_iterations {
            break;
        }
        let xmax = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if xmax > 1e10 * (1.0 + f0_norm) || pobj < -1e12 {
            status = IpmStatus::Diverged("primal iterates unbounded".into());
            break;
        }
        let xnorm = xm.iter().map(|v| frob(v)).sum::<f64>() + x_lp.iter().map(|v| v.abs()).sum::<f64>();
        if xnorm > 1e13 * (1.0 + c_norm) {
            status = IpmStatus::Diverged("dual iterates unbounded".into());
            break;
        }

        let Some(sinv) = sm.iter().map(|s| Cholesky::factor(s).map(|c| c.inverse())).collect::<Option<Vec<_>>>()
        else {
            status = IpmStatus::Stalled("slack lost definiteness".into());
            break;
        };

        // Schur complement.
        let mut big_m = Matrix::zeros(m, m);
        for ((b, xb), si) in blocks.iter().zip(&xm).zip(&sinv) {
            let tmats: Vec<Option<Matrix>> = b
                .terms
                .iter()
                .map(|t| t.dense.as_ref().map(|f| &(xb * f) * si))
                .collect();
            for (pi, tp) in b.terms.iter().enumerate() {
                for (qi, tq) in b.terms.iter().enumerate().skip(pi) {
                    let val = if let Some(t) = &tmats[pi] {
                        tq.full.iter().map(|&(c, d, w)| w * t[(c, d)]).sum::<f64>()
                    } else if let Some(t) = &tmats[qi] {
                        tp.full.iter().map(|&(a, bb, v)| v * t[(a, bb)]).sum::<f64>()
                    } else {
                        let mut s = 0.0;
                        for &(a, bb, v) in &tp.full {
                            for &(c, d, w) in &tq.full {
                                s += v * w * xb[(bb, c)] * si[(d, a)];
                            }
                        }
                        s
                    };
                    big_m[(tp.var, tq.var)] += val;
                    if tp.var != tq.var {
                        big_m[(tq.var, tp.var)] += val;
                    }
                }
            }
        }
        for (l, row) in lp.rows.iter().enumerate() {
            let f = x_lp[l] / s_lp[l];
            for &(i, a) in row {
                for &(j, b) in row {
                    big_m[(i, j)] += f * a * b;
                }
            }
        }
        let Some(chol) = factor_regularized(&big_m) else {
            status = IpmStatus::Stalled("Schur complement not factorizable".into());
            break;
        };

        let xsm: Vec<Matrix> = xm.iter().zip(&sm).map(|(a, b)| a * b).collect();

        let direction = |rc: &[Matrix], rc_lp: &[f64]| -> Directions {
            let mut rhs: Vec<f64> = rp.iter().map(|v| -v).collect();
            for (bi, b) in blocks.iter().enumerate() {
                let w = &(&rc[bi] - &(&xm[bi] * &rd[bi])) * &sinv[bi];
                for t in &b.terms {
                    rhs[t.var] += inner(&t.full, &w);
                }
            }
            for (l, row) in lp.rows.iter().enumerate() {
                let w = (rc_lp[l] - x_lp[l] * rd_lp[l]) / s_lp[l];
                for &(i, a) in row {
                    rhs[i] += a * w;
                }
            }
            let dx = chol.solve(&rhs);
            let mut ds = Vec::with_capacity(blocks.len());
            let mut dxm = Vec::with_capacity(blocks.len());
            for (bi, b) in blocks.iter().enumerate() {
                let mut d = rd[bi].clone();
                for t in &b.terms {
                    let v = dx[t.var];
                    if v != 0.0 {
                        for &(a, bb, w) in &t.full {
                            d[(a, bb)] += v * w;
                        }
                    }
                }
                let dxb = sym(&(&(&rc[bi] - &(&xm[bi] * &d)) * &sinv[bi]));
                ds.push(d);
                dxm.push(dxb);
            }
            let ds_lp: Vec<f64> = (0..nlp)
                .map(|l| rd_lp[l] + lp.rows[l].iter().map(|&(i, a)| a * dx[i]).sum::<f64>())
                .collect();
            let dx_lp: Vec<f64> = (0..nlp).map(|l| (rc_lp[l] - x_lp[l] * ds_lp[l]) / s_lp[l]).collect();
            Directions { dx, ds, dxm, ds_lp, dx_lp }
        };

        let steps = |d: &Directions| -> (f64, f64) {
            let mut ap = max_step_lp(&s_lp, &d.ds_lp);
            let mut ad = max_step_lp(&x_lp, &d.dx_lp);
            for bi in 0..blocks.len() {
                ap = ap.min(max_step_psd(&sm[bi], &d.ds[bi]));
                ad = ad.min(max_step_psd(&xm[bi], &d.dxm[bi]));
            }
            (ap, ad)
        };

        // Predictor.
        let rc_aff: Vec<Matrix> = xsm.iter().map(|v| v.scale(-1.0)).collect();
        let rc_aff_lp: Vec<f64> = x_lp.iter().zip(&s_lp).map(|(a, b)| -a * b).collect();
        let aff = direction(&rc_aff, &rc_aff_lp);
        let (ap, ad) = steps(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut xs_aff = 0.0;
        for bi in 0..blocks.len() {
            let xn = &xm[bi] + &aff.dxm[bi].scale(ad);
            let sn = &sm[bi] + &aff.ds[bi].scale(ap);
            xs_aff += xn.dot(&sn);
        }
        for l in 0..nlp {
            xs_aff += (x_lp[l] + ad * aff.dx_lp[l]) * (s_lp[l] + ap * aff.ds_lp[l]);
        }
        let mu_aff = xs_aff / n_total.max(1) as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // Corrector.
        let rc: Vec<Matrix> = (0..blocks.len())
            .map(|bi| {
                let k = blocks[bi].dim;
                let mut r = &Matrix::identity(k).scale(sigma * mu) - &xsm[bi];
                r = &r - &(&aff.dxm[bi] * &aff.ds[bi]);
                r
            })
            .collect();
        let rc_lp: Vec<f64> = (0..nlp)
            .map(|l| sigma * mu - x_lp[l] * s_lp[l] - aff.dx_lp[l] * aff.ds_lp[l])
            .collect();
        let d = direction(&rc, &rc_lp);
        let (ap, ad) = steps(&d);
        let tau = if mu < 1e-6 { 0.98 } else { 0.95 };
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);

        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                status = IpmStatus::Stalled("step length collapsed".into());
                break;
            }
        } else {
            stalls = 0;
        }

        for (xi, di) in x.iter_mut().zip(&d.dx) {
            *xi += ap * di;
        }
        for bi in 0..blocks.len() {
            sm[bi] = sym(&(&sm[bi] + &d.ds[bi].scale(ap)));
            xm[bi] = sym(&(&xm[bi] + &d.dxm[bi].scale(ad)));
        }
        for l in 0..nlp {
            s_lp[l] += ap * d.ds_lp[l];
            x_lp[l] += ad * d.dx_lp[l];
        }
    }

    // Late iterations can lose dual accuracy once the gap stalls; fall back to
    // the best iterate seen.
    if !matches!(status, IpmStatus::Converged | IpmStatus::Diverged(_)) {
        if let Some(b) = best.filter(|b| b.merit < pinf.max(dinf).max(gap)) {
            (x, xm, x_lp) = (b.x, b.xm, b.x_lp);
            (dobj, pinf, dinf, gap) = (b.dobj, b.pinf, b.dinf, b.gap);
        }
    }

    if !matches!(status, IpmStatus::Converged | IpmStatus::Diverged(_))
        && pinf <= settings.loose_tol
        && dinf <= settings.loose_tol
        && gap <= settings.loose_tol
    {
        status = IpmStatus::Loose;
    }

    IpmSolution {
        status,
        x,
        dual: xm,
        dual_lp: x_lp,
        dobj,
        pinf,
        dinf,
        gap,
        iterations,
    }
}

fn factor_regularized(m: &Matrix) -> Option<Cholesky> {
    if let Some(c) = Cholesky::factor(m) {
        return Some(c);
    }
    let n = m.rows();
    let dmax = (0..n).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max).max(1e-300);
    let mut delta = 1e-14 * dmax.max(1.0);
    for _ in 0..6 {
        let mut r = m.clone();
        for i in 0..n {
            r[(i, i)] += delta;
        }
        if let Some(c) = Cholesky::factor(&r) {
            return Some(c);
        }
        delta *= 100.0;
    }
    None
}
