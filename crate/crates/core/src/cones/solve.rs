use crate::error::{Error, Result};
use crate::numkernel::{Matrix, SymMatrix};

use super::ipm::{solve_block_sdp, BlockSdp, IpmSettings, IpmSolution, IpmStatus, LpRows, PsdBlock};
use super::program::{ConicProgram, ConstraintWitness, SolveOptions, SolveResult, SolveStatus, SparseSym};
use super::{in_nn, in_psd, ConeKind};

/// Where each constraint landed in the expanded block program.
struct Layout {
    psd_block: Option<usize>,
    lp_rows: Option<(usize, usize)>,
    /// First auxiliary variable of a PSD+NN split.
    aux: Option<usize>,
}

fn upper_index(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|r| (r..n).map(move |c| (r, c))).collect()
}

fn expand(prog: &ConicProgram) -> Result<(BlockSdp, Vec<Layout>)> {
    let mut m = prog.num_vars();
    let mut psd = Vec::new();
    let mut lp = LpRows::default();
    let mut layout = Vec::new();

    for con in prog.constraints() {
        let sign = con.orientation.sign();
        let k = con.map.dim();
        let f0 = con.map.constant().as_matrix().scale(sign);
        let terms: Vec<(usize, SparseSym)> = con
            .map
            .terms()
            .iter()
            .map(|(v, f)| {
                (
                    *v,
                    SparseSym {
                        entries: f.entries.iter().map(|&(r, c, w)| (r, c, sign * w)).collect(),
                    },
                )
            })
            .collect();
        let shifted = &f0 - &Matrix::identity(k).scale(con.margin);

        let lp_from_map = |lp: &mut LpRows, margin: f64| -> (usize, usize) {
            let start = lp.len();
            for (r, c) in upper_index(k) {
                let coeffs: Vec<(usize, f64)> = terms
                    .iter()
                    .filter_map(|(v, f)| {
                        let s: f64 = f.entries.iter().filter(|e| e.0 == r && e.1 == c).map(|e| e.2).sum();
                        (s != 0.0).then_some((*v, s))
                    })
                    .collect();
                lp.push(f0[(r, c)] - margin, coeffs);
            }
            (start, lp.len())
        };

        let entry = match con.cone {
            ConeKind::Cop => return Err(Error::UnsupportedCone("COP")),
            ConeKind::Psd => {
                psd.push(PsdBlock {
                    dim: k,
                    f0: shifted,
                    terms,
                });
                Layout {
                    psd_block: Some(psd.len() - 1),
                    lp_rows: None,
                    aux: None,
                }
            }
            ConeKind::Nn => {
                let rows = lp_from_map(&mut lp, con.margin);
                Layout {
                    psd_block: None,
                    lp_rows: Some(rows),
                    aux: None,
                }
            }
            ConeKind::Dnn => {
                let rows = lp_from_map(&mut lp, con.margin);
                psd.push(PsdBlock {
                    dim: k,
                    f0: shifted,
                    terms,
                });
                Layout {
                    psd_block: Some(psd.len() - 1),
                    lp_rows: Some(rows),
                    aux: None,
                }
            }
            ConeKind::PsdPlusNn => {
                // value - N - margin I ⪰ 0 with N ≥ 0 entrywise.
                let aux = m;
                let mut terms = terms;
                let start = lp.len();
                for (idx, (r, c)) in upper_index(k).into_iter().enumerate() {
                    terms.push((
                        aux + idx,
                        SparseSym {
                            entries: vec![(r, c, -1.0)],
                        },
                    ));
                    lp.push(0.0, vec![(aux + idx, 1.0)]);
                }
                m += k * (k + 1) / 2;
                psd.push(PsdBlock {
                    dim: k,
                    f0: shifted,
                    terms,
                });
                Layout {
                    psd_block: Some(psd.len() - 1),
                    lp_rows: Some((start, lp.len())),
                    aux: Some(aux),
                }
            }
        };
        layout.push(entry);
    }

    let mut c = prog.objective().to_vec();
    c.resize(m, 0.0);
    Ok((BlockSdp { m, c, psd, lp }, layout))
}

fn settings(opts: &SolveOptions) -> IpmSettings {
    IpmSettings {
        max_iterations: opts.max_iterations,
        tol: opts.tolerance,
        loose_tol: opts.loose_tolerance,
    }
}

/// Solves with default options.
pub fn solve(prog: &ConicProgram) -> Result<SolveResult> {
    solve_with(prog, &SolveOptions::default())
}

pub fn solve_with(prog: &ConicProgram, opts: &SolveOptions) -> Result<SolveResult> {
    let (sdp, layout) = expand(prog)?;
    if sdp.m == 0 {
        return Ok(constant_program(prog));
    }
    let sol = solve_block_sdp(&sdp, &settings(opts));
    let (status, message) = match &sol.status {
        IpmStatus::Converged => (SolveStatus::Optimal, None),
        IpmStatus::Loose => (SolveStatus::Feasible, None),
        other => {
            let reason = match other {
                IpmStatus::Stalled(s) | IpmStatus::Diverged(s) => s.clone(),
                _ => "iteration limit reached".to_string(),
            };
            match infeasibility_measure(&sdp, opts) {
                Some(t) if t > opts.infeasibility_threshold => (
                    SolveStatus::Infeasible,
                    Some(format!("constraints violated by at least {t:.3e}")),
                ),
                _ if matches!(other, IpmStatus::MaxIterations) => (SolveStatus::MaxIterations, Some(reason)),
                _ => (SolveStatus::NumericalFailure, Some(reason)),
            }
        }
    };
    Ok(package(prog, &layout, &sol, status, message))
}

/// Smallest uniform shift `t` making every block feasible, i.e. the optimum
/// of `min t s.t. S_b(x) + t I ⪰ 0, s_l(x) + t ≥ 0, t ≥ -1`.
fn infeasibility_measure(sdp: &BlockSdp, opts: &SolveOptions) -> Option<f64> {
    let t = sdp.m;
    let mut psd = Vec::with_capacity(sdp.psd.len());
    for b in &sdp.psd {
        let mut terms = b.terms.clone();
        terms.push((
            t,
            SparseSym {
                entries: (0..b.dim).map(|i| (i, i, 1.0)).collect(),
            },
        ));
        psd.push(PsdBlock {
            dim: b.dim,
            f0: b.f0.clone(),
            terms,
        });
    }
    let mut lp = LpRows::default();
    for (f0, row) in sdp.lp.f0.iter().zip(&sdp.lp.rows) {
        let mut row = row.clone();
        row.push((t, 1.0));
        lp.push(*f0, row);
    }
    lp.push(1.0, vec![(t, 1.0)]);
    let mut c = vec![0.0; t + 1];
    c[t] = 1.0;
    let phase1 = BlockSdp { m: t + 1, c, psd, lp };
    let sol = solve_block_sdp(&phase1, &settings(opts));
    match sol.status {
        IpmStatus::Converged | IpmStatus::Loose => Some(sol.x[t]),
        _ => None,
    }
}

fn package(
    prog: &ConicProgram,
    layout: &[Layout],
    sol: &IpmSolution,
    status: SolveStatus,
    message: Option<String>,
) -> SolveResult {
    let x: Vec<f64> = sol.x[..prog.num_vars()].to_vec();
    let witnesses = prog
        .constraints()
        .iter()
        .zip(layout)
        .map(|(con, lay)| {
            let value = con.value(&x);
            let k = con.map.dim();
            let split = lay.aux.map(|aux| {
                let nn = SymMatrix::from_upper(k, |r, c| {
                    let idx = r * k - r * (r + 1) / 2 + c;
                    sol.x[aux + idx].max(0.0)
                });
                (value.sub(&nn), nn)
            });
            let dual = match (lay.psd_block, lay.lp_rows) {
                (Some(b), _) => Some(SymMatrix::symmetrize(&sol.dual[b])),
                (None, Some((start, _))) => Some(SymMatrix::from_upper(k, |r, c| {
                    let idx = r * k - r * (r + 1) / 2 + c;
                    sol.dual_lp[start + idx]
                })),
                _ => None,
            };
            ConstraintWitness { value, split, dual }
        })
        .collect();
    SolveResult {
        status,
        objective: prog.objective_value(&x),
        dual_objective: sol.dobj,
        x,
        witnesses,
        max_violation: sol.pinf.max(sol.dinf),
        gap: sol.gap,
        iterations: sol.iterations,
        message,
    }
}

/// A program without decision variables is a membership test.
fn constant_program(prog: &ConicProgram) -> SolveResult {
    let mut ok = true;
    let mut witnesses = Vec::new();
    for con in prog.constraints() {
        let value = con.value(&[]);
        let member = match con.cone {
            ConeKind::Psd => in_psd(&value.sub(&SymMatrix::identity(value.dim()).scale(con.margin)), 0.0),
            ConeKind::Nn => in_nn(&value, -con.margin),
            ConeKind::Dnn => {
                in_nn(&value, -con.margin)
                    && in_psd(&value.sub(&SymMatrix::identity(value.dim()).scale(con.margin)), 0.0)
            }
            ConeKind::PsdPlusNn => super::in_psd_plus_nn(&value, 1e-9).map(|m| m.member).unwrap_or(false),
            ConeKind::Cop => false,
        };
        ok &= member;
        witnesses.push(ConstraintWitness {
            value,
            split: None,
            dual: None,
        });
    }
    SolveResult {
        status: if ok { SolveStatus::Optimal } else { SolveStatus::Infeasible },
        objective: 0.0,
        dual_objective: 0.0,
        x: Vec::new(),
        witnesses,
        max_violation: 0.0,
        gap: 0.0,
        iterations: 0,
        message: None,
    }
}
