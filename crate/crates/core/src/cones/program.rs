use crate::error::{Error, Result};
use crate::numkernel::{spectral_norm, Matrix, SymMatrix};

use super::ConeKind;

/// Symmetric coefficient matrix stored as its upper-triangular nonzeros.
///
/// An entry `(r, c, v)` with `r < c` stands for `v` at both `(r, c)` and
/// `(c, r)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseSym {
    pub(crate) entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn from_dense(m: &SymMatrix) -> Self {
        let n = m.dim();
        let mut entries = Vec::new();
        for r in 0..n {
            for c in r..n {
                let v = m[(r, c)];
                if v != 0.0 {
                    entries.push((r, c, v));
                }
            }
        }
        Self { entries }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self, dim: usize) -> SymMatrix {
        let mut m = Matrix::zeros(dim, dim);
        self.add_into(&mut m, 1.0);
        SymMatrix::symmetrize(&m)
    }

    pub(crate) fn add_into(&self, m: &mut Matrix, scale: f64) {
        for &(r, c, v) in &self.entries {
            m[(r, c)] += scale * v;
            if r != c {
                m[(c, r)] += scale * v;
            }
        }
    }

    /// Both triangles, `(row, col, value)`.
    pub(crate) fn full_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.entries.len());
        for &(r, c, v) in &self.entries {
            out.push((r, c, v));
            if r != c {
                out.push((c, r, v));
            }
        }
        out
    }

    fn push(&mut self, r: usize, c: usize, v: f64) {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        if let Some(e) = self.entries.iter_mut().find(|e| e.0 == r && e.1 == c) {
            e.2 += v;
        } else {
            self.entries.push((r, c, v));
        }
    }
}

/// `x -> F0 + sum_i x_i F_i` into symmetric matrices of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    dim: usize,
    constant: SymMatrix,
    terms: Vec<(usize, SparseSym)>,
}

impl AffineMap {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constant: SymMatrix::zeros(dim),
            terms: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self) -> &SymMatrix {
        &self.constant
    }

    pub fn terms(&self) -> &[(usize, SparseSym)] {
        &self.terms
    }

    pub fn with_constant(mut self, f0: SymMatrix) -> Result<Self> {
        if f0.dim() != self.dim {
            return Err(Error::dim(format!(
                "constant term is {}x{}, map dimension is {}",
                f0.dim(),
                f0.dim(),
                self.dim
            )));
        }
        self.constant = f0;
        Ok(self)
    }

    /// Adds `x_var * f` to the map.
    pub fn add_term(&mut self, var: usize, f: &SymMatrix) -> Result<()> {
        if f.dim() != self.dim {
            return Err(Error::dim(format!(
                "coefficient of x{var} is {}x{}, map dimension is {}",
                f.dim(),
                f.dim(),
                self.dim
            )));
        }
        let sparse = SparseSym::from_dense(f);
        for &(r, c, v) in &sparse.entries {
            self.term_mut(var).push(r, c, v);
        }
        Ok(())
    }

    /// Adds `x_var * v` at `(r, c)` and `(c, r)`.
    pub fn add_entry(&mut self, var: usize, r: usize, c: usize, v: f64) {
        assert!(r < self.dim && c < self.dim, "entry ({r}, {c}) outside a {} map", self.dim);
        if v != 0.0 {
            self.term_mut(var).push(r, c, v);
        }
    }

    fn term_mut(&mut self, var: usize) -> &mut SparseSym {
        let pos = match self.terms.iter().position(|(v, _)| *v == var) {
            Some(p) => p,
            None => {
                self.terms.push((var, SparseSym::default()));
                self.terms.len() - 1
            }
        };
        &mut self.terms[pos].1
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|(v, _)| *v).max()
    }

    pub fn eval(&self, x: &[f64]) -> SymMatrix {
        let mut m = self.constant.as_matrix().clone();
        for (var, f) in &self.terms {
            f.add_into(&mut m, x[*var]);
        }
        SymMatrix::symmetrize(&m)
    }

    pub fn negated(&self) -> AffineMap {
        AffineMap {
            dim: self.dim,
            constant: self.constant.scale(-1.0),
            terms: self
                .terms
                .iter()
                .map(|(v, f)| {
                    (
                        *v,
                        SparseSym {
                            entries: f.entries.iter().map(|&(r, c, w)| (r, c, -w)).collect(),
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Whether the map value must lie in the cone or its negation must.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `F(x) ∈ K`
    Member,
    /// `-F(x) ∈ K`
    NegatedMember,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Member => 1.0,
            Orientation::NegatedMember => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub map: AffineMap,
    pub cone: ConeKind,
    pub orientation: Orientation,
    /// Strictness margin: PSD parts must clear `margin * I`, NN entries must
    /// clear `margin`.
    pub margin: f64,
    pub label: String,
}

impl Constraint {
    pub fn new(map: AffineMap, cone: ConeKind, orientation: Orientation) -> Self {
        Self {
            map,
            cone,
            orientation,
            margin: 0.0,
            label: String::new(),
        }
    }

    /// Sets the margin to the default `1e-8 * (1 + |F0|_2)`.
    pub fn strict(mut self) -> Self {
        self.margin = default_margin(&self.map);
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The oriented value `±F(x)`.
    pub fn value(&self, x: &[f64]) -> SymMatrix {
        self.map.eval(x).scale(self.orientation.sign())
    }
}

pub fn default_margin(map: &AffineMap) -> f64 {
    let f0 = spectral_norm(map.constant().as_matrix()).unwrap_or(0.0);
    1e-8 * (1.0 + f0)
}

/// Minimize `c . x` subject to conic constraints on affine matrix maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl ConicProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective(&mut self, c: Vec<f64>) -> Result<()> {
        if c.len() != self.num_vars {
            return Err(Error::dim(format!(
                "objective has {} coefficients, program has {} variables",
                c.len(),
                self.num_vars
            )));
        }
        self.objective = c;
        Ok(())
    }

    pub fn set_cost(&mut self, var: usize, c: f64) {
        self.objective[var] = c;
    }

    pub fn add(&mut self, constraint: Constraint) -> Result<usize> {
        if let Some(v) = constraint.map.max_var() {
            if v >= self.num_vars {
                return Err(Error::dim(format!(
                    "constraint references x{v}, program has {} variables",
                    self.num_vars
                )));
            }
        }
        self.constraints.push(constraint);
        Ok(self.constraints.len() - 1)
    }

    /// The same program without constraint `idx`.
    pub fn without(&self, idx: usize) -> ConicProgram {
        let mut p = self.clone();
        p.constraints.remove(idx);
        p
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Converged to the requested accuracy.
    Optimal,
    /// Converged to a looser accuracy; the point is feasible to within the
    /// reported residuals but the objective may be off in the last digits.
    Feasible,
    /// A margin-maximizing auxiliary program certified that no point
    /// satisfies the constraints.
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

impl SolveStatus {
    pub fn is_solved(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

/// The value of one constraint at the returned point.
#[derive(Debug, Clone)]
pub struct ConstraintWitness {
    /// Oriented value `±F(x)`.
    pub value: SymMatrix,
    /// For PSD+NN constraints, the decomposition `value = psd + nn`.
    pub split: Option<(SymMatrix, SymMatrix)>,
    /// Dual matrix attached to the PSD part of the constraint, if any.
    pub dual: Option<SymMatrix>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// `c . x` at the returned point.
    pub objective: f64,
    pub dual_objective: f64,
    pub x: Vec<f64>,
    pub witnesses: Vec<ConstraintWitness>,
    /// Largest relative violation of the linearized constraints.
    pub max_violation: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub iterations: usize,
    pub message: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Relative gap and infeasibility target for `Optimal`.
    pub tolerance: f64,
    /// Looser target reported as `Feasible`.
    pub loose_tolerance: f64,
    /// Infeasibility threshold for the margin program.
    pub infeasibility_threshold: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-9,
            loose_tolerance: 1e-6,
            infeasibility_threshold: 1e-7,
        }
    }
}

/// A symmetric matrix variable occupying `dim (dim + 1) / 2` consecutive
/// decision variables, one per upper-triangular entry in row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymVars {
    pub start: usize,
    pub dim: usize,
}

impl SymVars {
    pub fn new(start: usize, dim: usize) -> Self {
        Self { start, dim }
    }

    pub fn count(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    pub fn end(&self) -> usize {
        self.start + self.count()
    }

    pub fn index(&self, r: usize, c: usize) -> usize {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        self.start + r * self.dim - r * (r + 1) / 2 + c
    }

    pub fn extract(&self, x: &[f64]) -> SymMatrix {
        SymMatrix::from_upper(self.dim, |r, c| x[self.index(r, c)])
    }

    /// Adds `scale * X` to `map` with its top-left corner at `(offset, offset)`.
    pub fn add_to(&self, map: &mut AffineMap, offset: usize, scale: f64) {
        for r in 0..self.dim {
            for c in r..self.dim {
                map.add_entry(self.index(r, c), offset + r, offset + c, scale);
            }
        }
    }

    /// Adds `scale * T^T X T` to `map` at `(offset, offset)`, where `T` has
    /// `dim` rows.
    pub fn add_congruence(&self, map: &mut AffineMap, t: &Matrix, offset: usize, scale: f64) {
        assert_eq!(t.rows(), self.dim, "congruence factor must have {} rows", self.dim);
        let k = t.cols();
        for a in 0..self.dim {
            for b in a..self.dim {
                let var = self.index(a, b);
                let (ta, tb) = (t.row(a), t.row(b));
                for i in 0..k {
                    for j in i..k {
                        let v = if a == b {
                            ta[i] * ta[j]
                        } else {
                            ta[i] * tb[j] + tb[i] * ta[j]
                        };
                        if v != 0.0 {
                            map.add_entry(var, offset + i, offset + j, scale * v);
                        }
                    }
                }
            }
        }
    }
}
