use super::eig::min_eigenvalue;
use super::factor::Lu;
use super::matrix::{Matrix, SymMatrix};
use crate::error::{Error, Result};

/// Outcome of the discrete Lyapunov stability test.
#[derive(Debug, Clone)]
pub struct SchurCheck {
    pub stable: bool,
    /// Solution of `A^T P A - P = -I` when `stable`.
    pub witness: Option<SymMatrix>,
    pub diagnostic: Option<String>,
}

const MIN_EIG: f64 = 1e-9;

/// Solves `A^T P A - P = -Q` through the Kronecker-vectorized linear system.
///
/// Returns `None` when the system is singular, which happens exactly when two
/// eigenvalues of `A` have product one.
pub fn solve_discrete_lyapunov(a: &Matrix, q: &SymMatrix) -> Result<Option<SymMatrix>> {
    if !a.is_square() || q.dim() != a.rows() {
        return Err(Error::dim(format!(
            "Lyapunov equation needs square A matching Q, got A {}x{} and Q {}x{}",
            a.rows(),
            a.cols(),
            q.dim(),
            q.dim()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Some(SymMatrix::zeros(0)));
    }
    let nn = n * n;
    // Row (i, j): sum_{k,l} A[k,i] A[l,j] P[k,l] - P[i,j] = -Q[i,j]
    let mut k = Matrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for kk in 0..n {
                let aki = a[(kk, i)];
                if aki == 0.0 {
                    continue;
                }
                for l in 0..n {
                    k[(row, kk * n + l)] += aki * a[(l, j)];
                }
            }
            k[(row, row)] -= 1.0;
        }
    }
    let rhs: Vec<f64> = (0..nn).map(|idx| -q[(idx / n, idx % n)]).collect();
    let Some(lu) = Lu::factor(&k, 1e-13) else {
        return Ok(None);
    };
    let p = lu.solve(&rhs);
    let p = Matrix::new(n, n, p)?;
    Ok(Some(SymMatrix::from_matrix(&p)?))
}

/// Schur stability via the Lyapunov equation `A^T P A - P = -I`.
///
/// `A` is stable iff the solution exists and is positive definite. A singular
/// vectorized system (some eigenvalue pair with product one, e.g. a unit
/// eigenvalue) is reported as not stable.
pub fn is_schur_stable(a: &Matrix) -> Result<SchurCheck> {
    if !a.is_square() {
        return Err(Error::dim(format!(
            "stability test needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    match solve_discrete_lyapunov(a, &SymMatrix::identity(n))? {
        None => Ok(SchurCheck {
            stable: false,
            witness: None,
            diagnostic: Some("Lyapunov system is singular (eigenvalue product equal to one)".into()),
        }),
        Some(p) => {
            let lmin = min_eigenvalue(&p)?;
            if lmin > MIN_EIG {
                Ok(SchurCheck {
                    stable: true,
                    witness: Some(p),
                    diagnostic: None,
                })
            } else {
                Ok(SchurCheck {
                    stable: false,
                    witness: None,
                    diagnostic: Some(format!("Lyapunov solution not positive definite (min eigenvalue {lmin:e})")),
                })
            }
        }
    }
}
