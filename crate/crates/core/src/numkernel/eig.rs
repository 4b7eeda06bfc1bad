use super::matrix::{norm2, Matrix, SymMatrix};
use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector of `values[i]`.
    pub vectors: Matrix,
}

impl SymEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.vectors.rows()).map(|k| self.vectors[(k, i)]).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `sum_i values[i] v_i v_i^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.values.len();
        SymMatrix::from_upper(n, |i, j| {
            (0..n)
                .map(|k| self.values[k] * self.vectors[(i, k)] * self.vectors[(j, k)])
                .sum()
        })
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver.
pub fn sym_eig(s: &SymMatrix) -> Result<SymEigen> {
    let n = s.dim();
    let mut a = s.as_matrix().clone();
    if !a.is_finite() {
        return Err(Error::InvalidInput("non-finite entry in symmetric matrix".into()));
    }
    let mut v = Matrix::identity(n);
    let fro = a.frobenius_norm();
    let target = 1e-15 * fro;

    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        let off = (2.0 * off).sqrt();
        if off <= target || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                // Later sweeps: drop entries below the precision of both diagonals.
                if sweep > 3
                    && app.abs() + 1e3 * apq.abs() == app.abs()
                    && aqq.abs() + 1e3 * apq.abs() == aqq.abs()
                {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    let np = c * akp - sn * akq;
                    let nq = sn * akp + c * akq;
                    a[(k, p)] = np;
                    a[(p, k)] = np;
                    a[(k, q)] = nq;
                    a[(q, k)] = nq;
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Smallest eigenvalue; `+inf` for an empty matrix.
pub fn min_eigenvalue(s: &SymMatrix) -> Result<f64> {
    if s.dim() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(sym_eig(s)?.min())
}

/// Largest eigenvalue; `-inf` for an empty matrix.
pub fn max_eigenvalue(s: &SymMatrix) -> Result<f64> {
    if s.dim() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(sym_eig(s)?.max())
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    if !m.is_finite() {
        return Err(Error::InvalidInput("non-finite entry".into()));
    }
    let gram = if m.rows() < m.cols() {
        SymMatrix::gram_outer(m)
    } else {
        SymMatrix::gram(m)
    };
    Ok(sym_eig(&gram)?.max().max(0.0).sqrt())
}

/// Top eigenvector of an entrywise-nonnegative symmetric matrix.
#[derive(Debug, Clone)]
pub struct PerronVector {
    /// Unit norm, entrywise nonnegative.
    pub vector: Vec<f64>,
    pub eigenvalue: f64,
    /// Input was numerically zero; `vector` is the first basis vector.
    pub degenerate: bool,
}

const NONNEG_TOL: f64 = 1e-9;

/// Unit eigenvector of the largest eigenvalue, sign-normalized and clamped to
/// the nonnegative orthant.
///
/// With `require_nonneg`, entries of `z` below `-1e-9` are rejected and the
/// rest are clamped to zero before the decomposition. When the top
/// eigenvalue is repeated the computed eigenvector may mix signs; in that
/// case a power iteration started from the all-ones vector picks a
/// nonnegative vector in the top eigenspace.
pub fn perron_vector(z: &SymMatrix, require_nonneg: bool) -> Result<PerronVector> {
    let n = z.dim();
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let z = if require_nonneg {
        let min = z.as_matrix().min_entry();
        if min < -NONNEG_TOL {
            return Err(Error::NotNonnegative { min_entry: min });
        }
        SymMatrix::from_upper(n, |i, j| z[(i, j)].max(0.0))
    } else {
        z.clone()
    };

    if z.as_matrix().max_abs() <= 1e-12 {
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        return Ok(PerronVector {
            vector: e1,
            eigenvalue: 0.0,
            degenerate: true,
        });
    }

    let eig = sym_eig(&z)?;
    let lambda = eig.max();
    let mut v = eig.vector(n - 1);
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |b, (i, x)| if x.abs() > b.1 { (i, x.abs()) } else { b });
    if v[imax] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let min_comp = v.iter().copied().fold(f64::INFINITY, f64::min);
    if min_comp < -NONNEG_TOL {
        v = power_iteration_from_ones(&z, eig.min());
    }
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    Ok(PerronVector {
        vector: v,
        eigenvalue: lambda,
        degenerate: false,
    })
}

fn power_iteration_from_ones(z: &SymMatrix, lambda_min: f64) -> Vec<f64> {
    let n = z.dim();
    let shift = (-lambda_min).max(0.0);
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..20_000 {
        let mut w = z.as_matrix().mul_vec(&v);
        w.iter_mut().zip(&v).for_each(|(a, b)| *a += shift * b);
        let nw = norm2(&w);
        if nw == 0.0 {
            break;
        }
        w.iter_mut().for_each(|a| *a /= nw);
        let delta = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        if delta < 1e-15 {
            break;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        SymMatrix::from_upper(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn identity_and_diagonal() {
        let e = sym_eig(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let e = sym_eig(&SymMatrix::diag(&[5.0, -2.0, 0.0])).unwrap();
        assert_eq!(e.values, vec![-2.0, 0.0, 5.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn random_reconstruction_and_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_sym(&mut rng, 6);
        let e = sym_eig(&s).unwrap();
        assert!(e.reconstruct().as_matrix().max_abs_diff(s.as_matrix()) <= 1e-9);
        let snorm = spectral_norm(s.as_matrix()).unwrap();
        for i in 0..6 {
            let v = e.vector(i);
            let sv = s.as_matrix().mul_vec(&v);
            let r: f64 = sv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - e.values[i] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r <= 1e-10 * (1.0 + snorm));
            for j in 0..6 {
                let d: f64 = v.iter().zip(e.vector(j)).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spectral_norm_basics() {
        assert_eq!(spectral_norm(&Matrix::zeros(3, 2)).unwrap(), 0.0);
        let d = Matrix::diag(&[3.0, -4.0]);
        assert!((spectral_norm(&d).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_dominates_sampled_gains() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Matrix::from_fn(4, 3, |_, _| rng.gen_range(-1.0..1.0));
        let sn = spectral_norm(&m).unwrap();
        let mut best: f64 = 0.0;
        for _ in 0..100_000 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nv = norm2(&v);
            if nv < 1e-9 {
                continue;
            }
            best = best.max(norm2(&m.mul_vec(&v)) / nv);
        }
        assert!(sn >= best - 1e-12);
        assert!(sn - best <= 1e-3, "gap {}", sn - best);
    }

    #[test]
    fn perron_simple_cases() {
        let p = perron_vector(&SymMatrix::diag(&[1.0, 0.0]), true).unwrap();
        assert_eq!(p.vector, vec![1.0, 0.0]);
        let ones = SymMatrix::from_upper(3, |_, _| 1.0);
        let p = perron_vector(&ones, true).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!(p.vector.iter().all(|x| (x - r).abs() < 1e-12));
        assert!((p.eigenvalue - 3.0).abs() < 1e-12);
    }

    #[test]
    fn perron_rejects_negative_and_flags_zero() {
        let z = SymMatrix::from_rows(&[[1.0, -0.1], [-0.1, 1.0]]).unwrap();
        assert!(matches!(perron_vector(&z, true), Err(Error::NotNonnegative { .. })));
        let p = perron_vector(&SymMatrix::zeros(3), true).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.vector, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn perron_repeated_top_eigenvalue_stays_nonnegative() {
        // Two identical disconnected blocks share the top eigenvalue.
        let z = SymMatrix::from_rows(&[
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 1.0, 1.0],
        ])
        .unwrap();
        let p = perron_vector(&z, true).unwrap();
        assert!(p.vector.iter().all(|&x| x >= 0.0));
        let zv = z.as_matrix().mul_vec(&p.vector);
        for (a, b) in zv.iter().zip(&p.vector) {
            assert!((a - 2.0 * b).abs() < 1e-9);
        }
    }

    #[test]
    fn perron_matches_power_iteration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let z = SymMatrix::from_upper(5, |_, _| rng.gen_range(0.0..1.0));
            let p = perron_vector(&z, true).unwrap();
            // Oracle: plain power iteration on Z + I from the all-ones start.
            let mut v = vec![1.0; 5];
            for _ in 0..5000 {
                let mut w = z.as_matrix().mul_vec(&v);
                w.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
                let nw = norm2(&w);
                v = w.into_iter().map(|a| a / nw).collect();
            }
            for (a, b) in p.vector.iter().zip(&v) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}
