use crate::error::{Error, Result};

/// Compressed-row sparsity pattern (square).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrPattern {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl CsrPattern {
    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Builds the pattern from unordered `(row, col)` pairs, deduplicated.
    pub fn from_pairs(n: usize, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _) in &pairs {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        let col_idx = pairs.into_iter().map(|(_, c)| c).collect();
        Self { row_ptr, col_idx }
    }

    /// Position of `(row, col)` in the value array.
    pub fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        cols.binary_search(&col).ok().map(|k| self.row_ptr[row] + k)
    }

    pub fn matvec(&self, values: &[f64], x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += values[k] * x[self.col_idx[k]];
            }
            *o = s;
        }
    }
}

/// Outcome of a converged CG run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients from a zero initial guess, optionally with a Jacobi
/// preconditioner. Stops once `|b - Ax| <= rel_tol |b|`.
pub fn conjugate_gradient(
    pattern: &CsrPattern,
    values: &[f64],
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
    jacobi: bool,
) -> Result<(Vec<f64>, CgStats)> {
    let n = pattern.n();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((
            x,
            CgStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = if jacobi {
        (0..n)
            .map(|r| {
                let d = pattern.slot(r, r).map(|k| values[k]).unwrap_or(0.0);
                if d > 0.0 {
                    1.0 / d
                } else {
                    1.0
                }
            })
            .collect()
    } else {
        vec![1.0; n]
    };

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = rel_tol * b_norm;
    let mut res = b_norm;

    for it in 0..max_iter {
        if res <= target {
            return Ok((
                x,
                CgStats {
                    iterations: it,
                    relative_residual: res / b_norm,
                },
            ));
        }
        pattern.matvec(values, &p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let step = rz / pq;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * q[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt();
    }
    if res <= target {
        return Ok((
            x,
            CgStats {
                iterations: max_iter,
                relative_residual: res / b_norm,
            },
        ));
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res / b_norm,
        tolerance: rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> (CsrPattern, Vec<f64>) {
        let mut pairs = Vec::new();
        for i in 0..n {
            pairs.push((i, i));
            if i > 0 {
                pairs.push((i, i - 1));
                pairs.push((i - 1, i));
            }
        }
        let p = CsrPattern::from_pairs(n, pairs);
        let mut v = vec![0.0; p.nnz()];
        for i in 0..n {
            v[p.slot(i, i).unwrap()] = 2.0;
            if i > 0 {
                v[p.slot(i, i - 1).unwrap()] = -1.0;
                v[p.slot(i - 1, i).unwrap()] = -1.0;
            }
        }
        (p, v)
    }

    #[test]
    fn scalar_system() {
        let p = CsrPattern::from_pairs(1, vec![(0, 0)]);
        let (x, stats) = conjugate_gradient(&p, &[4.0], &[2.0], 1e-14, 10, true).unwrap();
        assert_eq!(x, vec![0.5]);
        assert_eq!(stats.iterations, 1);
    }

    #[test]
    fn tridiagonal_converges_in_n_steps() {
        let (p, v) = laplace_1d(20);
        let b = vec![1.0; 20];
        let (x, stats) = conjugate_gradient(&p, &v, &b, 1e-12, 200, false).unwrap();
        assert!(stats.iterations <= 21);
        let mut ax = vec![0.0; 20];
        p.matvec(&v, &x, &mut ax);
        for (a, b) in ax.iter().zip(&b) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let (p, v) = laplace_1d(50);
        let err = conjugate_gradient(&p, &v, &vec![1.0; 50], 1e-14, 3, true).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }));
    }

    #[test]
    fn zero_rhs() {
        let (p, v) = laplace_1d(5);
        let (x, _) = conjugate_gradient(&p, &v, &[0.0; 5], 1e-10, 10, true).unwrap();
        assert_eq!(x, vec![0.0; 5]);
    }
}
