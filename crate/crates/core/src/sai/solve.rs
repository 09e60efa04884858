use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{SparseMatrix, SparsityPattern};
use crate::error::{Error, Result};

/// Relative pivot size below which a column system is treated as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// `M` restricted to a pattern, with the least-squares residual of every column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseApproxInverse {
    pattern: SparsityPattern,
    /// Values aligned with `pattern.column(j)`.
    values: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

impl SparseApproxInverse {
    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn column_values(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    /// `‖A m_k − e_k‖₂` per column.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// `‖AM − I‖_F` from the column residuals.
    pub fn residual_norm(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.pattern.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for (&i, &v) in self.pattern.column(j).iter().zip(&self.values[j]) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let t: Vec<_> = (0..self.pattern.dim())
            .flat_map(|j| {
                self.pattern
                    .column(j)
                    .iter()
                    .zip(&self.values[j])
                    .map(move |(&i, &v)| (i, j, v))
            })
            .collect();
        SparseMatrix::from_triplets(self.pattern.dim(), &t).unwrap()
    }
}

/// Minimizes `‖A v − b‖₂`: pivoted QR, falling back to the SVD minimum-norm
/// solution when the system is rank deficient.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let k = a.ncols();
    if k == 0 {
        return DVector::zeros(0);
    }
    if a.nrows() >= k {
        let qr = a.clone().col_piv_qr();
        let r = qr.r();
        let scale = r[(0, 0)].abs();
        let full_rank = scale > 0.0 && (0..k).all(|i| r[(i, i)].abs() > RANK_TOL * scale);
        if full_rank {
            let qtb = qr.q().tr_mul(b);
            if let Some(mut v) = r.solve_upper_triangular(&qtb) {
                qr.p().inv_permute_rows(&mut v);
                return v;
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let tol = RANK_TOL * svd.singular_values.max().max(f64::MIN_POSITIVE);
    svd.solve(b, tol).unwrap_or_else(|_| DVector::zeros(k))
}

/// Column-by-column least squares `min ‖A m_k − e_k‖` over the pattern of column `k`.
pub fn solve_columns(a: &SparseMatrix, pattern: &SparsityPattern) -> Result<SparseApproxInverse> {
    let n = a.dim();
    if pattern.dim() != n {
        return Err(Error::SizeMismatch {
            what: "pattern dimension",
            expected: n,
            got: pattern.dim(),
        });
    }
    let dense = a.to_dense();
    let solved: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let rows = pattern.column(k);
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            if rows.is_empty() {
                return (Vec::new(), 1.0);
            }
            let sub = dense.select_columns(rows);
            let v = least_squares(&sub, &e);
            let residual = (&sub * &v - &e).norm();
            (v.as_slice().to_vec(), residual)
        })
        .collect();
    let (values, residuals) = solved.into_iter().unzip();
    Ok(SparseApproxInverse {
        pattern: pattern.clone(),
        values,
        residuals,
    })
}

/// `‖A M − I‖_F`.
pub fn frobenius_loss(a: &SparseMatrix, m: &DMatrix<f64>) -> Result<f64> {
    let n = a.dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::SizeMismatch {
            what: "approximate inverse dimension",
            expected: n,
            got: m.nrows(),
        });
    }
    let mut r = a.to_dense() * m;
    for i in 0..n {
        r[(i, i)] -= 1.0;
    }
    Ok(r.norm())
}
