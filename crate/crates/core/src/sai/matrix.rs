use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-column form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidData(format!(
                    "entry ({i}, {j}) outside a {n}x{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidData(format!("non-finite entry at ({i}, {j})")));
            }
            t.push((j, i, v));
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (j, i, v) in t {
            if last == Some((j, i)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((j, i));
            row_idx.push(i);
            values.push(v);
            col_ptr[j + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut m = Self {
            n,
            col_ptr,
            row_idx,
            values,
            symmetric: false,
        };
        m.drop_zeros();
        m.symmetric = m.check_symmetric(0.0);
        Ok(m)
    }

    /// Nonzero entries of a dense square matrix.
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidData(format!(
                "matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut t = Vec::new();
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), &t)
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &t).unwrap()
    }

    fn drop_zeros(&mut self) {
        let mut ptr = vec![0usize; self.n + 1];
        let mut rows = Vec::with_capacity(self.row_idx.len());
        let mut vals = Vec::with_capacity(self.values.len());
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.values[k] != 0.0 {
                    rows.push(self.row_idx[k]);
                    vals.push(self.values[k]);
                }
            }
            ptr[j + 1] = rows.len();
        }
        self.col_ptr = ptr;
        self.row_idx = rows;
        self.values = vals;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Whether the matrix equals its transpose exactly.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Fraction of zero entries.
    pub fn sparsity(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        1.0 - self.nnz() as f64 / (self.n * self.n) as f64
    }

    /// `(row, value)` pairs of column `j`, rows ascending.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.row_idx[r.clone()].binary_search(&i) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|j| self.column(j).map(move |(i, v)| (i, j, v)))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for (i, v) in self.column(j) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn determinant(&self) -> f64 {
        self.to_dense().lu().determinant()
    }

    fn check_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|j| self.column(j).all(|(i, v)| (self.get(j, i) - v).abs() <= tol))
    }

    /// Matrix Market coordinate text. Symmetric matrices store the lower triangle only.
    pub fn to_matrix_market(&self) -> String {
        let kind = if self.symmetric { "symmetric" } else { "general" };
        let entries: Vec<_> = self
            .triplets()
            .into_iter()
            .filter(|&(i, j, _)| !self.symmetric || i >= j)
            .collect();
        let mut out = format!("%%MatrixMarket matrix coordinate real {kind}\n");
        let _ = writeln!(out, "{} {} {}", self.n, self.n, entries.len());
        for (i, j, v) in entries {
            let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
        }
        out
    }
}

/// Parses Matrix Market `coordinate` text (`real`, `integer` or `pattern`;
/// `general` or `symmetric`). Only square matrices are accepted.
pub fn parse_matrix_market(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::parse(1, format!("bad header `{header}`")));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::parse(1, format!("unsupported format `{}`", tokens[2])));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        f => return Err(Error::parse(1, format!("unsupported field `{f}`"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        s => return Err(Error::parse(1, format!("unsupported symmetry `{s}`"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(lineno, format!("bad integer `{s}`")))
        };
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(Error::parse(lineno, "expected `rows cols nnz`"));
                }
                let (r, c, nnz) = (int(fields[0])?, int(fields[1])?, int(fields[2])?);
                if r != c {
                    return Err(Error::parse(lineno, format!("matrix is {r}x{c}, not square")));
                }
                size = Some((r, nnz));
                triplets.reserve(if symmetric { 2 * nnz } else { nnz });
            }
            Some((n, _)) => {
                let want = if pattern { 2 } else { 3 };
                if fields.len() != want {
                    return Err(Error::parse(lineno, format!("expected {want} fields")));
                }
                let (i, j) = (int(fields[0])?, int(fields[1])?);
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(Error::parse(lineno, format!("index ({i}, {j}) out of range")));
                }
                let v = if pattern {
                    1.0
                } else {
                    fields[2]
                        .parse::<f64>()
                        .map_err(|_| Error::parse(lineno, format!("bad value `{}`", fields[2])))?
                };
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| Error::parse(1, "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(Error::InvalidData(format!(
            "header announces {nnz} entries, found {stored}"
        )));
    }
    SparseMatrix::from_triplets(n, &triplets)
}
