use nalgebra::DMatrix;

use crate::graph::Graph;

/// `D^-1/2 (A + I) D^-1/2` in CSR form (self-loop stored separately).
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency {
    offsets: Vec<usize>,
    ids: Vec<usize>,
    weights: Vec<f64>,
    self_weight: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn new(g: &Graph) -> Self {
        let inv_sqrt: Vec<f64> = (0..g.num_nodes())
            .map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt())
            .collect();
        let offsets = g.neighbor_offsets().to_vec();
        let ids = g.neighbor_ids().to_vec();
        let mut weights = Vec::with_capacity(ids.len());
        for v in 0..g.num_nodes() {
            for &u in g.neighbors(v) {
                weights.push(inv_sqrt[v] * inv_sqrt[u]);
            }
        }
        let self_weight = inv_sqrt.iter().map(|s| s * s).collect();
        Self {
            offsets,
            ids,
            weights,
            self_weight,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.self_weight.len()
    }

    /// `H Â` for column-per-node `H` (Â is symmetric).
    pub fn apply(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let rows = h.nrows();
        let mut out = DMatrix::zeros(rows, h.ncols());
        let src = h.as_slice();
        let dst = out.as_mut_slice();
        for v in 0..self.num_nodes() {
            let o = &mut dst[v * rows..(v + 1) * rows];
            let sw = self.self_weight[v];
            for (a, b) in o.iter_mut().zip(&src[v * rows..(v + 1) * rows]) {
                *a = sw * b;
            }
            for k in self.offsets[v]..self.offsets[v + 1] {
                let u = self.ids[k];
                let w = self.weights[k];
                for (a, b) in o.iter_mut().zip(&src[u * rows..(u + 1) * rows]) {
                    *a += w * b;
                }
            }
        }
        out
    }

    /// Dense copy, for tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.num_nodes();
        let mut m = DMatrix::zeros(n, n);
        for v in 0..n {
            m[(v, v)] = self.self_weight[v];
            for k in self.offsets[v]..self.offsets[v + 1] {
                m[(v, self.ids[k])] = self.weights[k];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_dense_formula() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (3, 4)]).unwrap();
        let a = NormalizedAdjacency::new(&g).to_dense();
        let mut dense = DMatrix::<f64>::identity(5, 5);
        for &(i, j) in g.edges() {
            dense[(i, j)] = 1.0;
            dense[(j, i)] = 1.0;
        }
        let d: Vec<f64> = (0..5).map(|i| dense.row(i).sum()).collect();
        for i in 0..5 {
            for j in 0..5 {
                let want = dense[(i, j)] / (d[i] * d[j]).sqrt();
                assert!((a[(i, j)] - want).abs() < 1e-15);
            }
        }
        let h = DMatrix::from_fn(3, 5, |r, c| (r * 5 + c) as f64 * 0.1 - 0.4);
        let applied = NormalizedAdjacency::new(&g).apply(&h);
        assert!((applied - &h * &a).norm() < 1e-13);
    }
}
