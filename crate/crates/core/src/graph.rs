//! Undirected graphs in compressed adjacency form.
//!
//! A [`Graph`] stores sorted neighbor lists for every node plus the list of
//! undirected edges `(i, j)` with `i < j`. Every adjacency slot knows the id
//! of the undirected edge it belongs to, so per-edge data (couplings, edge
//! features) is stored once per edge and is symmetric by construction.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    neighbor_offsets: Vec<usize>,
    neighbor_ids: Vec<usize>,
    /// Undirected edge id for each adjacency slot.
    slot_edge: Vec<usize>,
    edges: Vec<(usize, usize)>,
    edge_coupling: Option<Vec<f64>>,
    node_features: Option<DMatrix<f64>>,
    edge_features: Option<DMatrix<f64>>,
}

impl Graph {
    /// Builds a graph from an edge list.
    ///
    /// Edges are undirected; `(i, j)` and `(j, i)` describe the same edge and
    /// duplicates collapse. Self-loops are rejected.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut canon = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            for index in [i, j] {
                if index >= num_nodes {
                    return Err(Error::NodeOutOfRange { index, num_nodes });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            canon.push((i.min(j), i.max(j)));
        }
        canon.sort_unstable();
        canon.dedup();

        let mut degree = vec![0usize; num_nodes];
        for &(i, j) in &canon {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut neighbor_offsets = Vec::with_capacity(num_nodes + 1);
        neighbor_offsets.push(0);
        for d in &degree {
            neighbor_offsets.push(neighbor_offsets.last().unwrap() + d);
        }
        let total = *neighbor_offsets.last().unwrap();
        let mut neighbor_ids = vec![0usize; total];
        let mut slot_edge = vec![0usize; total];
        let mut fill = neighbor_offsets[..num_nodes].to_vec();
        // Edges are sorted by (min, max), so pushing in this order leaves
        // every neighbor list ascending.
        for (e, &(i, j)) in canon.iter().enumerate() {
            neighbor_ids[fill[i]] = j;
            slot_edge[fill[i]] = e;
            fill[i] += 1;
        }
        for (e, &(i, j)) in canon.iter().enumerate() {
            neighbor_ids[fill[j]] = i;
            slot_edge[fill[j]] = e;
            fill[j] += 1;
        }
        for v in 0..num_nodes {
            let range = neighbor_offsets[v]..neighbor_offsets[v + 1];
            let mut pairs: Vec<(usize, usize)> = range
                .clone()
                .map(|s| (neighbor_ids[s], slot_edge[s]))
                .collect();
            pairs.sort_unstable();
            for (s, (n, e)) in range.zip(pairs) {
                neighbor_ids[s] = n;
                slot_edge[s] = e;
            }
        }

        Ok(Self {
            num_nodes,
            neighbor_offsets,
            neighbor_ids,
            slot_edge,
            edges: canon,
            edge_coupling: None,
            node_features: None,
            edge_features: None,
        })
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path edges are valid")
    }

    /// Cycle on `n >= 3` nodes.
    pub fn ring(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n >= 3 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, &edges).expect("ring edges are valid")
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self::from_edges(n, &edges).expect("complete edges are valid")
    }

    /// 4-neighbor grid with `rows * cols` nodes, node `(r, c)` at index `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Self::from_edges(rows * cols, &edges).expect("grid edges are valid")
    }

    /// Attaches a `num_nodes x feature_dim` node feature matrix.
    pub fn with_node_features(mut self, features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() != self.num_nodes {
            return Err(Error::SizeMismatch {
                what: "node feature rows",
                expected: self.num_nodes,
                got: features.nrows(),
            });
        }
        self.node_features = Some(features);
        Ok(self)
    }

    /// Attaches a `num_edges x edge_feature_dim` matrix, rows ordered as [`Graph::edges`].
    pub fn with_edge_features(mut self, features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() != self.edges.len() {
            return Err(Error::SizeMismatch {
                what: "edge feature rows",
                expected: self.edges.len(),
                got: features.nrows(),
            });
        }
        self.edge_features = Some(features);
        Ok(self)
    }

    /// Attaches one coupling `J_ij` per undirected edge, ordered as [`Graph::edges`].
    pub fn with_edge_coupling(mut self, coupling: Vec<f64>) -> Result<Self> {
        if coupling.len() != self.edges.len() {
            return Err(Error::SizeMismatch {
                what: "edge couplings",
                expected: self.edges.len(),
                got: coupling.len(),
            });
        }
        self.edge_coupling = Some(coupling);
        Ok(self)
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbor_ids[self.neighbor_offsets[v]..self.neighbor_offsets[v + 1]]
    }

    /// Undirected edge ids aligned with [`Graph::neighbors`].
    #[inline]
    pub fn neighbor_edges(&self, v: usize) -> &[usize] {
        &self.slot_edge[self.neighbor_offsets[v]..self.neighbor_offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.neighbor_offsets[v + 1] - self.neighbor_offsets[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_nodes).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|v| self.degree(v)).collect()
    }

    /// Undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbor_offsets(&self) -> &[usize] {
        &self.neighbor_offsets
    }

    pub fn neighbor_ids(&self) -> &[usize] {
        &self.neighbor_ids
    }

    pub fn edge_coupling(&self) -> Option<&[f64]> {
        self.edge_coupling.as_deref()
    }

    pub fn node_features(&self) -> Option<&DMatrix<f64>> {
        self.node_features.as_ref()
    }

    pub fn edge_features(&self) -> Option<&DMatrix<f64>> {
        self.edge_features.as_ref()
    }

    pub fn check_node(&self, index: usize) -> Result<()> {
        if index < self.num_nodes {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                index,
                num_nodes: self.num_nodes,
            })
        }
    }

    /// Serializes the edge list in the whitespace-separated text format.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("% nodes {}\n", self.num_nodes);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }
}

/// Parses the edge-list text format: one `i j` pair per line, 0-based,
/// whitespace-separated; lines starting with `%` are comments.
///
/// A `% nodes N` comment fixes the node count; otherwise it is one more than
/// the largest index seen.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut declared: Option<usize> = None;
    let mut max_index: Option<usize> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('%') {
            let mut tokens = comment.split_whitespace();
            if tokens.next() == Some("nodes") {
                let n = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(lineno + 1, "bad node count"))?;
                declared = Some(n);
            }
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut next = || -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::parse(lineno + 1, "expected two node indices"))?
                .parse()
                .map_err(|_| Error::parse(lineno + 1, "node index is not an integer"))
        };
        let (i, j) = (next()?, next()?);
        if tokens.next().is_some() {
            return Err(Error::parse(lineno + 1, "trailing tokens"));
        }
        max_index = Some(max_index.unwrap_or(0).max(i).max(j));
        edges.push((i, j));
    }
    let num_nodes = declared.unwrap_or_else(|| max_index.map_or(0, |m| m + 1));
    Graph::from_edges(num_nodes, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_degrees() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.degrees(), vec![1, 2, 1]);
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn reversed_duplicate_collapses() {
        let g = Graph::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
    }

    #[test]
    fn grid_edge_count() {
        // m(n-1) + n(m-1) for an m x n grid
        let g = Graph::grid(4, 4);
        assert_eq!(g.num_nodes(), 16);
        assert_eq!(g.num_edges(), 4 * 3 + 4 * 3);
        let g = Graph::grid(3, 5);
        assert_eq!(g.num_edges(), 3 * 4 + 5 * 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Graph::from_edges(3, &[(0, 3)]),
            Err(Error::NodeOutOfRange { index: 3, .. })
        ));
        assert!(matches!(
            Graph::from_edges(3, &[(1, 1)]),
            Err(Error::SelfLoop(1))
        ));
    }

    #[test]
    fn neighbors_sorted_and_slots_consistent() {
        let g = Graph::from_edges(5, &[(4, 0), (2, 0), (0, 3), (1, 0), (3, 4)]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2, 3, 4]);
        for v in 0..g.num_nodes() {
            for (&n, &e) in g.neighbors(v).iter().zip(g.neighbor_edges(v)) {
                let (a, b) = g.edges()[e];
                assert_eq!((a, b), (v.min(n), v.max(n)));
            }
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::grid(3, 3);
        let h = parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn parse_skips_comments() {
        let g = parse_edge_list("% a comment\n0 1\n\n1 2\n").unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 2);
        assert!(parse_edge_list("0 x\n").is_err());
    }

    #[test]
    fn feature_shape_checked() {
        let g = Graph::path(3);
        assert!(g.clone().with_node_features(DMatrix::zeros(2, 1)).is_err());
        assert!(g.with_node_features(DMatrix::zeros(3, 2)).is_ok());
    }
}
