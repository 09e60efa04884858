use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::SparseMatrix;
use crate::coloring::{greedy_color, Coloring};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ising::SpinState;

/// Largest matrix dimension accepted by [`build_position_graph`] by default.
pub const DEFAULT_MAX_DIM: usize = 64;

/// Which entries of `M` are candidates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PositionMode {
    /// Structural nonzeros of `A + A²`.
    #[default]
    Pattern,
    /// All `n²` entries.
    Full,
}

/// Graph over candidate positions of the approximate inverse.
///
/// Nodes are `(row, col)` positions in column-major order; two positions are
/// adjacent iff they share a row or a column. Node features are
/// `[A_ij, (A²)_ij, 1]`.
#[derive(Clone, Debug)]
pub struct PositionGraph {
    n: usize,
    mode: PositionMode,
    positions: Vec<(usize, usize)>,
    graph: Graph,
    coloring: Coloring,
}

impl PositionGraph {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> PositionMode {
        self.mode
    }

    /// `(row, col)` of every node.
    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn num_positions(&self) -> usize {
        self.positions.len()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn coloring(&self) -> &Coloring {
        &self.coloring
    }
}

pub fn build_position_graph(a: &SparseMatrix, mode: PositionMode) -> Result<PositionGraph> {
    build_position_graph_capped(a, mode, DEFAULT_MAX_DIM)
}

pub fn build_position_graph_capped(
    a: &SparseMatrix,
    mode: PositionMode,
    max_dim: usize,
) -> Result<PositionGraph> {
    let n = a.dim();
    if n > max_dim {
        return Err(Error::InvalidData(format!(
            "matrix dimension {n} exceeds the position-graph cap {max_dim}"
        )));
    }
    if !a.is_symmetric() {
        return Err(Error::InvalidData("matrix must be symmetric".into()));
    }
    let dense = a.to_dense();
    let square = &dense * &dense;

    // structural pattern of A + A², independent of numerical cancellation
    let mut structural = vec![false; n * n];
    let nz: Vec<Vec<usize>> = (0..n).map(|j| a.column(j).map(|(i, _)| i).collect()).collect();
    for j in 0..n {
        for &k in &nz[j] {
            structural[j * n + k] = true;
            // A² has (i, j) whenever A_ik and A_kj are both nonzero
            for &i in &nz[k] {
                structural[j * n + i] = true;
            }
        }
    }

    let mut positions = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if mode == PositionMode::Full || structural[j * n + i] {
                positions.push((i, j));
            }
        }
    }

    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut by_col: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (p, &(i, j)) in positions.iter().enumerate() {
        by_row[i].push(p);
        by_col[j].push(p);
    }
    let mut edges = Vec::new();
    for group in by_row.iter().chain(&by_col) {
        for (k, &p) in group.iter().enumerate() {
            for &q in &group[k + 1..] {
                edges.push((p, q));
            }
        }
    }
    let features = DMatrix::from_fn(positions.len(), 3, |p, f| {
        let (i, j) = positions[p];
        match f {
            0 => dense[(i, j)],
            1 => square[(i, j)],
            _ => 1.0,
        }
    });
    let graph = Graph::from_edges(positions.len(), &edges)?.with_node_features(features)?;
    let coloring = greedy_color(&graph);
    Ok(PositionGraph {
        n,
        mode,
        positions,
        graph,
        coloring,
    })
}

/// Selected entries of `M`, stored per column with ascending rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    columns: Vec<Vec<usize>>,
}

impl SparsityPattern {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            columns: vec![Vec::new(); n],
        }
    }

    pub fn from_positions(n: usize, positions: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut columns = vec![Vec::new(); n];
        for (i, j) in positions {
            if i >= n || j >= n {
                return Err(Error::InvalidData(format!(
                    "position ({i}, {j}) outside a {n}x{n} pattern"
                )));
            }
            columns[j].push(i);
        }
        for c in &mut columns {
            c.sort_unstable();
            c.dedup();
        }
        Ok(Self { n, columns })
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            columns: vec![(0..n).collect(); n],
        }
    }

    /// Nonzero structure of `a`.
    pub fn of_matrix(a: &SparseMatrix) -> Self {
        Self {
            n: a.dim(),
            columns: (0..a.dim()).map(|j| a.column(j).map(|(i, _)| i).collect()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Rows selected in column `j`.
    pub fn column(&self, j: usize) -> &[usize] {
        &self.columns[j]
    }

    pub fn count(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.columns[j].binary_search(&i).is_ok()
    }

    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.columns
            .iter()
            .enumerate()
            .flat_map(|(j, rows)| rows.iter().map(move |&i| (i, j)))
    }

    /// Adds `(j, i)` for every selected `(i, j)`.
    pub fn symmetrized(&self) -> Self {
        let all: Vec<_> = self.positions().flat_map(|(i, j)| [(i, j), (j, i)]).collect();
        Self::from_positions(self.n, all).unwrap()
    }

    pub fn with_diagonal(&self) -> Self {
        let all: Vec<_> = self.positions().chain((0..self.n).map(|i| (i, i))).collect();
        Self::from_positions(self.n, all).unwrap()
    }

    /// One `i j` line (1-based) per selected entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.positions() {
            let _ = writeln!(out, "{} {}", i + 1, j + 1);
        }
        out
    }
}

/// Post-processing applied when turning a spin state into a pattern.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PatternOptions {
    pub symmetrize: bool,
    pub force_diagonal: bool,
}

/// Positions whose spin is `+1`.
pub fn pattern_from_state(
    pg: &PositionGraph,
    x: &SpinState,
    opts: PatternOptions,
) -> Result<SparsityPattern> {
    if x.len() != pg.num_positions() {
        return Err(Error::SizeMismatch {
            what: "spin state length",
            expected: pg.num_positions(),
            got: x.len(),
        });
    }
    let chosen = pg
        .positions
        .iter()
        .zip(x.as_slice())
        .filter(|(_, &s)| s > 0)
        .map(|(&p, _)| p);
    let mut pattern = SparsityPattern::from_positions(pg.n, chosen)?;
    if opts.symmetrize {
        pattern = pattern.symmetrized();
    }
    if opts.force_diagonal {
        pattern = pattern.with_diagonal();
    }
    Ok(pattern)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiagonal(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn identity_pattern_mode() {
        let pg = build_position_graph(&SparseMatrix::identity(3), PositionMode::Pattern).unwrap();
        assert_eq!(pg.positions(), &[(0, 0), (1, 1), (2, 2)]);
        assert_eq!(pg.graph().num_edges(), 0);
    }

    #[test]
    fn identity_full_mode() {
        let pg = build_position_graph(&SparseMatrix::identity(3), PositionMode::Full).unwrap();
        assert_eq!(pg.num_positions(), 9);
        assert!((0..9).all(|v| pg.graph().degree(v) == 4));
        pg.coloring().ensure_proper(pg.graph()).unwrap();
    }

    #[test]
    fn tridiagonal_has_pentadiagonal_prior() {
        let pg = build_position_graph(&tridiagonal(30), PositionMode::Pattern).unwrap();
        assert_eq!(pg.num_positions(), 5 * 30 - 6);
        assert!(pg.positions().iter().all(|&(i, j)| i.abs_diff(j) <= 2));
    }

    #[test]
    fn features_and_adjacency() {
        let a = tridiagonal(4);
        let pg = build_position_graph(&a, PositionMode::Full).unwrap();
        let f = pg.graph().node_features().unwrap();
        let sq = a.to_dense() * a.to_dense();
        for (p, &(i, j)) in pg.positions().iter().enumerate() {
            assert_eq!(f[(p, 0)], a.get(i, j));
            assert_eq!(f[(p, 1)], sq[(i, j)]);
            assert_eq!(f[(p, 2)], 1.0);
            for (q, &(k, l)) in pg.positions().iter().enumerate() {
                let adjacent = pg.graph().neighbors(p).contains(&q);
                assert_eq!(adjacent, p != q && (i == k || j == l));
            }
        }
    }

    #[test]
    fn rejects_asymmetric_and_oversized() {
        let a = SparseMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 0, 1.0)]).unwrap();
        assert!(build_position_graph(&a, PositionMode::Pattern).is_err());
        assert!(build_position_graph(&SparseMatrix::identity(65), PositionMode::Pattern).is_err());
    }

    #[test]
    fn states_to_patterns() {
        let pg = build_position_graph(&tridiagonal(5), PositionMode::Pattern).unwrap();
        let m = pg.num_positions();
        let all = pattern_from_state(&pg, &SpinState::all_up(m), PatternOptions::default()).unwrap();
        assert_eq!(all.count(), m);
        let none = pattern_from_state(&pg, &SpinState::all_down(m), PatternOptions::default()).unwrap();
        assert_eq!(none.count(), 0);
        let forced = pattern_from_state(
            &pg,
            &SpinState::all_down(m),
            PatternOptions {
                force_diagonal: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(forced.count(), 5);
        assert!(pattern_from_state(&pg, &SpinState::all_up(m + 1), PatternOptions::default()).is_err());

        // a single upper entry becomes a mirrored pair
        let mut spins = vec![-1i8; m];
        let p = pg.positions().iter().position(|&q| q == (0, 2)).unwrap();
        spins[p] = 1;
        let sym = pattern_from_state(
            &pg,
            &SpinState::new(spins).unwrap(),
            PatternOptions {
                symmetrize: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(sym.contains(0, 2) && sym.contains(2, 0) && sym.count() == 2);
        assert_eq!(sym.to_text(), "3 1\n1 3\n");
    }
}
