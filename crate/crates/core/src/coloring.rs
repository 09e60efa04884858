//! Greedy vertex coloring.
//!
//! Nodes that share a color are never adjacent, so their spins are
//! conditionally independent given the rest and can be updated together.

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    color_of: Vec<usize>,
    num_colors: usize,
    classes: Vec<Vec<usize>>,
}

impl Coloring {
    /// Builds a coloring from a per-node color assignment.
    pub fn from_colors(color_of: Vec<usize>) -> Self {
        let num_colors = color_of.iter().map(|&c| c + 1).max().unwrap_or(0);
        let mut classes = vec![Vec::new(); num_colors];
        for (v, &c) in color_of.iter().enumerate() {
            classes[c].push(v);
        }
        Self {
            color_of,
            num_colors,
            classes,
        }
    }

    /// Two-color checkerboard for a `rows x cols` grid built by [`Graph::grid`].
    pub fn checkerboard(rows: usize, cols: usize) -> Self {
        let colors = (0..rows * cols)
            .map(|v| (v / cols + v % cols) % 2)
            .collect();
        Self::from_colors(colors)
    }

    #[inline]
    pub fn color_of(&self, v: usize) -> usize {
        self.color_of[v]
    }

    pub fn colors(&self) -> &[usize] {
        &self.color_of
    }

    #[inline]
    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn num_nodes(&self) -> usize {
        self.color_of.len()
    }

    /// Returns the first monochromatic edge, if any.
    pub fn conflict(&self, g: &Graph) -> Result<Option<(usize, usize)>> {
        self.check_size(g)?;
        Ok(g.edges()
            .iter()
            .copied()
            .find(|&(i, j)| self.color_of[i] == self.color_of[j]))
    }

    /// True iff no edge is monochromatic and the classes partition the nodes.
    pub fn validate(&self, g: &Graph) -> Result<bool> {
        if self.conflict(g)?.is_some() {
            return Ok(false);
        }
        let mut seen = vec![false; self.color_of.len()];
        for (c, class) in self.classes.iter().enumerate() {
            for &v in class {
                if v >= seen.len() || seen[v] || self.color_of[v] != c {
                    return Ok(false);
                }
                seen[v] = true;
            }
        }
        Ok(seen.into_iter().all(|s| s))
    }

    /// Errors unless the coloring is proper for `g`.
    pub fn ensure_proper(&self, g: &Graph) -> Result<()> {
        match self.conflict(g)? {
            Some((i, j)) => Err(Error::ImproperColoring(i, j)),
            None => Ok(()),
        }
    }

    fn check_size(&self, g: &Graph) -> Result<()> {
        if self.color_of.len() != g.num_nodes() {
            return Err(Error::SizeMismatch {
                what: "coloring length",
                expected: g.num_nodes(),
                got: self.color_of.len(),
            });
        }
        Ok(())
    }
}

/// Largest-degree-first greedy coloring, ties broken by node id.
///
/// Each node takes the smallest color not used by an already colored
/// neighbor. Runs in `O(n + m)`: nodes are bucketed by degree instead of
/// sorted.
pub fn greedy_color(g: &Graph) -> Coloring {
    let n = g.num_nodes();
    let max_degree = g.max_degree();
    let mut buckets = vec![Vec::new(); max_degree + 1];
    for v in 0..n {
        buckets[g.degree(v)].push(v);
    }

    const UNCOLORED: usize = usize::MAX;
    let mut color_of = vec![UNCOLORED; n];
    // taken[c] == v marks color c as used by a neighbor of v
    let mut taken = vec![UNCOLORED; max_degree + 1];
    for v in buckets.into_iter().rev().flatten() {
        for &u in g.neighbors(v) {
            let c = color_of[u];
            if c != UNCOLORED {
                taken[c] = v;
            }
        }
        let c = taken.iter().position(|&t| t != v).unwrap();
        color_of[v] = c;
    }
    Coloring::from_colors(color_of)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_two_colors() {
        let g = Graph::path(4);
        let c = greedy_color(&g);
        assert_eq!(c.num_colors(), 2);
        assert!(c.validate(&g).unwrap());
    }

    #[test]
    fn complete_needs_n_colors() {
        let g = Graph::complete(4);
        let c = greedy_color(&g);
        assert_eq!(c.num_colors(), 4);
        assert!(c.validate(&g).unwrap());
    }

    #[test]
    fn grid_gets_checkerboard() {
        for (r, cols) in [(4, 4), (5, 7), (1, 6), (10, 3)] {
            let g = Graph::grid(r, cols);
            let c = greedy_color(&g);
            assert_eq!(c.num_colors(), 2, "{r}x{cols}");
            // alternating classes: grid is connected, so the 2-coloring is
            // the checkerboard up to a swap of the two labels
            let board = Coloring::checkerboard(r, cols);
            let same = (0..g.num_nodes()).all(|v| c.color_of(v) == board.color_of(v));
            let swapped = (0..g.num_nodes()).all(|v| c.color_of(v) != board.color_of(v));
            assert!(same || swapped);
            assert!(board.validate(&g).unwrap());
        }
    }

    #[test]
    fn monochrome_is_invalid() {
        let g = Graph::path(4);
        let c = Coloring::from_colors(vec![0; 4]);
        assert!(!c.validate(&g).unwrap());
        assert!(matches!(
            c.ensure_proper(&g),
            Err(Error::ImproperColoring(0, 1))
        ));
        let proper = Coloring::from_colors(vec![0, 1, 0, 1]);
        assert!(proper.validate(&g).unwrap());
    }

    #[test]
    fn size_mismatch_is_error() {
        let g = Graph::path(4);
        let c = Coloring::from_colors(vec![0, 1]);
        assert!(c.validate(&g).is_err());
    }

    #[test]
    fn deterministic() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)])
            .unwrap();
        assert_eq!(greedy_color(&g), greedy_color(&g));
        // node 2 and 3 have the largest degree; 2 comes first by id
        assert_eq!(greedy_color(&g).color_of(2), 0);
        assert_eq!(greedy_color(&g).color_of(3), 1);
    }
}
