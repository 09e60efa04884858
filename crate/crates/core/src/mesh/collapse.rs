use std::collections::{HashSet, VecDeque};

use super::{dist2, point_to_mesh_distance, Point, TriMesh};
use crate::error::{Error, Result};
use crate::ising::SpinState;

/// Kept vertices of a fine mesh with faces remapped onto them. Face indices
/// refer to the fine mesh, so kept positions are shared, never copied.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseMesh {
    pub kept_vertices: Vec<usize>,
    /// Fine vertex → kept vertex (kept vertices map to themselves).
    pub vertex_map: Vec<usize>,
    pub faces: Vec<[usize; 3]>,
}

impl CoarseMesh {
    pub fn kept_fraction(&self) -> f64 {
        self.kept_vertices.len() as f64 / self.vertex_map.len().max(1) as f64
    }

    /// Summed squared distance from every fine vertex to the coarse surface.
    pub fn distance_from(&self, fine: &TriMesh) -> Result<f64> {
        point_to_mesh_distance(fine.vertices(), fine.vertices(), &self.faces)
    }

    /// Compacted standalone mesh over the kept vertices.
    pub fn to_trimesh(&self, fine: &TriMesh) -> Result<TriMesh> {
        let mut new_id = vec![usize::MAX; self.vertex_map.len()];
        for (k, &v) in self.kept_vertices.iter().enumerate() {
            new_id[v] = k;
        }
        let vertices: Vec<Point> = self.kept_vertices.iter().map(|&v| fine.vertices()[v]).collect();
        let faces = self
            .faces
            .iter()
            .map(|f| [new_id[f[0]], new_id[f[1]], new_id[f[2]]])
            .collect();
        TriMesh::new(vertices, faces)
    }
}

/// Removes the vertices with `x_i = −1`, sending each to the nearest kept
/// vertex by hop count (ties: Euclidean distance, then index), and drops
/// degenerate and duplicate faces.
pub fn collapse_to_coarse(m: &TriMesh, x: &SpinState) -> Result<CoarseMesh> {
    let n = m.num_vertices();
    if x.len() != n {
        return Err(Error::SizeMismatch {
            what: "spin state",
            expected: n,
            got: x.len(),
        });
    }
    let kept_vertices: Vec<usize> = x.selected().collect();
    if kept_vertices.is_empty() {
        return Err(Error::InvalidData("collapse needs at least one kept vertex".into()));
    }
    let g = m.graph();
    let pos = m.vertices();
    let mut vertex_map: Vec<usize> = (0..n).collect();
    let mut seen = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for v in 0..n {
        if x.is_up(v) {
            continue;
        }
        // level-synchronous BFS; stop at the first level that reaches a kept vertex
        queue.clear();
        queue.push_back(v);
        seen[v] = v as u32;
        let mut best: Option<usize> = None;
        while best.is_none() && !queue.is_empty() {
            for _ in 0..queue.len() {
                let u = queue.pop_front().unwrap();
                for &w in g.neighbors(u) {
                    if seen[w] == v as u32 {
                        continue;
                    }
                    seen[w] = v as u32;
                    if x.is_up(w) {
                        let better = match best {
                            None => true,
                            Some(b) => {
                                let (dw, db) = (dist2(&pos[v], &pos[w]), dist2(&pos[v], &pos[b]));
                                dw < db || (dw == db && w < b)
                            }
                        };
                        if better {
                            best = Some(w);
                        }
                    } else {
                        queue.push_back(w);
                    }
                }
            }
        }
        // a component with nothing kept falls back to the Euclidean nearest kept vertex
        vertex_map[v] = best.unwrap_or_else(|| {
            *kept_vertices
                .iter()
                .min_by(|&&a, &&b| {
                    dist2(&pos[v], &pos[a])
                        .total_cmp(&dist2(&pos[v], &pos[b]))
                        .then(a.cmp(&b))
                })
                .unwrap()
        });
    }
    let mut seen_faces = HashSet::new();
    let mut faces = Vec::new();
    for f in m.faces() {
        let r = [vertex_map[f[0]], vertex_map[f[1]], vertex_map[f[2]]];
        if r[0] == r[1] || r[1] == r[2] || r[0] == r[2] {
            continue;
        }
        let mut key = r;
        key.sort_unstable();
        if seen_faces.insert(key) {
            faces.push(r);
        }
    }
    Ok(CoarseMesh {
        kept_vertices,
        vertex_map,
        faces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::greedy_color;
    use crate::ising::{IsingParams, MetropolisSampler};
    use crate::mesh::icosphere;

    fn tetra() -> TriMesh {
        TriMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn all_kept_is_identity() {
        let m = icosphere(2);
        let c = collapse_to_coarse(&m, &SpinState::all_up(m.num_vertices())).unwrap();
        assert_eq!(c.faces, m.faces());
        assert_eq!(c.to_trimesh(&m).unwrap(), m);
        assert_eq!(c.distance_from(&m).unwrap(), 0.0);
        assert!(collapse_to_coarse(&m, &SpinState::all_down(m.num_vertices())).is_err());
    }

    #[test]
    fn tetrahedron_vertex_removal() {
        let m = tetra();
        let c = collapse_to_coarse(&m, &SpinState::new(vec![1, 1, 1, -1]).unwrap()).unwrap();
        // all three neighbors are at distance 1 or √2; vertex 0 at the origin is nearest
        assert_eq!(c.vertex_map, vec![0, 1, 2, 0]);
        assert_eq!(c.faces.len(), 1);
        assert_eq!(c.kept_vertices, vec![0, 1, 2]);
    }

    #[test]
    fn ties_break_by_index() {
        // removed apex equidistant from 1 and 2; 0 is farther
        let m = TriMesh::new(
            vec![[-1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [1.0, 0.0, 0.0]],
            vec![[0, 1, 3], [0, 3, 2]],
        )
        .unwrap();
        let c = collapse_to_coarse(&m, &SpinState::new(vec![1, 1, 1, -1]).unwrap()).unwrap();
        assert_eq!(c.vertex_map[3], 1);
    }

    #[test]
    fn bfs_prefers_hops_over_euclid() {
        // 3 is Euclidean-closest to 1 but two hops away; 0 is one hop away
        let m = TriMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.05, 0.0, 0.0], [5.0, 5.0, 0.0]],
            vec![[0, 1, 2], [2, 3, 4]],
        )
        .unwrap();
        let x = SpinState::new(vec![1, -1, -1, 1, 1]).unwrap();
        let c = collapse_to_coarse(&m, &x).unwrap();
        assert_eq!(c.vertex_map[1], 0);
        assert_eq!(c.vertex_map[2], 3);
    }

    #[test]
    fn antiferro_half_removal_halves_faces() {
        let m = icosphere(4);
        let n = m.num_vertices();
        let c = greedy_color(m.graph());
        let s = MetropolisSampler::new(m.graph(), &c).unwrap();
        let p = IsingParams::zero_field(1.0, -1.0, n).unwrap();
        for seed in 0..20 {
            let x = s.sample(&p, 10, seed).unwrap();
            let cm = collapse_to_coarse(&m, &x).unwrap();
            let ratio = cm.faces.len() as f64 / m.num_faces() as f64;
            assert!((0.3..0.7).contains(&ratio), "seed {seed}: {ratio}");
            let kept: HashSet<usize> = cm.kept_vertices.iter().copied().collect();
            for f in &cm.faces {
                assert!(f[0] != f[1] && f[1] != f[2] && f[0] != f[2]);
                assert!(f.iter().all(|v| kept.contains(v)));
            }
            for (v, &t) in cm.vertex_map.iter().enumerate() {
                assert!(kept.contains(&t));
                assert_eq!(x.is_up(v), t == v);
            }
            let coarse = cm.to_trimesh(&m).unwrap();
            for (k, &v) in cm.kept_vertices.iter().enumerate() {
                assert_eq!(coarse.vertices()[k], m.vertices()[v]);
            }
        }
    }
}
