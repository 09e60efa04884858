//! Triangle-mesh sparsification by vertex sampling.
//!
//! Vertices of a fine mesh are spins on its edge graph. Removed vertices are
//! collapsed onto the nearest kept vertex (kept vertices never move) and the
//! quality of the coarse surface is the summed squared distance from every
//! fine vertex to it.

mod baselines;
mod collapse;
mod curvature;
mod distance;
mod generate;
mod io;
mod task;

pub use baselines::{
    farthest_point_sampling, ising_baseline, random_keep, spectral_split, MeshMethod,
};
pub use collapse::{collapse_to_coarse, CoarseMesh};
pub use curvature::{cot_laplacian_curvature, CurvatureFeatures, COT_CLAMP};
pub use distance::{
    closest_point_on_triangle, point_to_mesh_distance, point_to_mesh_distance_brute, TriangleBvh,
};
pub use generate::{bumpy_sphere, geodesic_sphere, grid_plane, icosphere, rounded_box, shape_corpus};
pub use io::{load_mesh, parse_obj, parse_off, write_obj, write_off};
pub use task::{
    evaluate_mesh, mesh_eval_csv, mesh_node_features, sparsify_learned, summarize_mesh,
    MeshEvalRow, MeshTask,
    MESH_EVAL_HEADER,
};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub type Point = [f64; 3];

/// Vertices and triangles; the edge graph is derived on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    faces: Vec<[usize; 3]>,
    graph: Graph,
}

impl TriMesh {
    /// Fails on out-of-range indices, non-finite coordinates or an empty vertex set.
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidData("mesh has no vertices".into()));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidData("non-finite vertex coordinate".into()));
        }
        let mut edges = Vec::with_capacity(faces.len() * 3);
        for f in &faces {
            for &v in f {
                if v >= vertices.len() {
                    return Err(Error::InvalidData(format!(
                        "face references vertex {v} of {}",
                        vertices.len()
                    )));
                }
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if a != b {
                    edges.push((a.min(b), a.max(b)));
                }
            }
        }
        let graph = Graph::from_edges(vertices.len(), &edges)?;
        Ok(Self {
            vertices,
            faces,
            graph,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Undirected edge graph over vertices.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn mean_edge_length(&self) -> f64 {
        let e = self.graph.edges();
        if e.is_empty() {
            return 0.0;
        }
        e.iter()
            .map(|&(a, b)| dist(&self.vertices[a], &self.vertices[b]))
            .sum::<f64>()
            / e.len() as f64
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}

#[inline]
pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn dist2(a: &Point, b: &Point) -> f64 {
    let d = sub(a, b);
    dot(&d, &d)
}

#[inline]
pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    dist2(a, b).sqrt()
}
