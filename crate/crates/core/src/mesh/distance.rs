//! Closest points on triangles and an AABB tree over a triangle soup.

use rayon::prelude::*;

use super::{dist2, dot, sub, Point};
use crate::error::{Error, Result};

fn lerp(a: &Point, d: &Point, t: f64) -> Point {
    [a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]]
}

fn closest_on_segment(p: &Point, a: &Point, b: &Point) -> Point {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    if len2 == 0.0 {
        return *a;
    }
    lerp(a, &ab, (dot(&sub(p, a), &ab) / len2).clamp(0.0, 1.0))
}

/// Closed-form closest point by Voronoi region (Ericson, Real-Time Collision
/// Detection). Degenerate triangles fall back to their three edges.
pub fn closest_point_on_triangle(p: &Point, a: &Point, b: &Point, c: &Point) -> Point {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return lerp(a, &ab, d1 / (d1 - d3));
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return lerp(a, &ac, d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return lerp(b, &sub(c, b), (d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = va + vb + vc;
    let (v, w) = (vb / denom, vc / denom);
    if denom <= 0.0 || !v.is_finite() || !w.is_finite() {
        return [
            closest_on_segment(p, a, b),
            closest_on_segment(p, b, c),
            closest_on_segment(p, c, a),
        ]
        .into_iter()
        .min_by(|x, y| dist2(p, x).total_cmp(&dist2(p, y)))
        .unwrap();
    }
    [
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ]
}

fn tri_dist2(p: &Point, t: &[Point; 3]) -> f64 {
    dist2(p, &closest_point_on_triangle(p, &t[0], &t[1], &t[2]))
}

#[derive(Clone, Copy, Debug)]
struct Aabb {
    lo: Point,
    hi: Point,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            lo: [f64::INFINITY; 3],
            hi: [f64::NEG_INFINITY; 3],
        }
    }

    fn grow(&mut self, p: &Point) {
        for k in 0..3 {
            self.lo[k] = self.lo[k].min(p[k]);
            self.hi[k] = self.hi[k].max(p[k]);
        }
    }

    fn dist2(&self, p: &Point) -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            let d = (self.lo[k] - p[k]).max(0.0).max(p[k] - self.hi[k]);
            s += d * d;
        }
        s
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

const LEAF_SIZE: usize = 4;

/// Bounding-volume hierarchy over triangles, built by median split on the
/// longest centroid axis.
#[derive(Clone, Debug)]
pub struct TriangleBvh {
    tris: Vec<[Point; 3]>,
    boxes: Vec<Aabb>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(vertices: &[Point], faces: &[[usize; 3]]) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidData("distance query against a mesh with no faces".into()));
        }
        let mut tris: Vec<[Point; 3]> = faces
            .iter()
            .map(|f| [vertices[f[0]], vertices[f[1]], vertices[f[2]]])
            .collect();
        let mut bvh = Self {
            tris: Vec::new(),
            boxes: Vec::new(),
            nodes: Vec::new(),
        };
        let len = tris.len();
        bvh.build(&mut tris, 0, len);
        bvh.tris = tris;
        Ok(bvh)
    }

    fn build(&mut self, tris: &mut [[Point; 3]], start: usize, end: usize) -> usize {
        let mut bb = Aabb::empty();
        for t in &tris[start..end] {
            t.iter().for_each(|p| bb.grow(p));
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        self.boxes.push(bb);
        if end - start <= LEAF_SIZE {
            return id;
        }
        let centroid = |t: &[Point; 3], k: usize| t[0][k] + t[1][k] + t[2][k];
        let mut cb = Aabb::empty();
        for t in &tris[start..end] {
            cb.grow(&[centroid(t, 0), centroid(t, 1), centroid(t, 2)]);
        }
        let axis = (0..3)
            .max_by(|&a, &b| (cb.hi[a] - cb.lo[a]).total_cmp(&(cb.hi[b] - cb.lo[b])))
            .unwrap();
        let mid = (start + end) / 2;
        tris[start..end].select_nth_unstable_by(mid - start, |x, y| {
            centroid(x, axis).total_cmp(&centroid(y, axis))
        });
        let left = self.build(tris, start, mid);
        let right = self.build(tris, mid, end);
        self.nodes[id] = Node::Inner { left, right };
        id
    }

    pub fn num_triangles(&self) -> usize {
        self.tris.len()
    }

    /// Squared distance from `p` to the nearest triangle.
    pub fn nearest_dist2(&self, p: &Point) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            // small slack so rounding in the box bound never prunes the true minimum
            if self.boxes[n].dist2(p) > best * (1.0 + 1e-9) + 1e-300 {
                continue;
            }
            match self.nodes[n] {
                Node::Leaf { start, end } => {
                    for t in &self.tris[start..end] {
                        best = best.min(tri_dist2(p, t));
                    }
                }
                Node::Inner { left, right } => {
                    let (dl, dr) = (self.boxes[left].dist2(p), self.boxes[right].dist2(p));
                    if dl <= dr {
                        stack.extend([right, left]);
                    } else {
                        stack.extend([left, right]);
                    }
                }
            }
        }
        best
    }
}

/// `Σ_x min_t d(x, t)²` over the triangles `faces` of `vertices`.
pub fn point_to_mesh_distance(points: &[Point], vertices: &[Point], faces: &[[usize; 3]]) -> Result<f64> {
    let bvh = TriangleBvh::new(vertices, faces)?;
    let d: Vec<f64> = points.par_iter().map(|p| bvh.nearest_dist2(p)).collect();
    Ok(d.iter().sum())
}

/// All-triangles scan; the reference for [`point_to_mesh_distance`].
pub fn point_to_mesh_distance_brute(
    points: &[Point],
    vertices: &[Point],
    faces: &[[usize; 3]],
) -> Result<f64> {
    if faces.is_empty() {
        return Err(Error::InvalidData("distance query against a mesh with no faces".into()));
    }
    let d: Vec<f64> = points
        .iter()
        .map(|p| {
            faces
                .iter()
                .map(|f| tri_dist2(p, &[vertices[f[0]], vertices[f[1]], vertices[f[2]]]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(d.iter().sum())
}
