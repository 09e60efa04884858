//! Procedural meshes for training and tests.

use std::collections::HashMap;

use rand::Rng;

use super::{Point, TriMesh};
use crate::rng;

fn normalize(p: Point) -> Point {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

fn icosahedron() -> (Vec<Point>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let v = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (v, f)
}

/// Unit geodesic sphere: every icosahedron face split into `freq²`
/// triangles, giving `10 freq² + 2` vertices.
pub fn geodesic_sphere(freq: usize) -> TriMesh {
    let freq = freq.max(1);
    let (corners, ico_faces) = icosahedron();
    // a lattice point is identified by its integer barycentric weights on global corners
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for f in &ico_faces {
        let mut local = vec![vec![0usize; freq + 1]; freq + 1];
        for i in 0..=freq {
            for j in 0..=freq - i {
                let w = [(f[0], freq - i - j), (f[1], i), (f[2], j)];
                let mut key: Vec<(usize, usize)> = w.iter().copied().filter(|&(_, k)| k > 0).collect();
                key.sort_unstable();
                let id = *index.entry(key).or_insert_with(|| {
                    let mut p = [0.0; 3];
                    for &(c, k) in &w {
                        for d in 0..3 {
                            p[d] += corners[c][d] * k as f64 / freq as f64;
                        }
                    }
                    vertices.push(normalize(p));
                    vertices.len() - 1
                });
                local[i][j] = id;
            }
        }
        for i in 0..freq {
            for j in 0..freq - i {
                faces.push([local[i][j], local[i + 1][j], local[i][j + 1]]);
                if i + j + 1 < freq {
                    faces.push([local[i + 1][j], local[i + 1][j + 1], local[i][j + 1]]);
                }
            }
        }
    }
    TriMesh::new(vertices, faces).expect("generated mesh is valid")
}

/// Subdivision-level icosphere with `10·4^level + 2` vertices: each level
/// splits every triangle in four and pushes the new midpoints onto the sphere.
pub fn icosphere(level: u32) -> TriMesh {
    let (corners, mut faces) = icosahedron();
    let mut vertices: Vec<Point> = corners.into_iter().map(normalize).collect();
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut vertices);
            let bc = midpoint(f[1], f[2], &mut vertices);
            let ca = midpoint(f[2], f[0], &mut vertices);
            next.extend([[f[0], ab, ca], [f[1], bc, ab], [f[2], ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh::new(vertices, faces).expect("generated mesh is valid")
}

/// Unit sphere (frequency `freq`) with random Gaussian radial bumps.
pub fn bumpy_sphere(freq: usize, bumps: usize, seed: u64) -> TriMesh {
    let base = geodesic_sphere(freq);
    let mut r = rng::seeded_rng(seed);
    let centers: Vec<(Point, f64, f64)> = (0..bumps)
        .map(|_| {
            let c = normalize([
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-1.0..1.0),
            ]);
            let amp = r.gen_range(-0.25..0.45);
            let width = r.gen_range(0.15..0.45);
            (c, amp, width)
        })
        .collect();
    let vertices = base
        .vertices()
        .iter()
        .map(|p| {
            let rad = 1.0
                + centers
                    .iter()
                    .map(|(c, a, w)| a * (-super::dist2(p, c) / (w * w)).exp())
                    .sum::<f64>();
            [p[0] * rad, p[1] * rad, p[2] * rad]
        })
        .collect();
    TriMesh::new(vertices, base.faces().to_vec()).unwrap()
}

/// Box with half-extents `half`, edges rounded with radius `radius`,
/// sampled as a `k x k` grid per face (`6k² + 2` vertices).
pub fn rounded_box(k: usize, half: Point, radius: f64) -> TriMesh {
    let k = k.max(1);
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut cube = Vec::new();
    let mut faces = Vec::new();
    let kk = k as i64;
    // integer lattice on the surface of [-k, k]³ with step 2
    let mut vid = |p: [i64; 3], cube: &mut Vec<[i64; 3]>| -> usize {
        *index.entry(p).or_insert_with(|| {
            cube.push(p);
            cube.len() - 1
        })
    };
    for axis in 0..3 {
        for side in [-1i64, 1] {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            for a in 0..kk {
                for b in 0..kk {
                    let at = |da: i64, db: i64| {
                        let mut p = [0i64; 3];
                        p[axis] = side * kk;
                        p[u] = -kk + 2 * (a + da);
                        p[v] = -kk + 2 * (b + db);
                        p
                    };
                    let q = [
                        vid(at(0, 0), &mut cube),
                        vid(at(1, 0), &mut cube),
                        vid(at(1, 1), &mut cube),
                        vid(at(0, 1), &mut cube),
                    ];
                    if side > 0 {
                        faces.push([q[0], q[1], q[2]]);
                        faces.push([q[0], q[2], q[3]]);
                    } else {
                        faces.push([q[0], q[2], q[1]]);
                        faces.push([q[0], q[3], q[2]]);
                    }
                }
            }
        }
    }
    let r = radius.clamp(0.0, half.iter().cloned().fold(f64::INFINITY, f64::min));
    let vertices = cube
        .iter()
        .map(|p| {
            let s: Point = [
                p[0] as f64 / kk as f64 * half[0],
                p[1] as f64 / kk as f64 * half[1],
                p[2] as f64 / kk as f64 * half[2],
            ];
            // fillet: project onto the inner box, push out by r along the offset
            let inner: Point = [
                s[0].clamp(-(half[0] - r), half[0] - r),
                s[1].clamp(-(half[1] - r), half[1] - r),
                s[2].clamp(-(half[2] - r), half[2] - r),
            ];
            let d = super::sub(&s, &inner);
            let n = super::dot(&d, &d).sqrt();
            if n > 0.0 && r > 0.0 {
                [
                    inner[0] + d[0] / n * r,
                    inner[1] + d[1] / n * r,
                    inner[2] + d[2] / n * r,
                ]
            } else {
                s
            }
        })
        .collect();
    TriMesh::new(vertices, faces).unwrap()
}

/// Flat `rows x cols` grid in the `z = 0` plane, spacing 1.
pub fn grid_plane(rows: usize, cols: usize) -> TriMesh {
    let mut vertices = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            vertices.push([j as f64, i as f64, 0.0]);
        }
    }
    let mut faces = Vec::new();
    for i in 0..rows.saturating_sub(1) {
        for j in 0..cols.saturating_sub(1) {
            let a = i * cols + j;
            faces.push([a, a + 1, a + cols + 1]);
            faces.push([a, a + cols + 1, a + cols]);
        }
    }
    TriMesh::new(vertices, faces).unwrap()
}

/// `count` shapes of roughly two thousand vertices: alternating bumpy
/// spheres (2562 vertices) and rounded boxes (1946 vertices).
pub fn shape_corpus(count: usize, seed: u64) -> Vec<TriMesh> {
    (0..count)
        .map(|i| {
            let s = rng::derive_seed(seed, i as u64);
            let mut r = rng::seeded_rng(s);
            if i % 2 == 0 {
                bumpy_sphere(16, r.gen_range(3..9), s)
            } else {
                let half = [r.gen_range(0.5..1.0), r.gen_range(0.5..1.0), r.gen_range(0.5..1.0)];
                rounded_box(18, half, r.gen_range(0.05..0.2))
            }
        })
        .collect()
}
