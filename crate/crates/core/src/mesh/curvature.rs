use std::collections::HashMap;

use rayon::prelude::*;

use super::{cross, dist, dot, sub, TriMesh};

/// Magnitude cap for a single cotangent (and for an edge weight).
pub const COT_CLAMP: f64 = 1e6;

/// Cotangent Laplacian quantities; per-edge arrays follow `graph().edges()`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureFeatures {
    pub cot_weights: Vec<f64>,
    /// `‖Σ_j w_ij (r_i − r_j)‖²`.
    pub curvature: Vec<f64>,
    pub edge_lengths: Vec<f64>,
}

fn cot(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    let c = cross(u, v);
    let s = dot(&c, &c).sqrt();
    let d = dot(u, v);
    let raw = d / s;
    if raw.is_finite() {
        raw.clamp(-COT_CLAMP, COT_CLAMP)
    } else if d < 0.0 {
        -COT_CLAMP
    } else {
        COT_CLAMP
    }
}

/// `w_ij = (cot α + cot β) / 2`, summed over every face incident to the edge,
/// so a boundary edge gets the single term `cot α / 2`.
pub fn cot_laplacian_curvature(m: &TriMesh) -> CurvatureFeatures {
    let g = m.graph();
    let v = m.vertices();
    let index: HashMap<(usize, usize), usize> =
        g.edges().iter().enumerate().map(|(k, &e)| (e, k)).collect();
    let mut w = vec![0.0; g.num_edges()];
    for f in m.faces() {
        for k in 0..3 {
            let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            if a == b || a == c || b == c {
                continue;
            }
            let e = index[&(a.min(b), a.max(b))];
            w[e] += 0.5 * cot(&sub(&v[a], &v[c]), &sub(&v[b], &v[c]));
        }
    }
    for x in &mut w {
        *x = x.clamp(-COT_CLAMP, COT_CLAMP);
    }
    let curvature = (0..g.num_nodes())
        .into_par_iter()
        .map(|i| {
            let mut s = [0.0; 3];
            for (&j, &e) in g.neighbors(i).iter().zip(g.neighbor_edges(i)) {
                let d = sub(&v[i], &v[j]);
                for k in 0..3 {
                    s[k] += w[e] * d[k];
                }
            }
            dot(&s, &s)
        })
        .collect();
    let edge_lengths = g.edges().iter().map(|&(a, b)| dist(&v[a], &v[b])).collect();
    CurvatureFeatures {
        cot_weights: w,
        curvature,
        edge_lengths,
    }
}
