use std::str::FromStr;

use rand::Rng;

use super::{dist2, TriMesh};
use crate::coloring::Coloring;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ising::{IsingParams, MetropolisSampler, SpinState};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeshMethod {
    /// Learned field with antiferromagnetic coupling.
    Model,
    /// Antiferromagnetic coupling, zero field.
    Ising,
    /// Independent keep per vertex.
    Random,
    /// Farthest-point sampling.
    Fps,
    /// Sign of the top Laplacian eigenvector.
    Spectral,
}

impl MeshMethod {
    pub fn name(self) -> &'static str {
        match self {
            MeshMethod::Model => "ising+mag",
            MeshMethod::Ising => "ising",
            MeshMethod::Random => "random",
            MeshMethod::Fps => "fps",
            MeshMethod::Spectral => "spectral",
        }
    }

    pub const BASELINES: [MeshMethod; 4] = [
        MeshMethod::Ising,
        MeshMethod::Spectral,
        MeshMethod::Fps,
        MeshMethod::Random,
    ];
}

impl FromStr for MeshMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "ising+mag" | "model" => Ok(MeshMethod::Model),
            "ising" => Ok(MeshMethod::Ising),
            "random" => Ok(MeshMethod::Random),
            "fps" => Ok(MeshMethod::Fps),
            "spectral" => Ok(MeshMethod::Spectral),
            other => Err(Error::InvalidParameter(format!("unknown mesh method `{other}`"))),
        }
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "keep fraction must lie in (0, 1), got {fraction}"
        )))
    }
}

/// Each vertex kept independently with probability `fraction`. If the draw
/// keeps nothing, one uniformly chosen vertex is kept so a coarse mesh exists.
pub fn random_keep(n: usize, fraction: f64, seed: u64) -> Result<SpinState> {
    check_fraction(fraction)?;
    let mut r = rng::seeded_rng(seed);
    let mut keep: Vec<bool> = (0..n).map(|_| r.gen_bool(fraction)).collect();
    if n > 0 && !keep.iter().any(|&k| k) {
        keep[r.gen_range(0..n)] = true;
    }
    Ok(SpinState::from_selection(&keep))
}

/// `round(fraction · n)` vertices by farthest-point iteration in Euclidean
/// space, starting from the vertex with the largest `start_score`.
pub fn farthest_point_sampling(m: &TriMesh, start_score: &[f64], fraction: f64) -> Result<SpinState> {
    check_fraction(fraction)?;
    let n = m.num_vertices();
    if start_score.len() != n {
        return Err(Error::SizeMismatch {
            what: "start scores",
            expected: n,
            got: start_score.len(),
        });
    }
    let count = ((fraction * n as f64).round() as usize).clamp(1, n);
    let pos = m.vertices();
    let first = (0..n)
        .max_by(|&a, &b| start_score[a].total_cmp(&start_score[b]).then(b.cmp(&a)))
        .unwrap();
    let mut keep = vec![false; n];
    let mut nearest = vec![f64::INFINITY; n];
    let mut next = first;
    for _ in 0..count {
        keep[next] = true;
        let p = pos[next];
        for (v, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist2(&pos[v], &p));
        }
        // farthest from the chosen set; lowest index on ties
        next = (0..n)
            .filter(|&v| !keep[v])
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)))
            .unwrap_or(next);
    }
    Ok(SpinState::from_selection(&keep))
}

/// Sign split on the eigenvector of the largest eigenvalue of `L = D − A`,
/// found by power iteration (L is positive semidefinite, so its dominant
/// eigenvalue is the largest). Non-negative entries are kept.
pub fn spectral_split(g: &Graph, max_iters: usize, seed: u64) -> SpinState {
    let n = g.num_nodes();
    let mut r = rng::seeded_rng(seed);
    let mut v: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let normalize = |v: &mut [f64]| {
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if s > 0.0 {
            v.iter_mut().for_each(|x| *x /= s);
        }
    };
    normalize(&mut v);
    let mut w = vec![0.0; n];
    for _ in 0..max_iters {
        for i in 0..n {
            w[i] = g.degree(i) as f64 * v[i] - g.neighbors(i).iter().map(|&j| v[j]).sum::<f64>();
        }
        normalize(&mut w);
        let change = w.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        std::mem::swap(&mut v, &mut w);
        if change < 1e-24 {
            break;
        }
    }
    SpinState::from_selection(&v.iter().map(|&x| x >= 0.0).collect::<Vec<_>>())
}

/// Zero-field antiferromagnet (`J = −1`) sample.
pub fn ising_baseline(
    g: &Graph,
    coloring: &Coloring,
    beta: f64,
    sweeps: usize,
    seed: u64,
) -> Result<SpinState> {
    let p = IsingParams::zero_field(beta, -1.0, g.num_nodes())?;
    MetropolisSampler::new(g, coloring)?.sample(&p, sweeps, seed)
}
