use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{
    collapse_to_coarse, cot_laplacian_curvature, farthest_point_sampling, ising_baseline,
    random_keep, spectral_split, CoarseMesh, CurvatureFeatures, MeshMethod, TriMesh,
};
use crate::coloring::{greedy_color, Coloring};
use crate::error::Result;
use crate::field_net::{forward, FieldNetConfig, FieldNetParams};
use crate::graph::Graph;
use crate::ising::SpinState;
use crate::rng;
use crate::trainer::{draw_state, Task, TrainConfig};

/// Power-iteration budget for the spectral baseline.
const SPECTRAL_ITERS: usize = 5000;

/// Per-vertex `[z⁰ / mean z⁰, degree / 6, mean incident edge length / mean edge length]`.
pub fn mesh_node_features(m: &TriMesh, c: &CurvatureFeatures) -> DMatrix<f64> {
    let g = m.graph();
    let n = g.num_nodes();
    let mean_z = c.curvature.iter().sum::<f64>() / n as f64;
    let mean_len = c.edge_lengths.iter().sum::<f64>() / c.edge_lengths.len().max(1) as f64;
    let safe = |d: f64| if d > 0.0 { d } else { 1.0 };
    DMatrix::from_fn(n, 3, |i, k| match k {
        0 => c.curvature[i] / safe(mean_z),
        1 => g.degree(i) as f64 / 6.0,
        _ => {
            let e = g.neighbor_edges(i);
            if e.is_empty() {
                0.0
            } else {
                e.iter().map(|&e| c.edge_lengths[e]).sum::<f64>() / e.len() as f64 / safe(mean_len)
            }
        }
    })
}

/// A fine mesh as a training instance; the loss of a state is the summed
/// squared point-to-mesh distance after collapsing the removed vertices.
#[derive(Clone, Debug)]
pub struct MeshTask {
    pub id: String,
    pub mesh: TriMesh,
    pub curvature: CurvatureFeatures,
    graph: Graph,
    coloring: Coloring,
}

impl MeshTask {
    pub fn new(id: impl Into<String>, mesh: TriMesh) -> Result<Self> {
        let curvature = cot_laplacian_curvature(&mesh);
        let graph = mesh
            .graph()
            .clone()
            .with_node_features(mesh_node_features(&mesh, &curvature))?;
        let coloring = greedy_color(&graph);
        Ok(Self {
            id: id.into(),
            mesh,
            curvature,
            graph,
            coloring,
        })
    }

    pub fn coarsen(&self, x: &SpinState) -> Result<(CoarseMesh, f64)> {
        let c = collapse_to_coarse(&self.mesh, x)?;
        let d = c.distance_from(&self.mesh)?;
        Ok((c, d))
    }
}

impl Task for MeshTask {
    fn graph(&self) -> &Graph {
        &self.graph
    }

    fn coloring(&self) -> &Coloring {
        &self.coloring
    }

    fn loss(&self, x: &SpinState) -> f64 {
        self.coarsen(x).map(|(_, d)| d).unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshEvalRow {
    pub mesh_id: String,
    pub method: MeshMethod,
    /// Summed squared distance over all fine vertices.
    pub point_to_mesh_dist: f64,
    pub kept_fraction: f64,
    pub seconds: f64,
}

impl MeshEvalRow {
    pub fn per_vertex(&self, num_vertices: usize) -> f64 {
        self.point_to_mesh_dist / num_vertices.max(1) as f64
    }
}

pub const MESH_EVAL_HEADER: &str = "mesh_id,method,point_to_mesh_dist,kept_fraction,seconds";

pub fn mesh_eval_csv(rows: &[MeshEvalRow]) -> String {
    let mut out = format!("{MESH_EVAL_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.mesh_id,
            r.method.name(),
            r.point_to_mesh_dist,
            r.kept_fraction,
            r.seconds
        );
    }
    out
}

/// Mean and sample standard deviation of the distance per method (first-seen
/// order), with the mean kept fraction.
pub fn summarize_mesh(rows: &[MeshEvalRow]) -> Vec<(MeshMethod, f64, f64, f64)> {
    let mut methods: Vec<MeshMethod> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let v: Vec<&MeshEvalRow> = rows.iter().filter(|r| r.method == m).collect();
            let n = v.len() as f64;
            let mean = v.iter().map(|r| r.point_to_mesh_dist).sum::<f64>() / n;
            let var = if v.len() > 1 {
                v.iter().map(|r| (r.point_to_mesh_dist - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let frac = v.iter().map(|r| r.kept_fraction).sum::<f64>() / n;
            (m, mean, var.sqrt(), frac)
        })
        .collect()
}

/// One draw from the learned field, collapsed and scored.
pub fn sparsify_learned(
    task: &MeshTask,
    params: &FieldNetParams,
    net: &FieldNetConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(CoarseMesh, MeshEvalRow)> {
    let t0 = Instant::now();
    let out = forward(task.graph(), params, net)?;
    let p = cfg.ising_params(task.graph(), out.field)?;
    let x = draw_state(task.graph(), task.coloring(), &p, cfg.sampler, cfg.acceptance, seed)?;
    let (c, d) = task.coarsen(&x)?;
    let row = MeshEvalRow {
        mesh_id: task.id.clone(),
        method: MeshMethod::Model,
        point_to_mesh_dist: d,
        kept_fraction: c.kept_fraction(),
        seconds: t0.elapsed().as_secs_f64(),
    };
    Ok((c, row))
}

fn baseline_state(task: &MeshTask, method: MeshMethod, cfg: &TrainConfig, seed: u64) -> Result<SpinState> {
    let fraction = cfg.target_fraction();
    let sweeps = match cfg.sampler {
        crate::trainer::SampleSource::Metropolis { sweeps } => sweeps,
        crate::trainer::SampleSource::Exact => 10,
    };
    match method {
        MeshMethod::Model => unreachable!("the model is not a baseline"),
        MeshMethod::Ising => ising_baseline(task.graph(), task.coloring(), cfg.beta, sweeps, seed),
        MeshMethod::Random => random_keep(task.mesh.num_vertices(), fraction, seed),
        MeshMethod::Fps => farthest_point_sampling(&task.mesh, &task.curvature.curvature, fraction),
        MeshMethod::Spectral => Ok(spectral_split(task.graph(), SPECTRAL_ITERS, seed)),
    }
}

/// Scores the model (when given) and the requested baselines on every mesh.
/// Baselines target the configured fraction `(1 + η) / 2`.
pub fn evaluate_mesh(
    tasks: &[MeshTask],
    model: Option<(&FieldNetParams, &FieldNetConfig)>,
    cfg: &TrainConfig,
    baselines: &[MeshMethod],
    seed: u64,
) -> Result<Vec<MeshEvalRow>> {
    let per_task: Vec<Vec<MeshEvalRow>> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let s = rng::hash_key(seed, &[i as u64]);
            let mut rows = Vec::new();
            if let Some((params, net)) = model {
                rows.push(sparsify_learned(t, params, net, cfg, s)?.1);
            }
            for (k, &m) in baselines.iter().filter(|&&m| m != MeshMethod::Model).enumerate() {
                let t0 = Instant::now();
                let x = baseline_state(t, m, cfg, rng::hash_key(s, &[1, k as u64]))?;
                let (c, d) = t.coarsen(&x)?;
                rows.push(MeshEvalRow {
                    mesh_id: t.id.clone(),
                    method: m,
                    point_to_mesh_dist: d,
                    kept_fraction: c.kept_fraction(),
                    seconds: t0.elapsed().as_secs_f64(),
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_task.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_net::init_params;
    use crate::mesh::{icosphere, rounded_box};
    use crate::trainer::SampleSource;

    fn mesh_cfg() -> TrainConfig {
        TrainConfig {
            coupling: -1.0,
            sampler: SampleSource::Metropolis { sweeps: 10 },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn features_are_normalized() {
        let t = MeshTask::new("s", icosphere(3)).unwrap();
        let f = t.graph().node_features().unwrap();
        assert_eq!(f.ncols(), 3);
        let n = f.nrows() as f64;
        assert!((f.column(0).sum() / n - 1.0).abs() < 1e-12);
        assert!(f.column(1).iter().all(|&d| d == 1.0 || d == 5.0 / 6.0));
        assert!(f.column(2).iter().all(|&l| (0.8..1.2).contains(&l)));
    }

    #[test]
    fn zero_field_model_is_the_ising_baseline() {
        let t = MeshTask::new("s", icosphere(3)).unwrap();
        let net = FieldNetConfig {
            hidden_dim: 8,
            num_layers: 2,
            ..FieldNetConfig::new(3)
        };
        let mut p = init_params(&net, 1).unwrap();
        p.head_weight.fill(0.0);
        p.head_bias = 0.0;
        let cfg = mesh_cfg();
        let (c, row) = sparsify_learned(&t, &p, &net, &cfg, 9).unwrap();
        let x = ising_baseline(t.graph(), t.coloring(), 1.0, 10, 9).unwrap();
        assert_eq!(c.kept_vertices, x.selected().collect::<Vec<_>>());
        assert!((0.45..=0.55).contains(&row.kept_fraction));
    }

    #[test]
    fn baselines_run_and_write_csv() {
        let tasks = vec![
            MeshTask::new("sphere", icosphere(3)).unwrap(),
            MeshTask::new("box", rounded_box(8, [1.0, 0.7, 0.5], 0.1)).unwrap(),
        ];
        let mut methods = MeshMethod::BASELINES.to_vec();
        methods.push(MeshMethod::Model);
        let rows = evaluate_mesh(&tasks, None, &mesh_cfg(), &methods, 3).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows {
            assert!(r.point_to_mesh_dist.is_finite() && r.point_to_mesh_dist > 0.0);
            assert!(r.kept_fraction > 0.2 && r.kept_fraction < 0.8, "{r:?}");
        }
        let fps = rows.iter().find(|r| r.method == MeshMethod::Fps).unwrap();
        assert_eq!(fps.kept_fraction, 321.0 / 642.0);
        let csv = mesh_eval_csv(&rows);
        assert!(csv.starts_with("mesh_id,method,point_to_mesh_dist,kept_fraction,seconds\n"));
        assert_eq!(csv.lines().count(), 9);
        let strip = |r: &[MeshEvalRow]| -> Vec<(String, f64, f64)> {
            r.iter().map(|r| (r.method.name().to_string(), r.point_to_mesh_dist, r.kept_fraction)).collect()
        };
        let again = evaluate_mesh(&tasks, None, &mesh_cfg(), &methods, 3).unwrap();
        assert_eq!(strip(&again), strip(&rows));
        let s = summarize_mesh(&rows);
        assert_eq!(s.len(), 4);
        assert_eq!(s[0].0, MeshMethod::Ising);
    }
}
