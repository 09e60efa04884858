//! Learned sparsity patterns for sparse approximate inverses (SAI).
//!
//! Given a symmetric `A`, a sparse `M ≈ A⁻¹` is found by minimizing
//! `‖AM − I‖_F` over a fixed pattern, one least-squares problem per column.
//! The pattern is a spin state over candidate positions: a position graph
//! connects entries that share a row or column, and the field network picks
//! which of them to keep.

mod dataset;
mod matrix;
mod position;
mod solve;

pub use dataset::{
    extract_submatrices, gen_banded, gen_dataset1, BandedConfig, MatrixFilter, WINDOW_ZERO_TOL,
};
pub use matrix::{parse_matrix_market, SparseMatrix};
pub use position::{
    build_position_graph, build_position_graph_capped, pattern_from_state, PatternOptions,
    PositionGraph, PositionMode, SparsityPattern, DEFAULT_MAX_DIM,
};
pub use solve::{frobenius_loss, least_squares, solve_columns, SparseApproxInverse};

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index;
use rayon::prelude::*;

use crate::coloring::Coloring;
use crate::error::{Error, Result};
use crate::field_net::{forward, FieldNetConfig, FieldNetParams};
use crate::graph::Graph;
use crate::ising::{Coupling, IsingParams, MetropolisSampler, SpinState};
use crate::rng;
use crate::trainer::{draw_state, Task, TrainConfig};

/// One matrix with its position graph; the loss of a state is `‖AM − I‖_F`.
#[derive(Clone, Debug)]
pub struct SaiTask {
    pub id: String,
    pub matrix: SparseMatrix,
    pub positions: PositionGraph,
    pub options: PatternOptions,
}

impl SaiTask {
    pub fn new(id: impl Into<String>, matrix: SparseMatrix, mode: PositionMode) -> Result<Self> {
        let positions = build_position_graph(&matrix, mode)?;
        Ok(Self {
            id: id.into(),
            matrix,
            positions,
            options: PatternOptions::default(),
        })
    }

    pub fn pattern(&self, x: &SpinState) -> Result<SparsityPattern> {
        pattern_from_state(&self.positions, x, self.options)
    }

    pub fn pattern_loss(&self, p: &SparsityPattern) -> Result<f64> {
        Ok(solve_columns(&self.matrix, p)?.residual_norm())
    }

    /// Selected share of the candidate positions.
    pub fn fraction(&self, p: &SparsityPattern) -> f64 {
        p.count() as f64 / self.positions.num_positions().max(1) as f64
    }
}

impl Task for SaiTask {
    fn graph(&self) -> &Graph {
        self.positions.graph()
    }

    fn coloring(&self) -> &Coloring {
        self.positions.coloring()
    }

    fn loss(&self, x: &SpinState) -> f64 {
        self.pattern(x)
            .and_then(|p| self.pattern_loss(&p))
            .unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SaiMethod {
    /// Learned field.
    Model,
    /// Constant field tuned to the model's fraction.
    Ising,
    /// Uniform subset of the same size as the model's pattern.
    Random,
    /// Pattern of `A` itself.
    OnlyA,
}

impl SaiMethod {
    pub fn name(self) -> &'static str {
        match self {
            SaiMethod::Model => "ising+mag",
            SaiMethod::Ising => "ising",
            SaiMethod::Random => "random",
            SaiMethod::OnlyA => "only-a",
        }
    }

    pub const BASELINES: [SaiMethod; 3] = [SaiMethod::Ising, SaiMethod::Random, SaiMethod::OnlyA];
}

impl FromStr for SaiMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "ising+mag" | "model" => Ok(SaiMethod::Model),
            "ising" => Ok(SaiMethod::Ising),
            "random" => Ok(SaiMethod::Random),
            "only-a" | "only_a" | "onlya" => Ok(SaiMethod::OnlyA),
            other => Err(Error::InvalidParameter(format!("unknown SAI method `{other}`"))),
        }
    }
}

/// Sampler settings for the constant-field Ising baseline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingBaseline {
    pub beta: f64,
    pub coupling: f64,
    pub sweeps: usize,
    /// Draws averaged per bisection step.
    pub tuning_draws: usize,
    pub bisection_steps: usize,
}

impl Default for IsingBaseline {
    fn default() -> Self {
        Self {
            beta: 1.0,
            coupling: -0.4,
            sweeps: 3,
            tuning_draws: 8,
            bisection_steps: 24,
        }
    }
}

impl IsingBaseline {
    pub fn from_train_config(cfg: &TrainConfig) -> Self {
        let sweeps = match cfg.sampler {
            crate::trainer::SampleSource::Metropolis { sweeps } => sweeps,
            crate::trainer::SampleSource::Exact => Self::default().sweeps,
        };
        Self {
            beta: cfg.beta,
            coupling: cfg.coupling,
            sweeps,
            ..Self::default()
        }
    }
}

/// Constant field whose mean realized fraction (over common random numbers)
/// is closest to `target`, found by bisection on `h ∈ [-8, 8]`.
pub fn tune_constant_field(
    g: &Graph,
    coloring: &Coloring,
    cfg: &IsingBaseline,
    target: f64,
    seed: u64,
) -> Result<f64> {
    let sampler = MetropolisSampler::new(g, coloring)?;
    let draws = cfg.tuning_draws.max(1);
    let mean_fraction = |h: f64| -> Result<f64> {
        let p = IsingParams::new(
            cfg.beta,
            Coupling::from_graph(g, cfg.coupling),
            vec![h; g.num_nodes()],
        )?;
        let mut total = 0.0;
        for d in 0..draws {
            total += sampler
                .sample(&p, cfg.sweeps, rng::hash_key(seed, &[d as u64]))?
                .fraction_up();
        }
        Ok(total / draws as f64)
    };
    let (mut lo, mut hi) = (-8.0f64, 8.0f64);
    for _ in 0..cfg.bisection_steps {
        let mid = 0.5 * (lo + hi);
        if mean_fraction(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `round(fraction * |positions|)` positions chosen uniformly.
pub fn random_pattern(pg: &PositionGraph, fraction: f64, seed: u64) -> SparsityPattern {
    let total = pg.num_positions();
    let k = ((fraction.clamp(0.0, 1.0) * total as f64).round() as usize).min(total);
    let picked = index::sample(&mut rng::seeded_rng(seed), total, k);
    SparsityPattern::from_positions(pg.dim(), picked.iter().map(|p| pg.positions()[p])).unwrap()
}

/// One `(loss, fraction)` per requested baseline at the given target fraction.
pub fn sai_baselines(
    task: &SaiTask,
    fraction: f64,
    methods: &[SaiMethod],
    cfg: &IsingBaseline,
    seed: u64,
) -> Result<Vec<(SaiMethod, f64, f64)>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "baseline fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut out = Vec::new();
    for (k, &m) in methods.iter().enumerate() {
        let s = rng::hash_key(seed, &[k as u64]);
        let pattern = match m {
            SaiMethod::Model => continue,
            SaiMethod::Ising => {
                let g = task.graph();
                let h = tune_constant_field(g, task.coloring(), cfg, fraction, s)?;
                let p = IsingParams::new(
                    cfg.beta,
                    Coupling::from_graph(g, cfg.coupling),
                    vec![h; g.num_nodes()],
                )?;
                let x = MetropolisSampler::new(g, task.coloring())?.sample(
                    &p,
                    cfg.sweeps,
                    rng::hash_key(s, &[u64::MAX]),
                )?;
                task.pattern(&x)?
            }
            SaiMethod::Random => random_pattern(&task.positions, fraction, s),
            SaiMethod::OnlyA => SparsityPattern::of_matrix(&task.matrix),
        };
        out.push((m, task.pattern_loss(&pattern)?, task.fraction(&pattern)));
    }
    Ok(out)
}

/// One evaluation CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct SaiEvalRow {
    pub matrix_id: String,
    pub method: SaiMethod,
    pub frobenius_loss: f64,
    pub fraction: f64,
}

pub const SAI_EVAL_HEADER: &str = "matrix_id,method,frobenius_loss,fraction";

pub fn sai_eval_csv(rows: &[SaiEvalRow]) -> String {
    let mut out = format!("{SAI_EVAL_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.matrix_id,
            r.method.name(),
            r.frobenius_loss,
            r.fraction
        );
    }
    out
}

/// Mean and sample standard deviation of the loss per method, in first-seen order.
pub fn summarize(rows: &[SaiEvalRow]) -> Vec<(SaiMethod, f64, f64, f64)> {
    let mut methods: Vec<SaiMethod> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let v: Vec<&SaiEvalRow> = rows.iter().filter(|r| r.method == m).collect();
            let n = v.len() as f64;
            let mean = v.iter().map(|r| r.frobenius_loss).sum::<f64>() / n;
            let var = if v.len() > 1 {
                v.iter().map(|r| (r.frobenius_loss - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let frac = v.iter().map(|r| r.fraction).sum::<f64>() / n;
            (m, mean, var.sqrt(), frac)
        })
        .collect()
}

/// Scores the model (one draw per matrix) and the requested baselines at the
/// model's realized per-matrix fraction.
pub fn evaluate_sai(
    tasks: &[SaiTask],
    params: &FieldNetParams,
    net: &FieldNetConfig,
    cfg: &TrainConfig,
    baselines: &[SaiMethod],
    seed: u64,
) -> Result<Vec<SaiEvalRow>> {
    let base_cfg = IsingBaseline::from_train_config(cfg);
    let per_task: Vec<Vec<SaiEvalRow>> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let s = rng::hash_key(seed, &[i as u64]);
            let out = forward(t.graph(), params, net)?;
            let ising = cfg.ising_params(t.graph(), out.field)?;
            let x = draw_state(t.graph(), t.coloring(), &ising, cfg.sampler, cfg.acceptance, s)?;
            let pattern = t.pattern(&x)?;
            let fraction = t.fraction(&pattern);
            let mut rows = vec![SaiEvalRow {
                matrix_id: t.id.clone(),
                method: SaiMethod::Model,
                frobenius_loss: t.pattern_loss(&pattern)?,
                fraction,
            }];
            let target = fraction.clamp(1e-3, 1.0 - 1e-3);
            for (m, loss, f) in sai_baselines(t, target, baselines, &base_cfg, rng::hash_key(s, &[1]))? {
                rows.push(SaiEvalRow {
                    matrix_id: t.id.clone(),
                    method: m,
                    frobenius_loss: loss,
                    fraction: f,
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
    use crate::coloring::greedy_color;

    #[test]
    fn only_a_on_identity_is_exact() {
        let t = SaiTask::new("eye", SparseMatrix::identity(5), PositionMode::Full).unwrap();
        let r = sai_baselines(&t, 0.5, &[SaiMethod::OnlyA], &IsingBaseline::default(), 0).unwrap();
        assert!(r[0].1 < 1e-15);
        assert!((r[0].2 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn random_pattern_has_exact_size() {
        let a = gen_dataset1(1, 3).unwrap().remove(0);
        let t = SaiTask::new("a", a, PositionMode::Pattern).unwrap();
        let total = t.positions.num_positions();
        for (f, seed) in [(0.5, 1), (0.37, 2), (0.9, 3)] {
            let p = random_pattern(&t.positions, f, seed);
            assert_eq!(p.count(), (f * total as f64).round() as usize);
            assert!(p.positions().all(|q| t.positions.positions().contains(&q)));
        }
    }

    #[test]
    fn tuned_field_hits_fraction() {
        let g = Graph::grid(12, 12);
        let c = greedy_color(&g);
        let cfg = IsingBaseline {
            tuning_draws: 16,
            ..IsingBaseline::default()
        };
        for target in [0.3, 0.5, 0.7] {
            let h = tune_constant_field(&g, &c, &cfg, target, 4).unwrap();
            let p = IsingParams::new(1.0, Coupling::Uniform(-0.4), vec![h; 144]).unwrap();
            let s = MetropolisSampler::new(&g, &c).unwrap();
            let f: f64 = (0..64)
                .map(|d| s.sample(&p, 3, 1000 + d).unwrap().fraction_up())
                .sum::<f64>()
                / 64.0;
            assert!((f - target).abs() < 0.03, "target {target}: {f} (h = {h})");
        }
    }

    #[test]
    fn full_prior_beats_subsets() {
        let a = gen_dataset1(1, 5).unwrap().remove(0);
        let t = SaiTask::new("a", a, PositionMode::Pattern).unwrap();
        let m = t.positions.num_positions();
        let full = t.loss(&SpinState::all_up(m));
        for seed in 0..10 {
            let p = random_pattern(&t.positions, 0.5, seed);
            assert!(full <= t.pattern_loss(&p).unwrap() + 1e-12);
        }
        assert!((t.loss(&SpinState::all_down(m)) - 30f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_and_summary() {
        let rows = vec![
            SaiEvalRow {
                matrix_id: "m0".into(),
                method: SaiMethod::Model,
                frobenius_loss: 1.0,
                fraction: 0.5,
            },
            SaiEvalRow {
                matrix_id: "m1".into(),
                method: SaiMethod::Model,
                frobenius_loss: 3.0,
                fraction: 0.5,
            },
            SaiEvalRow {
                matrix_id: "m0".into(),
                method: SaiMethod::Random,
                frobenius_loss: 2.0,
                fraction: 0.5,
            },
        ];
        let csv = sai_eval_csv(&rows);
        assert!(csv.starts_with("matrix_id,method,frobenius_loss,fraction\nm0,ising+mag,1,0.5\n"));
        let s = summarize(&rows);
        assert_eq!(s[0].0, SaiMethod::Model);
        assert_eq!(s[0].1, 2.0);
        assert!((s[0].2 - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!("only-a".parse::<SaiMethod>().unwrap(), SaiMethod::OnlyA);
        assert!("nope".parse::<SaiMethod>().is_err());
    }
}
