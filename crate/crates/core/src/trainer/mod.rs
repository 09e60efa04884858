//! Training the field network against black-box losses of sampled states.
//!
//! With `p_θ(x) ∝ exp(-β E_θ(x))` the score is `∇ log p = -β ∇E + ∇ log Z`.
//! The leave-one-out estimator over `K` draws,
//!
//! ```text
//! g = 1/K sum_k (ℓ_k - mean_{j≠k} ℓ_j) ∇ log p(x_k)
//! ```
//!
//! never needs `log Z` because `sum_k (ℓ_k - mean_{j≠k} ℓ_j) = 0`. Only the
//! field depends on θ and `∂E/∂h_i = -x_i`, so the upstream gradient into
//! the network is `β/K sum_k (ℓ_k - mean_{j≠k} ℓ_j) x_k`.

mod adam;

pub use adam::{adam_update, AdamConfig, AdamState};

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::coloring::Coloring;
use crate::error::{Error, Result};
use crate::field_net::{
    self, backward, forward, write_checkpoint, Checkpoint, FieldNetConfig, FieldNetParams,
    GradientBundle, TrainingState,
};
use crate::graph::Graph;
use crate::ising::{
    eta_stochastic, exact_distribution, AcceptanceRule, Coupling, IsingParams, MetropolisSampler,
    SpinState,
};
use crate::rng;

/// A training instance: a graph with node features, a proper coloring and a loss.
pub trait Task: Sync {
    fn graph(&self) -> &Graph;
    fn coloring(&self) -> &Coloring;
    /// Black-box loss of a selection; must be deterministic.
    fn loss(&self, x: &SpinState) -> f64;
}

/// Where training draws spin states from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleSource {
    /// `sweeps` color-parallel Metropolis sweeps from a random start.
    Metropolis { sweeps: usize },
    /// Exact i.i.d. draws by enumeration (tiny graphs only).
    Exact,
}

/// How the magnetization target is enforced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PenaltyMode {
    /// `w (mean_i tanh(β h_i) - η)²`, differentiated directly.
    #[default]
    Deterministic,
    /// `w (η_sto(x) - η)²` folded into each sample's loss (experimental).
    Stochastic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub eta_target: f64,
    pub beta: f64,
    /// Coupling used when a graph carries no per-edge couplings.
    pub coupling: f64,
    pub sampler: SampleSource,
    pub acceptance: AcceptanceRule,
    pub rloo_k: usize,
    pub penalty_weight: f64,
    pub penalty_mode: PenaltyMode,
    pub adam: AdamConfig,
    pub epochs: usize,
    /// Instances whose gradients are averaged per optimizer step.
    pub batch_size: usize,
    pub seed: u64,
    /// Directory for `best.ckpt` / `last.ckpt`; nothing is written if unset.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta_target: 0.0,
            beta: 1.0,
            coupling: -1.0,
            sampler: SampleSource::Metropolis { sweeps: 3 },
            acceptance: AcceptanceRule::Metropolis,
            rloo_k: 2,
            penalty_weight: 1.0,
            penalty_mode: PenaltyMode::Deterministic,
            adam: AdamConfig::default(),
            epochs: 300,
            batch_size: 1,
            seed: 0,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_target > -1.0 && self.eta_target < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta_target must lie in (-1, 1), got {}",
                self.eta_target
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if self.rloo_k < 2 {
            return Err(Error::InvalidParameter("rloo_k must be at least 2".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be at least 1".into()));
        }
        if let SampleSource::Metropolis { sweeps: 0 } = self.sampler {
            return Err(Error::InvalidParameter("sweeps must be at least 1".into()));
        }
        if !(self.penalty_weight >= 0.0 && self.penalty_weight.is_finite()) {
            return Err(Error::InvalidParameter("penalty_weight must be non-negative".into()));
        }
        Ok(())
    }

    /// Target sampling fraction `(1 + η) / 2`.
    pub fn target_fraction(&self) -> f64 {
        (1.0 + self.eta_target) / 2.0
    }

    pub fn ising_params(&self, g: &Graph, field: Vec<f64>) -> Result<IsingParams> {
        IsingParams::new(self.beta, Coupling::from_graph(g, self.coupling), field)
    }
}

/// Telemetry of one estimator step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Task losses of the `K` draws (before any stochastic penalty).
    pub losses: Vec<f64>,
    pub penalty: f64,
    /// Mean fraction of `+1` spins over the draws.
    pub realized_fraction: f64,
    pub task_grad_norm: f64,
    pub penalty_grad_norm: f64,
}

impl StepReport {
    pub fn mean_loss(&self) -> f64 {
        self.losses.iter().sum::<f64>() / self.losses.len().max(1) as f64
    }
}

/// Draws one state from the Ising model.
pub fn draw_state(
    g: &Graph,
    coloring: &Coloring,
    params: &IsingParams,
    source: SampleSource,
    rule: AcceptanceRule,
    seed: u64,
) -> Result<SpinState> {
    match source {
        SampleSource::Metropolis { sweeps } => MetropolisSampler::new(g, coloring)?
            .with_rule(rule)
            .sample(params, sweeps, seed),
        SampleSource::Exact => {
            let mut p = params.clone();
            if rule == AcceptanceRule::DoubledBeta {
                p.beta *= 2.0;
            }
            let d = exact_distribution(g, &p)?;
            Ok(d.sampler().draw(&mut rng::seeded_rng(seed)))
        }
    }
}

/// Upstream `∂/∂h` of the leave-one-out estimator for the given draws.
pub fn rloo_upstream(beta: f64, states: &[SpinState], losses: &[f64]) -> Result<Vec<f64>> {
    let k = states.len();
    if k < 2 || losses.len() != k {
        return Err(Error::InvalidParameter(
            "leave-one-out needs at least two states with one loss each".into(),
        ));
    }
    let n = states[0].len();
    let mut up = vec![0.0; n];
    for (i, (x, &l)) in states.iter().zip(losses).enumerate() {
        let others: f64 = losses
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &o)| o)
            .sum();
        let baseline = others / (k - 1) as f64;
        let w = beta * (l - baseline) / k as f64;
        if w != 0.0 {
            for (u, &s) in up.iter_mut().zip(x.as_slice()) {
                *u += w * s as f64;
            }
        }
    }
    Ok(up)
}

/// Penalty `w (η̃ - η)²` with `η̃ = mean_i tanh(β h_i)` and its upstream `∂/∂h`.
pub fn magnetization_penalty(field: &[f64], beta: f64, eta_target: f64, weight: f64) -> (f64, Vec<f64>) {
    let n = field.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let t: Vec<f64> = field.iter().map(|&h| (beta * h).tanh()).collect();
    let diff = t.iter().sum::<f64>() / n as f64 - eta_target;
    let up = t
        .iter()
        .map(|ti| weight * 2.0 * diff * beta * (1.0 - ti * ti) / n as f64)
        .collect();
    (weight * diff * diff, up)
}

/// Estimated gradient of `E[ℓ] + penalty` for one instance.
pub fn rloo_step(
    task: &dyn Task,
    params: &FieldNetParams,
    net: &FieldNetConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(GradientBundle, StepReport)> {
    let g = task.graph();
    let out = forward(g, params, net)?;
    if out.field.iter().any(|h| !h.is_finite()) {
        return Err(Error::NonFinite("predicted field".into()));
    }
    let ising = cfg.ising_params(g, out.field.clone())?;

    let draws: Vec<(SpinState, f64)> = (0..cfg.rloo_k)
        .into_par_iter()
        .map(|k| {
            let x = draw_state(
                g,
                task.coloring(),
                &ising,
                cfg.sampler,
                cfg.acceptance,
                rng::hash_key(seed, &[k as u64]),
            )?;
            let l = task.loss(&x);
            if !l.is_finite() {
                return Err(Error::NonFinite(format!("task loss {l} for draw {k}")));
            }
            Ok((x, l))
        })
        .collect::<Result<_>>()?;
    let (states, losses): (Vec<_>, Vec<_>) = draws.into_iter().unzip();

    let mut objective = losses.clone();
    let mut penalty = 0.0;
    if cfg.penalty_mode == PenaltyMode::Stochastic {
        for (o, x) in objective.iter_mut().zip(&states) {
            let d = eta_stochastic(g, &ising, x)? - cfg.eta_target;
            let p = cfg.penalty_weight * d * d;
            *o += p;
            penalty += p / states.len() as f64;
        }
    }
    let up_task = rloo_upstream(cfg.beta, &states, &objective)?;
    let task_grad = backward(&out.cache, params, &up_task)?;
    let mut grad = task_grad.clone();
    let mut penalty_grad_norm = 0.0;
    if cfg.penalty_mode == PenaltyMode::Deterministic && cfg.penalty_weight > 0.0 {
        let (p, up_pen) =
            magnetization_penalty(&out.field, cfg.beta, cfg.eta_target, cfg.penalty_weight);
        penalty = p;
        let pen_grad = backward(&out.cache, params, &up_pen)?;
        penalty_grad_norm = pen_grad.norm();
        grad.add_scaled(&pen_grad, 1.0);
    }

    let realized_fraction =
        states.iter().map(|x| x.fraction_up()).sum::<f64>() / states.len() as f64;
    Ok((
        grad,
        StepReport {
            losses,
            penalty,
            realized_fraction,
            task_grad_norm: task_grad.norm(),
            penalty_grad_norm,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "val",
        }
    }
}

/// One metrics CSV row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub split: Split,
    pub mean_task_loss: f64,
    pub mean_penalty: f64,
    pub mean_sampling_fraction: f64,
}

impl EpochMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.epoch,
            self.split.as_str(),
            self.mean_task_loss,
            self.mean_penalty,
            self.mean_sampling_fraction
        )
    }
}

pub const METRICS_HEADER: &str = "epoch,split,mean_task_loss,mean_penalty,mean_sampling_fraction";

pub fn metrics_csv(rows: &[EpochMetrics]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub params: FieldNetParams,
    /// Parameters with the lowest validation objective (last ones without a validation set).
    pub best_params: FieldNetParams,
    pub best_validation: f64,
    pub metrics: Vec<EpochMetrics>,
    pub adam: AdamState,
}

/// Evaluates the current model on `tasks` with one draw per instance.
pub fn evaluate<T: Task>(
    tasks: &[T],
    params: &FieldNetParams,
    net: &FieldNetConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let rows: Vec<(f64, f64, f64)> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let g = t.graph();
            let out = forward(g, params, net)?;
            let (pen, _) =
                magnetization_penalty(&out.field, cfg.beta, cfg.eta_target, cfg.penalty_weight);
            let ising = cfg.ising_params(g, out.field)?;
            let x = draw_state(
                g,
                t.coloring(),
                &ising,
                cfg.sampler,
                cfg.acceptance,
                rng::hash_key(seed, &[i as u64]),
            )?;
            Ok((t.loss(&x), pen, x.fraction_up()))
        })
        .collect::<Result<_>>()?;
    let n = rows.len().max(1) as f64;
    Ok(rows.iter().fold((0.0, 0.0, 0.0), |a, r| {
        (a.0 + r.0 / n, a.1 + r.1 / n, a.2 + r.2 / n)
    }))
}

/// Per-instance (or mini-batch) Adam training with best-validation tracking.
///
/// Pass a checkpoint carrying [`TrainingState`] in `resume` to continue an
/// interrupted run; its epoch counter and optimizer moments are restored.
pub fn train<T: Task>(
    train_set: &[T],
    val_set: &[T],
    net: &FieldNetConfig,
    init: FieldNetParams,
    cfg: &TrainConfig,
    resume: Option<&Checkpoint>,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    net.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidParameter("training set is empty".into()));
    }
    let (mut params, mut adam, start, mut best_validation) = match resume {
        Some(Checkpoint {
            params,
            training: Some(t),
            ..
        }) => (params.clone(), t.adam.clone(), t.epoch as usize, t.best_validation),
        Some(c) => (c.params.clone(), AdamState::new(&c.params), 0, f64::INFINITY),
        None => {
            let a = AdamState::new(&init);
            (init, a, 0, f64::INFINITY)
        }
    };
    if !params.matches_config(net) {
        return Err(Error::InvalidParameter(
            "initial parameters do not match the field-net config".into(),
        ));
    }
    let mut best_params = params.clone();
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
        if resume.is_none() {
            write_checkpoint(&dir.join("best.ckpt"), &Checkpoint::new(net.clone(), params.clone()))?;
        }
    }
    let mut metrics = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in start..cfg.epochs {
        let epoch_seed = rng::hash_key(cfg.seed, &[epoch as u64]);
        order.sort_unstable();
        order.shuffle(&mut rng::seeded_rng(epoch_seed));

        let (mut loss_sum, mut pen_sum, mut frac_sum) = (0.0, 0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            let mut acc = params.zeros_like();
            for &i in batch {
                let step_seed = rng::hash_key(epoch_seed, &[i as u64, 1]);
                let (grad, report) = rloo_step(&train_set[i], &params, net, cfg, step_seed)?;
                acc.add_scaled(&grad, 1.0 / batch.len() as f64);
                loss_sum += report.mean_loss();
                pen_sum += report.penalty;
                frac_sum += report.realized_fraction;
            }
            adam_update(&mut params, &acc, &mut adam, &cfg.adam)?;
        }
        let n = train_set.len() as f64;
        let row = EpochMetrics {
            epoch: epoch + 1,
            split: Split::Train,
            mean_task_loss: loss_sum / n,
            mean_penalty: pen_sum / n,
            mean_sampling_fraction: frac_sum / n,
        };
        on_epoch(&row);
        metrics.push(row);

        let objective = if val_set.is_empty() {
            row.mean_task_loss + row.mean_penalty
        } else {
            let (l, p, f) = evaluate(val_set, &params, net, cfg, rng::hash_key(epoch_seed, &[2]))?;
            let row = EpochMetrics {
                epoch: epoch + 1,
                split: Split::Validation,
                mean_task_loss: l,
                mean_penalty: p,
                mean_sampling_fraction: f,
            };
            on_epoch(&row);
            metrics.push(row);
            l + p
        };
        if !val_set.is_empty() && objective < best_validation {
            best_validation = objective;
            best_params = params.clone();
            if let Some(dir) = &cfg.checkpoint_dir {
                write_checkpoint(&dir.join("best.ckpt"), &Checkpoint::new(net.clone(), params.clone()))?;
            }
        }
        if let Some(dir) = &cfg.checkpoint_dir {
            let last = Checkpoint {
                config: net.clone(),
                params: params.clone(),
                training: Some(TrainingState {
                    epoch: (epoch + 1) as u64,
                    best_validation,
                    adam: adam.clone(),
                }),
            };
            write_checkpoint(&dir.join("last.ckpt"), &last)?;
        }
    }
    if val_set.is_empty() {
        best_params = params.clone();
    }
    Ok(TrainOutcome {
        params,
        best_params,
        best_validation,
        metrics,
        adam,
    })
}

/// Convenience: initialize parameters and train.
pub fn train_from_scratch<T: Task>(
    train_set: &[T],
    val_set: &[T],
    net: &FieldNetConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let init = field_net::init_params(net, rng::hash_key(cfg.seed, &[u64::MAX]))?;
    train(train_set, val_set, net, init, cfg, None, |_| {})
}
