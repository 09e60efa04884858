//! Color-parallel Metropolis-Hastings sweeps.
//!
//! A sweep visits the color classes in order. Nodes inside one class share
//! no edges, so their flip decisions only read spins of other classes and
//! can be taken simultaneously. Each decision draws its uniform from a
//! counter keyed by `(seed, node, sweep)`, making serial and parallel runs
//! bit-identical.

use rayon::prelude::*;

use super::{IsingParams, SpinState};
use crate::coloring::Coloring;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// How the flip acceptance probability is computed from `ΔE`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AcceptanceRule {
    /// Accept with `min(1, exp(-beta ΔE))`; stationary at `exp(-beta E)`.
    #[default]
    Metropolis,
    /// Accept with `min(1, exp(-2 beta ΔE))`; equivalent to running
    /// [`AcceptanceRule::Metropolis`] at inverse temperature `2 beta`.
    DoubledBeta,
}

impl AcceptanceRule {
    #[inline]
    fn beta_scale(self) -> f64 {
        match self {
            AcceptanceRule::Metropolis => 1.0,
            AcceptanceRule::DoubledBeta => 2.0,
        }
    }
}

/// Key slot reserved for the initial spin draw.
const INIT_KEY: u64 = u64::MAX;

/// Classes smaller than this are updated on the calling thread.
const PARALLEL_MIN_CLASS: usize = 2048;

#[derive(Clone, Debug)]
pub struct MetropolisSampler<'g> {
    graph: &'g Graph,
    coloring: &'g Coloring,
    rule: AcceptanceRule,
    parallel: bool,
}

impl<'g> MetropolisSampler<'g> {
    /// Fails if `coloring` is not a proper coloring of `graph`.
    pub fn new(graph: &'g Graph, coloring: &'g Coloring) -> Result<Self> {
        coloring.ensure_proper(graph)?;
        Ok(Self {
            graph,
            coloring,
            rule: AcceptanceRule::default(),
            parallel: true,
        })
    }

    pub fn with_rule(mut self, rule: AcceptanceRule) -> Self {
        self.rule = rule;
        self
    }

    /// Enables or disables data-parallel class updates.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    /// Uniformly random initial spins.
    pub fn initial_state(&self, seed: u64) -> SpinState {
        let spins = (0..self.graph.num_nodes())
            .map(|v| {
                if rng::uniform(seed, &[v as u64, INIT_KEY]) < 0.5 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        SpinState::from_raw(spins)
    }

    /// Draws one approximate sample after `sweeps` full sweeps.
    pub fn sample(&self, params: &IsingParams, sweeps: usize, seed: u64) -> Result<SpinState> {
        self.run(params, sweeps, seed, |_, _| {})
    }

    /// Runs one chain, calling `on_sweep(t, state)` after every sweep `t = 1..=sweeps`.
    pub fn run<F>(
        &self,
        params: &IsingParams,
        sweeps: usize,
        seed: u64,
        mut on_sweep: F,
    ) -> Result<SpinState>
    where
        F: FnMut(usize, &SpinState),
    {
        params.check(self.graph)?;
        if sweeps == 0 {
            return Err(Error::InvalidParameter("sweeps must be at least 1".into()));
        }
        let mut state = self.initial_state(seed);
        let mut scratch = Vec::new();
        for t in 0..sweeps {
            self.sweep(params, &mut state, seed, t as u64, &mut scratch);
            on_sweep(t + 1, &state);
        }
        Ok(state)
    }

    fn sweep(
        &self,
        params: &IsingParams,
        state: &mut SpinState,
        seed: u64,
        sweep: u64,
        scratch: &mut Vec<bool>,
    ) {
        let beta = params.beta * self.rule.beta_scale();
        for class in self.coloring.classes() {
            let spins = &state.0;
            let decide = |v: usize| -> bool {
                let x = spins[v] as f64;
                let heff = params.field[v] + params.coupling.neighbor_sum(self.graph, spins, v);
                let delta = 2.0 * x * heff;
                let r = rng::uniform(seed, &[v as u64, sweep]);
                delta < 0.0 || (-beta * delta).exp() > r
            };
            scratch.clear();
            if self.parallel && class.len() >= PARALLEL_MIN_CLASS {
                class.par_iter().map(|&v| decide(v)).collect_into_vec(scratch);
            } else {
                scratch.extend(class.iter().map(|&v| decide(v)));
            }
            for (&v, &flip) in class.iter().zip(scratch.iter()) {
                if flip {
                    state.0[v] = -state.0[v];
                }
            }
        }
    }
}

/// One Metropolis-Hastings draw from the Ising model on `g`.
pub fn mh_sample(
    g: &Graph,
    c: &Coloring,
    params: &IsingParams,
    sweeps: usize,
    seed: u64,
) -> Result<SpinState> {
    MetropolisSampler::new(g, c)?.sample(params, sweeps, seed)
}
