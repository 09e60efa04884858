//! Ising model on a [`Graph`]: energies, Metropolis-Hastings sampling,
//! magnetization estimates and an exact enumeration oracle for tiny graphs.
//!
//! Spins are `+1` (node selected) or `-1` (node dropped). The energy of a
//! configuration `x` is
//!
//! ```text
//! E(x) = -sum_{(i,j) in edges} J_ij x_i x_j - sum_i h_i x_i
//! ```
//!
//! and states are distributed as `p(x) ∝ exp(-beta E(x))`.

mod energy;
mod exact;
mod magnetization;
mod sampler;
mod state;
mod trace;

pub use energy::{delta_energy, effective_field, energy};
pub use exact::{exact_distribution, exact_sample, ExactDistribution, ExactSampler};
pub use magnetization::{eta_deterministic, eta_stochastic, mean_field_solve, MeanField};
pub use sampler::{mh_sample, AcceptanceRule, MetropolisSampler};
pub use state::SpinState;
pub use trace::{energy_trace, EnergyTrace, TraceRow};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Pairwise interaction strength.
#[derive(Clone, Debug, PartialEq)]
pub enum Coupling {
    /// Same `J` on every edge.
    Uniform(f64),
    /// One `J_ij` per undirected edge, ordered as [`Graph::edges`].
    PerEdge(Vec<f64>),
}

impl Coupling {
    /// Uses the graph's own per-edge couplings when present, otherwise `fallback`.
    pub fn from_graph(g: &Graph, fallback: f64) -> Self {
        match g.edge_coupling() {
            Some(j) => Coupling::PerEdge(j.to_vec()),
            None => Coupling::Uniform(fallback),
        }
    }

    #[inline]
    pub fn on_edge(&self, edge: usize) -> f64 {
        match self {
            Coupling::Uniform(j) => *j,
            Coupling::PerEdge(js) => js[edge],
        }
    }

    /// `sum_j J_ij x_j` over the neighbors of `v`.
    #[inline]
    pub(crate) fn neighbor_sum(&self, g: &Graph, spins: &[i8], v: usize) -> f64 {
        match self {
            Coupling::Uniform(j) => {
                let s: i32 = g.neighbors(v).iter().map(|&u| spins[u] as i32).sum();
                j * s as f64
            }
            Coupling::PerEdge(js) => g
                .neighbors(v)
                .iter()
                .zip(g.neighbor_edges(v))
                .map(|(&u, &e)| js[e] * spins[u] as f64)
                .sum(),
        }
    }

    /// `sum_j J_ij m_j` for real-valued (mean) spins.
    pub(crate) fn neighbor_sum_real(&self, g: &Graph, m: &[f64], v: usize) -> f64 {
        g.neighbors(v)
            .iter()
            .zip(g.neighbor_edges(v))
            .map(|(&u, &e)| self.on_edge(e) * m[u])
            .sum()
    }
}

/// Inverse temperature, couplings and external field of an Ising model.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingParams {
    pub beta: f64,
    pub coupling: Coupling,
    pub field: Vec<f64>,
}

impl IsingParams {
    pub fn new(beta: f64, coupling: Coupling, field: Vec<f64>) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self {
            beta,
            coupling,
            field,
        })
    }

    /// Uniform coupling `j` and zero field on `n` nodes.
    pub fn zero_field(beta: f64, j: f64, n: usize) -> Result<Self> {
        Self::new(beta, Coupling::Uniform(j), vec![0.0; n])
    }

    /// Checks that the parameters fit `g`.
    pub fn check(&self, g: &Graph) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        if self.field.len() != g.num_nodes() {
            return Err(Error::SizeMismatch {
                what: "field length",
                expected: g.num_nodes(),
                got: self.field.len(),
            });
        }
        if let Coupling::PerEdge(js) = &self.coupling {
            if js.len() != g.num_edges() {
                return Err(Error::SizeMismatch {
                    what: "per-edge couplings",
                    expected: g.num_edges(),
                    got: js.len(),
                });
            }
        }
        Ok(())
    }
}
