//! Exact Boltzmann distribution by full enumeration (test oracle).

use rand::Rng;

use super::energy::energy_unchecked;
use super::{IsingParams, SpinState};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Largest graph the enumeration oracle accepts.
pub const MAX_ENUMERATION_NODES: usize = 20;

/// Probabilities of all `2^n` configurations, indexed as in [`SpinState::to_index`].
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    num_nodes: usize,
    probabilities: Vec<f64>,
    log_partition: f64,
}

impl ExactDistribution {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `log Z` for `Z = sum_x exp(-beta E(x))`.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn probability(&self, x: &SpinState) -> f64 {
        self.probabilities[x.to_index()]
    }

    /// Exact `E[x_i]` for every node.
    pub fn local_magnetization(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.num_nodes];
        for (idx, &p) in self.probabilities.iter().enumerate() {
            for (i, mi) in m.iter_mut().enumerate() {
                *mi += if idx >> i & 1 == 1 { p } else { -p };
            }
        }
        m
    }

    /// Exact average magnetization `(1/n) sum_i E[x_i]`.
    pub fn magnetization(&self) -> f64 {
        let m = self.local_magnetization();
        m.iter().sum::<f64>() / self.num_nodes.max(1) as f64
    }

    /// Exact expectation of an arbitrary function of the state.
    pub fn expectation<F: FnMut(&SpinState) -> f64>(&self, mut f: F) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(idx, &p)| p * f(&SpinState::from_index(idx, self.num_nodes)))
            .sum()
    }

    /// Total-variation distance to an empirical histogram over state indices.
    pub fn total_variation(&self, counts: &[u64]) -> f64 {
        let total: u64 = counts.iter().sum();
        0.5 * self
            .probabilities
            .iter()
            .zip(counts)
            .map(|(&p, &c)| (p - c as f64 / total as f64).abs())
            .sum::<f64>()
    }

    pub fn sampler(&self) -> ExactSampler<'_> {
        let mut cdf = Vec::with_capacity(self.probabilities.len());
        let mut acc = 0.0;
        for &p in &self.probabilities {
            acc += p;
            cdf.push(acc);
        }
        ExactSampler { dist: self, cdf }
    }
}

/// Inverse-CDF sampler over an [`ExactDistribution`].
#[derive(Clone, Debug)]
pub struct ExactSampler<'d> {
    dist: &'d ExactDistribution,
    cdf: Vec<f64>,
}

impl ExactSampler<'_> {
    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().unwrap();
        let u = rng.gen::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        // round-off can leave u above the last entry
        let mut idx = idx.min(self.cdf.len() - 1);
        while self.dist.probabilities[idx] == 0.0 && idx > 0 {
            idx -= 1;
        }
        idx
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SpinState {
        SpinState::from_index(self.draw_index(rng), self.dist.num_nodes)
    }
}

/// Enumerates every configuration of `g` (at most [`MAX_ENUMERATION_NODES`] nodes).
pub fn exact_distribution(g: &Graph, p: &IsingParams) -> Result<ExactDistribution> {
    p.check(g)?;
    let n = g.num_nodes();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::TooLargeForEnumeration(n));
    }
    let count = 1usize << n;
    let mut spins = vec![-1i8; n];
    let mut log_w = Vec::with_capacity(count);
    for idx in 0..count {
        for (i, s) in spins.iter_mut().enumerate() {
            *s = if idx >> i & 1 == 1 { 1 } else { -1 };
        }
        log_w.push(-p.beta * energy_unchecked(g, p, &spins));
    }
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_w.iter().map(|&l| (l - max).exp()).sum();
    let log_partition = max + sum.ln();
    let probabilities = log_w.iter().map(|&l| (l - log_partition).exp()).collect();
    Ok(ExactDistribution {
        num_nodes: n,
        probabilities,
        log_partition,
    })
}

/// Draws a single configuration from `d`.
pub fn exact_sample(d: &ExactDistribution, seed: u64) -> SpinState {
    d.sampler().draw(&mut rng::seeded_rng(seed))
}
