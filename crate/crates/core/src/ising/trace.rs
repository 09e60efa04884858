use std::fmt::Write as _;

use rayon::prelude::*;

use super::energy::energy_unchecked;
use super::{IsingParams, MetropolisSampler};
use crate::coloring::Coloring;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub sweep: usize,
    pub mean_energy: f64,
    pub std_energy: f64,
}

/// Energy after every sweep, aggregated over independent chains.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTrace {
    pub rows: Vec<TraceRow>,
}

impl EnergyTrace {
    /// `sweep,mean_energy,std_energy` CSV with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep,mean_energy,std_energy\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.sweep, r.mean_energy, r.std_energy);
        }
        out
    }

    /// Mean energy after sweep `t` (1-based).
    pub fn mean_at(&self, t: usize) -> f64 {
        self.rows[t - 1].mean_energy
    }
}

/// Runs `replicas` chains for `sweeps` sweeps and records the energy after each sweep.
pub fn energy_trace(
    g: &Graph,
    c: &Coloring,
    p: &IsingParams,
    sweeps: usize,
    replicas: usize,
    seed: u64,
) -> Result<EnergyTrace> {
    if replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be at least 1".into()));
    }
    let sampler = MetropolisSampler::new(g, c)?;
    let per_chain: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut energies = Vec::with_capacity(sweeps);
            sampler.run(p, sweeps, rng::derive_seed(seed, r as u64), |_, x| {
                energies.push(energy_unchecked(g, p, x.as_slice()))
            })?;
            Ok(energies)
        })
        .collect::<Result<_>>()?;

    let rows = (0..sweeps)
        .map(|t| {
            let vals = per_chain.iter().map(|e| e[t]);
            let mean = vals.clone().sum::<f64>() / replicas as f64;
            let var = if replicas > 1 {
                vals.map(|v| (v - mean).powi(2)).sum::<f64>() / (replicas - 1) as f64
            } else {
                0.0
            };
            TraceRow {
                sweep: t + 1,
                mean_energy: mean,
                std_energy: var.sqrt(),
            }
        })
        .collect();
    Ok(EnergyTrace { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::greedy_color;

    #[test]
    fn csv_shape() {
        let g = Graph::grid(4, 4);
        let c = greedy_color(&g);
        let p = IsingParams::zero_field(1.0, -1.0, 16).unwrap();
        let t = energy_trace(&g, &c, &p, 5, 3, 1).unwrap();
        let csv = t.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "sweep,mean_energy,std_energy");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("1,"));
    }

    #[test]
    fn infinite_temperature_fluctuates_around_zero() {
        // uniform distribution: every pair term averages out, E[E] = 0
        let g = Graph::grid(20, 20);
        let c = greedy_color(&g);
        let p = IsingParams::zero_field(1e-9, 1.0, 400).unwrap();
        let t = energy_trace(&g, &c, &p, 20, 64, 3).unwrap();
        let overall: f64 = t.rows.iter().map(|r| r.mean_energy).sum::<f64>() / 20.0;
        // std of the energy of a uniform state is sqrt(#edges) = sqrt(760)
        // near-zero beta accepts every flip, so each chain only alternates x and -x
        let se = (760.0f64).sqrt() / 8.0;
        assert!(overall.abs() < 5.0 * se, "{overall}");
    }

    #[test]
    fn zero_replicas_rejected() {
        let g = Graph::path(3);
        let c = greedy_color(&g);
        let p = IsingParams::zero_field(1.0, 1.0, 3).unwrap();
        assert!(energy_trace(&g, &c, &p, 3, 0, 0).is_err());
    }
}
