use super::{IsingParams, SpinState};
use crate::error::{Error, Result};
use crate::graph::Graph;

fn check_state(g: &Graph, x: &SpinState) -> Result<()> {
    if x.len() != g.num_nodes() {
        return Err(Error::SizeMismatch {
            what: "spin state length",
            expected: g.num_nodes(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Ising energy, each undirected edge counted once.
pub fn energy(g: &Graph, p: &IsingParams, x: &SpinState) -> Result<f64> {
    p.check(g)?;
    check_state(g, x)?;
    Ok(energy_unchecked(g, p, x.as_slice()))
}

pub(crate) fn energy_unchecked(g: &Graph, p: &IsingParams, spins: &[i8]) -> f64 {
    let pair: f64 = g
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(i, j))| p.coupling.on_edge(e) * (spins[i] * spins[j]) as f64)
        .sum();
    let field: f64 = p
        .field
        .iter()
        .zip(spins)
        .map(|(&h, &s)| h * s as f64)
        .sum();
    -pair - field
}

/// `h_i + sum_j J_ij x_j`.
pub fn effective_field(g: &Graph, p: &IsingParams, x: &SpinState, i: usize) -> Result<f64> {
    p.check(g)?;
    check_state(g, x)?;
    g.check_node(i)?;
    Ok(p.field[i] + p.coupling.neighbor_sum(g, x.as_slice(), i))
}

/// Energy change from flipping spin `i`: `2 x_i h_eff_i`.
pub fn delta_energy(g: &Graph, p: &IsingParams, x: &SpinState, i: usize) -> Result<f64> {
    let heff = effective_field(g, p, x, i)?;
    Ok(2.0 * x.get(i) as f64 * heff)
}
