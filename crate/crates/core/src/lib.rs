//! Task-driven graph subsampling with learned-field Ising models.
//!
//! A graph neural network predicts a per-node external field `h`; a
//! color-parallel Metropolis-Hastings sampler draws a `±1` selection from
//! the resulting Ising model; a leave-one-out score-function estimator
//! trains the network against any black-box loss of the selection.
//!
//! Two applications are included: choosing sparsity patterns for sparse
//! approximate inverses ([`sai`]) and vertex subsampling for triangle mesh
//! sparsification ([`mesh`]).

pub mod coloring;
pub mod error;
pub mod field_net;
pub mod graph;
pub mod ising;
pub mod mesh;
pub mod rng;
pub mod sai;
pub mod trainer;

pub use coloring::{greedy_color, Coloring};
pub use error::{Error, Result};
pub use graph::Graph;
pub use ising::{Coupling, IsingParams, SpinState};
