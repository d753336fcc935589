//! Discrete approximations of the forward diffusion
//! `dX = b(t, X) dt + σ(t, X) dB`.

mod paths;
mod tree;

pub use paths::{
    ks_distance_to_lattice, moment_check, simulate_forward, MomentReport, PathEnsemble, Scheme,
};
pub use tree::{build_lattice, NodeId, RecombiningLattice, Structure, Transition};
