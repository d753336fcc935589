//! Numerical laboratory for quadratic reflected backward SDEs.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: generators with their structural constants, parameter sets,
//!   Markovian model data, the explicit a priori constants and a grid
//!   Legendre–Fenchel dual.
//! - [`lattice`]: recombining binomial/trinomial approximations of the forward
//!   diffusion and Euler–Maruyama path ensembles.
//! - [`rbsde`]: reflected backward induction on a lattice, the classical Snell
//!   envelope, the Cole–Hopf oracle for the pure quadratic driver and the
//!   a priori bound check.
//! - [`stopping`]: g-evaluations, optimal stopping and a brute-force
//!   enumeration oracle.
//! - [`pde`]: finite differences for the obstacle problem of the associated
//!   semilinear parabolic PDE.
//! - [`verify`]: named experiments producing [`verify::PropertyReport`]s.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod catalog;
pub mod error;
pub mod lattice;
pub mod model;
pub mod pde;
pub mod rbsde;
pub mod stopping;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::{build_lattice, simulate_forward, PathEnsemble, RecombiningLattice, Structure};
pub use model::{
    apriori_constants, phi_ode, AprioriConstants, FenchelDual, GeneratorSpec, MarkovModel,
    ParameterSet, ZShape,
};
pub use pde::{solve_obstacle_pde, PdeGrid, PdeScheme, PdeSolution};
pub use rbsde::{cole_hopf_oracle, snell_envelope, solve_bsde, solve_rbsde, DiscreteSolution};
pub use stopping::{g_evaluate, optimal_stop, LatticeStoppingTime, RewardProcess};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
