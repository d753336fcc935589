//! Domain vocabulary: generators, parameter sets, Markovian model data,
//! a priori constants and the numerical Fenchel dual.

mod apriori;
mod fenchel;
mod generator;
mod markov;
mod params;

pub use apriori::{apriori_constants, phi_ode, AprioriConstants};
pub use fenchel::{conjugacy_check, fenchel_dual, FenchelDual};
pub use generator::{GeneratorAudit, GeneratorFn, GeneratorSpec, ZShape};
pub use markov::MarkovModel;
pub use params::{ParameterSet, TerminalFn};
