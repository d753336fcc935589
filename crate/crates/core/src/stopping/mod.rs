//! g-evaluations and optimal stopping on a lattice.

mod engine;
mod times;

pub use engine::{
    dominating_supermartingale_gap, enumeration_oracle, g_evaluate, optimal_stop,
    EnumerationResult, OptimalStop, RewardProcess,
};
pub use times::{enumerate_stopping_times, LatticeStoppingTime, ENUMERATION_CAP_LOG2};
