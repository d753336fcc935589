//! Reflected backward induction on a recombining lattice.

mod bound;
mod oracle;
mod solver;

pub use bound::{apriori_bound_check, log_exp_future_sup};
pub use oracle::{cole_hopf_oracle, snell_envelope};
pub use solver::{flat_off_residual, solve_bsde, solve_rbsde, DiscreteSolution, SolutionSummary};

pub(crate) use solver::{check_monotone, one_step};
