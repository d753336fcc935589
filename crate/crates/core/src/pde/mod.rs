//! Finite differences for the obstacle problem
//! `min{u − l, −∂_t u − ℒu − f(t, x, u, σ ∂_x u)} = 0`, `u(T, ·) = h`.

mod checks;
mod grid;
mod solver;
mod tridiag;

pub use checks::{growth_check, pde_residual, scheme_comparison, GrowthReport};
pub use grid::PdeGrid;
pub use solver::{solve_obstacle_pde, PdeScheme, PdeSolution, SCHEME_TOLERANCE};
pub use tridiag::solve_tridiagonal;
