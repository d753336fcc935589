#![allow(dead_code)]

use std::sync::Arc;

use qrbsde_core::catalog::space_time_fn;
use qrbsde_core::{build_lattice, GeneratorSpec, MarkovModel, RecombiningLattice, Structure};

pub fn model(
    drift: &str,
    sigma: &str,
    sigma_star: f64,
    terminal: impl Fn(f64) -> f64 + Send + Sync + 'static,
    obstacle: &str,
    g: GeneratorSpec,
) -> MarkovModel {
    MarkovModel::new(
        space_time_fn(drift).unwrap(),
        space_time_fn(sigma).unwrap(),
        Arc::new(terminal),
        space_time_fn(obstacle).unwrap(),
        g,
        1.0,
        1.0,
        sigma_star,
        1.0,
        1.0,
    )
    .unwrap()
}

/// Driftless binomial lattice with unit volatility on `[0, 1]`.
pub fn binomial(n: usize, x0: f64) -> RecombiningLattice {
    let m = model(
        "zero",
        "const:c=1",
        1.0,
        |x| x,
        "none",
        GeneratorSpec::zero(),
    );
    build_lattice(&m, 0.0, x0, n, Structure::Binomial).unwrap()
}

pub fn per_node(lat: &RecombiningLattice, f: impl Fn(usize, f64) -> f64) -> Vec<Vec<f64>> {
    (0..=lat.n_steps())
        .map(|i| lat.states(i).iter().map(|&x| f(i, x)).collect())
        .collect()
}

/// Deterministic pseudo-random numbers in `[0, 1)`.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}
