use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::space_time_fn;
use crate::error::Result;
use crate::lattice::RecombiningLattice;
use crate::model::{GeneratorSpec, ParameterSet, ZShape};
use crate::rbsde::solve_rbsde;

use super::report::{PropertyReport, ReportKind};

const Y_PROBES: [f64; 9] = [-4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0];
const Z_PROBES: [f64; 9] = [-3.0, -1.5, -0.75, -0.25, 0.0, 0.25, 0.75, 1.5, 3.0];

/// Samples the hypotheses of the comparison theorem on the lattice nodes:
/// `ξ₁ <= ξ₂`, `L₁ <= L₂`, `f₁ <= f₂` on a `(y, z)` probe grid, one generator
/// convex or concave in `z`, and `κ dt < 1` for both. Returns the first
/// violated hypothesis.
pub fn comparison_precondition(
    lat: &RecombiningLattice,
    p1: &ParameterSet,
    p2: &ParameterSet,
) -> Option<String> {
    let n = lat.n_steps();
    for &x in lat.states(n) {
        if (p1.terminal)(x) > (p2.terminal)(x) {
            return Some(format!("terminal values not ordered at x = {x}"));
        }
    }
    let stride = (n / 20).max(1);
    for i in 0..=n {
        let t = lat.times()[i];
        for &x in lat.states(i) {
            if (p1.obstacle)(t, x) > (p2.obstacle)(t, x) {
                return Some(format!("obstacles not ordered at (t, x) = ({t}, {x})"));
            }
            if i % stride != 0 {
                continue;
            }
            for &y in &Y_PROBES {
                for &z in &Z_PROBES {
                    match (p1.generator.eval(t, x, y, z), p2.generator.eval(t, x, y, z)) {
                        (Ok(a), Ok(b)) if a <= b => {}
                        _ => {
                            return Some(format!(
                                "generators not ordered at (t, x, y, z) = ({t}, {x}, {y}, {z})"
                            ))
                        }
                    }
                }
            }
        }
    }
    if p1.generator.z_shape == ZShape::None && p2.generator.z_shape == ZShape::None {
        return Some("neither generator is convex or concave in z".into());
    }
    for g in [&p1.generator, &p2.generator] {
        if g.kappa * lat.dt() >= 1.0 {
            return Some(format!("kappa * dt = {} >= 1", g.kappa * lat.dt()));
        }
    }
    None
}

/// `max (Y¹ − Y²)⁺` over the lattice for ordered data.
pub fn comparison_experiment(
    lat: &RecombiningLattice,
    p1: &ParameterSet,
    p2: &ParameterSet,
) -> Result<PropertyReport> {
    let name = "comparison";
    let tol = 1e-12;
    if let Some(reason) = comparison_precondition(lat, p1, p2) {
        return Ok(PropertyReport::inconclusive(
            name,
            ReportKind::Exact,
            tol,
            reason,
        ));
    }
    let a = solve_rbsde(lat, p1)?;
    let b = solve_rbsde(lat, p2)?;
    let metric =
        a.y.iter()
            .flatten()
            .zip(b.y.iter().flatten())
            .map(|(y1, y2)| (y1 - y2).max(0.0))
            .fold(0.0, f64::max);
    Ok(
        PropertyReport::measured(name, ReportKind::Exact, metric, tol).with_detail(format!(
            "{} vs {}",
            p1.generator.label(),
            p2.generator.label()
        )),
    )
}

/// Deterministic family of ordered pairs `(p1, p2)` built around a put
/// payoff: strikes, terminal shifts, generator shifts and curvatures are
/// drawn so that `p1 <= p2` componentwise. Nonzero shifts are at least 0.05.
pub fn random_ordered_pairs(seed: u64, count: usize) -> Result<Vec<(ParameterSet, ParameterSet)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(0.05..0.5)
        }
    };
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let k1 = rng.gen_range(0.8..1.2);
        let k2 = k1 + shift(&mut rng);
        let dxi = shift(&mut rng);
        let gamma1 = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
        let df = shift(&mut rng);
        let (gamma2, lip) = if df > 0.0 && rng.gen_bool(0.5) {
            (gamma1 + 0.5, rng.gen_range(0.0..0.5))
        } else {
            (gamma1, 0.0)
        };
        let concave = rng.gen_bool(0.3);
        let (g1, g2) = if concave {
            (
                GeneratorSpec::neg_quadratic(gamma2)?.shifted(-df),
                GeneratorSpec::neg_quadratic(gamma1)?,
            )
        } else {
            (
                GeneratorSpec::quadratic(gamma1)?.shifted(-df),
                GeneratorSpec::lipschitz_quadratic(0.0, lip, gamma2, ZShape::Convex)?,
            )
        };
        let p1 = ParameterSet::new(
            Arc::new(move |x| (k1 - x).max(0.0)),
            space_time_fn(&format!("put:strike={k1}"))?,
            g1,
        );
        let p2 = ParameterSet::new(
            Arc::new(move |x| (k2 - x).max(0.0) + dxi),
            space_time_fn(&format!("put:strike={k2}"))?,
            g2,
        );
        pairs.push((p1, p2));
    }
    Ok(pairs)
}
