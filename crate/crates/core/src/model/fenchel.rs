use crate::error::{Error, Result};

use super::{GeneratorSpec, ZShape};

/// Legendre–Fenchel dual `f̂(t, x, y, q) = sup_z (q z + f(t, x, y, z))` of a
/// generator concave in `z`, evaluated by a sup over a uniform z-grid.
#[derive(Debug, Clone)]
pub struct FenchelDual {
    generator: GeneratorSpec,
    pub q_grid: Vec<f64>,
    pub z_grid_radius: f64,
    pub z_grid_step: f64,
}

fn uniform_grid(radius: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * radius / step).round() as usize;
    (0..=n).map(|k| -radius + k as f64 * step).collect()
}

impl FenchelDual {
    /// Dual on `q ∈ [-q_radius, q_radius]` with a z-grid of the given radius;
    /// both grids share `step`.
    pub fn new(generator: GeneratorSpec, q_radius: f64, z_radius: f64, step: f64) -> Result<Self> {
        if generator.z_shape != ZShape::Concave {
            return Err(Error::invalid(
                "generator",
                "Fenchel dual requires a generator concave in z",
            ));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid("step", format!("must be > 0 (got {step})")));
        }
        if !(z_radius >= step && q_radius >= 0.0) {
            return Err(Error::invalid(
                "radius",
                "grid radius must cover at least one step",
            ));
        }
        Ok(FenchelDual {
            generator,
            q_grid: uniform_grid(q_radius, step),
            z_grid_radius: z_radius,
            z_grid_step: step,
        })
    }

    fn sup(&self, t: f64, x: f64, y: f64, q: f64) -> Result<(f64, bool)> {
        let zs = uniform_grid(self.z_grid_radius, self.z_grid_step);
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (k, &z) in zs.iter().enumerate() {
            let v = q * z + self.generator.eval(t, x, y, z)?;
            if v > best {
                best = v;
                arg = k;
            }
        }
        Ok((best, arg == 0 || arg == zs.len() - 1))
    }

    /// Grid supremum; fails when it is attained on the grid boundary.
    pub fn value(&self, t: f64, x: f64, y: f64, q: f64) -> Result<f64> {
        let (v, boundary) = self.sup(t, x, y, q)?;
        if boundary {
            return Err(Error::BoundaryHit { q });
        }
        Ok(v)
    }

    /// Grid supremum, accepting boundary maximisers. Where the true dual is
    /// `+∞` this returns the finite value the grid caps it at.
    pub fn value_capped(&self, t: f64, x: f64, y: f64, q: f64) -> Result<f64> {
        Ok(self.sup(t, x, y, q)?.0)
    }

    pub fn generator(&self) -> &GeneratorSpec {
        &self.generator
    }
}

/// Single dual evaluation `f̂(t, x, y, q)` on a z-grid `[-radius, radius]`.
pub fn fenchel_dual(
    g: &GeneratorSpec,
    t: f64,
    x: f64,
    y: f64,
    q: f64,
    radius: f64,
    step: f64,
) -> Result<f64> {
    FenchelDual::new(g.clone(), 0.0, radius, step)?.value(t, x, y, q)
}

/// `max |f(t,x,y,z) − inf_q (f̂(t,x,y,q) − z q)|` over the samples, with the
/// infimum taken on the dual's q-grid.
pub fn conjugacy_check(
    g: &GeneratorSpec,
    dual: &FenchelDual,
    samples: &[(f64, f64, f64, f64)],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(t, x, y, z) in samples {
        let mut inf = f64::INFINITY;
        for &q in &dual.q_grid {
            inf = inf.min(dual.value_capped(t, x, y, q)? - z * q);
        }
        worst = worst.max((g.eval(t, x, y, z)? - inf).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn neg_quad(gamma: f64) -> GeneratorSpec {
        GeneratorSpec::neg_quadratic(gamma).unwrap()
    }

    #[test]
    fn dual_of_concave_quadratic() {
        let g = neg_quad(2.0);
        assert_abs_diff_eq!(
            fenchel_dual(&g, 0.0, 0.0, 0.0, 2.0, 5.0, 0.01).unwrap(),
            1.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            fenchel_dual(&g, 0.0, 0.0, 0.0, 0.0, 5.0, 0.01).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn dual_with_y_dependence_matches_brute_force() {
        let g = GeneratorSpec::lipschitz_quadratic(0.0, -1.0, 1.0, ZShape::Concave).unwrap();
        // brute force on a much finer grid, independent of the dual's grid
        let brute = (0..=200_000)
            .map(|k| -10.0 + k as f64 * 1e-4)
            .map(|z| z - 0.5 * z * z - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        let v = fenchel_dual(&g, 0.0, 0.0, 1.0, 1.0, 4.0, 0.05).unwrap();
        assert_abs_diff_eq!(v, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v, brute, epsilon = 1e-8);
    }

    #[test]
    fn boundary_hit_is_reported() {
        let g = neg_quad(1.0);
        assert!(matches!(
            fenchel_dual(&g, 0.0, 0.0, 0.0, 3.0, 2.0, 0.1),
            Err(Error::BoundaryHit { .. })
        ));
        assert!(fenchel_dual(
            &GeneratorSpec::quadratic(1.0).unwrap(),
            0.0,
            0.0,
            0.0,
            0.0,
            2.0,
            0.1
        )
        .is_err());
    }

    #[test]
    fn conjugacy_of_constant_generator() {
        let alpha = 0.7;
        let g = GeneratorSpec::new(
            "const",
            Arc::new(move |_, _, _, _| -alpha),
            alpha,
            0.0,
            1.0,
            0.0,
            ZShape::Concave,
        )
        .unwrap();
        let dual = FenchelDual::new(g.clone(), 5.0, 5.0, 0.5).unwrap();
        assert!(conjugacy_check(&g, &dual, &[(0.0, 0.0, 0.0, 0.0)]).unwrap() <= 1e-12);
    }

    #[test]
    fn conjugacy_on_coarse_grid() {
        for gamma in [0.5, 1.0, 2.0] {
            let g = neg_quad(gamma);
            let dual = FenchelDual::new(g.clone(), 5.0, 5.0, 0.5).unwrap();
            assert_eq!(dual.q_grid.len(), 21);
            let samples: Vec<_> = [-1.5, -1.0, -0.3, 0.0, 0.7, 1.0, 1.9]
                .iter()
                .map(|&z| (0.0, 0.0, 0.0, z))
                .collect();
            let r = conjugacy_check(&g, &dual, &samples).unwrap();
            assert!(r <= 2.0 * 0.25 * gamma, "gamma={gamma}: residual {r}");
        }
        let g = neg_quad(1.0);
        let dual = FenchelDual::new(g.clone(), 5.0, 8.0, 0.5).unwrap();
        assert!(conjugacy_check(&g, &dual, &[(0.0, 0.0, 0.0, 1.0)]).unwrap() <= 1e-12);
    }

    #[test]
    fn lower_bound_and_y_lipschitz() {
        let g = GeneratorSpec::lipschitz_quadratic(0.4, -0.8, 1.5, ZShape::Concave).unwrap();
        let step = 0.01;
        let dual = FenchelDual::new(g.clone(), 3.0, 4.0, step).unwrap();
        let tol = g.gamma * step * step / 8.0 + 1e-12;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let (y, y2, q) = (
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let v = dual.value(0.0, 0.0, y, q).unwrap();
            let lower = -g.alpha - g.beta * f64::abs(y) + q * q / (2.0 * g.gamma);
            assert!(v >= lower - tol);
            let v2 = dual.value(0.0, 0.0, y2, q).unwrap();
            assert!((v - v2).abs() <= g.kappa * (y - y2).abs() + 1e-12);
        }
    }
}
