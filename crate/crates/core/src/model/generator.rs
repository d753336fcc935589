use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Driver rule `f(t, x, y, z)`.
pub type GeneratorFn = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// Shape of the generator in the `z` variable. Generators affine in `z` are
/// labelled [`ZShape::Convex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZShape {
    Convex,
    Concave,
    None,
}

/// A generator together with the constants it is declared to satisfy:
///
/// - growth: `|f| <= alpha + beta |y| + (gamma / 2) z^2`
/// - y-Lipschitz with constant `kappa`
/// - convex or concave in `z` according to `z_shape`
///
/// The constants are trusted by the solvers and spot-audited by
/// [`GeneratorSpec::audit`].
#[derive(Clone)]
pub struct GeneratorSpec {
    rule: GeneratorFn,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub z_shape: ZShape,
    label: String,
    pure_quadratic: Option<f64>,
}

impl fmt::Debug for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneratorSpec")
            .field("label", &self.label)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("gamma", &self.gamma)
            .field("kappa", &self.kappa)
            .field("z_shape", &self.z_shape)
            .finish()
    }
}

impl GeneratorSpec {
    pub fn new(
        label: impl Into<String>,
        rule: GeneratorFn,
        alpha: f64,
        beta: f64,
        gamma: f64,
        kappa: f64,
        z_shape: ZShape,
    ) -> Result<Self> {
        check_nonneg("alpha", alpha)?;
        check_nonneg("beta", beta)?;
        check_nonneg("kappa", kappa)?;
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid(
                "gamma",
                format!("must be > 0 (got {gamma})"),
            ));
        }
        Ok(GeneratorSpec {
            rule,
            alpha,
            beta,
            gamma,
            kappa,
            z_shape,
            label: label.into(),
            pure_quadratic: None,
        })
    }

    /// `f ≡ 0`. Satisfies the growth condition for any constants; declared
    /// with `gamma = 1`.
    pub fn zero() -> Self {
        GeneratorSpec {
            rule: Arc::new(|_, _, _, _| 0.0),
            alpha: 0.0,
            beta: 0.0,
            gamma: 1.0,
            kappa: 0.0,
            z_shape: ZShape::Convex,
            label: "zero".into(),
            pure_quadratic: None,
        }
    }

    /// `f = (gamma / 2) z^2`.
    pub fn quadratic(gamma: f64) -> Result<Self> {
        let mut g = Self::new(
            format!("quad:gamma={gamma}"),
            Arc::new(move |_, _, _, z| 0.5 * gamma * z * z),
            0.0,
            0.0,
            gamma,
            0.0,
            ZShape::Convex,
        )?;
        g.pure_quadratic = Some(gamma);
        Ok(g)
    }

    /// `f = -(gamma / 2) z^2`.
    pub fn neg_quadratic(gamma: f64) -> Result<Self> {
        Self::new(
            format!("neg_quad:gamma={gamma}"),
            Arc::new(move |_, _, _, z| -0.5 * gamma * z * z),
            0.0,
            0.0,
            gamma,
            0.0,
            ZShape::Concave,
        )
    }

    /// `f = a + b y`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        Self::new(
            format!("affine:a={a},b={b}"),
            Arc::new(move |_, _, y, _| a + b * y),
            a.abs(),
            b.abs(),
            1.0,
            b.abs(),
            ZShape::Convex,
        )
    }

    /// `f = a + b |y| ± (gamma / 2) z^2`, sign chosen by `shape`.
    pub fn lipschitz_quadratic(a: f64, b: f64, gamma: f64, shape: ZShape) -> Result<Self> {
        let sign = match shape {
            ZShape::Convex => 1.0,
            ZShape::Concave => -1.0,
            ZShape::None => {
                return Err(Error::invalid(
                    "shape",
                    "lipschitz_quad must be convex or concave",
                ))
            }
        };
        let shape_tag = if sign > 0.0 { "convex" } else { "concave" };
        Self::new(
            format!("lipschitz_quad:a={a},b={b},gamma={gamma},shape={shape_tag}"),
            Arc::new(move |_, _, y, z| a + b * y.abs() + sign * 0.5 * gamma * z * z),
            a.abs(),
            b.abs(),
            gamma,
            b.abs(),
            shape,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `Some(gamma)` iff the rule is exactly `(gamma / 2) z^2`.
    pub fn pure_quadratic_gamma(&self) -> Option<f64> {
        self.pure_quadratic
    }

    /// Evaluates the rule, rejecting non-finite output. With debug assertions
    /// on, also checks the declared growth bound.
    pub fn eval(&self, t: f64, x: f64, y: f64, z: f64) -> Result<f64> {
        let v = (self.rule)(t, x, y, z);
        if !v.is_finite() {
            return Err(Error::non_finite(format!(
                "generator {} at (t={t}, x={x}, y={y}, z={z})",
                self.label
            )));
        }
        debug_assert!(
            v.abs() <= self.growth_bound(y, z) * (1.0 + 1e-12) + 1e-12,
            "generator {} exceeds its declared growth bound at (t={t}, x={x}, y={y}, z={z})",
            self.label
        );
        Ok(v)
    }

    /// `alpha + beta |y| + (gamma / 2) z^2`.
    pub fn growth_bound(&self, y: f64, z: f64) -> f64 {
        self.alpha + self.beta * y.abs() + 0.5 * self.gamma * z * z
    }

    /// `f + c`, with `alpha` raised by `|c|`.
    pub fn shifted(&self, c: f64) -> GeneratorSpec {
        let inner = self.rule.clone();
        GeneratorSpec {
            rule: Arc::new(move |t, x, y, z| inner(t, x, y, z) + c),
            alpha: self.alpha + c.abs(),
            label: format!("{}+{c}", self.label),
            pure_quadratic: if c == 0.0 { self.pure_quadratic } else { None },
            ..self.clone()
        }
    }

    /// Samples the declared constants on random `(t, x, y, z)` and reports the
    /// largest excess over each declared bound. Non-positive excesses mean the
    /// samples are consistent with the declaration.
    pub fn audit<R: Rng>(&self, rng: &mut R, samples: usize, radius: f64) -> GeneratorAudit {
        let mut audit = GeneratorAudit {
            growth_excess: f64::NEG_INFINITY,
            lipschitz_excess: f64::NEG_INFINITY,
            shape_excess: f64::NEG_INFINITY,
        };
        for _ in 0..samples {
            let t = rng.gen_range(0.0..1.0);
            let x = rng.gen_range(-radius..radius);
            let y1 = rng.gen_range(-radius..radius);
            let y2 = rng.gen_range(-radius..radius);
            let z1 = rng.gen_range(-radius..radius);
            let z2 = rng.gen_range(-radius..radius);
            let f = |y: f64, z: f64| (self.rule)(t, x, y, z);

            let growth = f(y1, z1).abs() - self.growth_bound(y1, z1);
            audit.growth_excess = audit.growth_excess.max(growth);

            let lip = (f(y1, z1) - f(y2, z1)).abs() - self.kappa * (y1 - y2).abs();
            audit.lipschitz_excess = audit.lipschitz_excess.max(lip);

            let mid = f(y1, 0.5 * (z1 + z2));
            let chord = 0.5 * (f(y1, z1) + f(y1, z2));
            let shape = match self.z_shape {
                ZShape::Convex => mid - chord,
                ZShape::Concave => chord - mid,
                ZShape::None => f64::NEG_INFINITY,
            };
            audit.shape_excess = audit.shape_excess.max(shape);
        }
        audit
    }
}

/// Largest sampled excess over each declared structural bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorAudit {
    pub growth_excess: f64,
    pub lipschitz_excess: f64,
    pub shape_excess: f64,
}

impl GeneratorAudit {
    pub fn passes(&self, tol: f64) -> bool {
        self.growth_excess <= tol && self.lipschitz_excess <= tol && self.shape_excess <= tol
    }
}

fn check_nonneg(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("must be finite and >= 0 (got {v})"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_substitution() {
        let g = GeneratorSpec::quadratic(2.0).unwrap();
        assert_eq!(g.eval(0.3, 1.0, 5.0, 3.0).unwrap(), 9.0);
        // |f| = 9 sits exactly on alpha + beta |y| + (gamma / 2) z^2 = 9
        assert_eq!(g.growth_bound(5.0, 3.0), 9.0);
        assert_eq!(
            GeneratorSpec::zero().eval(1.0, -2.0, 4.0, 7.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn rejects_non_finite_output() {
        let g = GeneratorSpec::new(
            "bad",
            Arc::new(|_, _, y, _| 1.0 / y),
            f64::MAX,
            0.0,
            1.0,
            0.0,
            ZShape::None,
        )
        .unwrap();
        assert!(matches!(
            g.eval(0.0, 0.0, 0.0, 0.0),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn rejects_bad_constants() {
        let r = GeneratorSpec::quadratic(-1.0);
        assert!(matches!(r, Err(Error::InvalidParameter { ref field, .. }) if field == "gamma"));
        assert!(GeneratorSpec::affine(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn builtins_pass_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gens = [
            GeneratorSpec::zero(),
            GeneratorSpec::quadratic(0.5).unwrap(),
            GeneratorSpec::neg_quadratic(2.0).unwrap(),
            GeneratorSpec::affine(-1.0, 0.5).unwrap(),
            GeneratorSpec::lipschitz_quadratic(0.3, -0.7, 1.5, ZShape::Concave).unwrap(),
            GeneratorSpec::lipschitz_quadratic(1.0, 2.0, 1.0, ZShape::Convex).unwrap(),
            GeneratorSpec::quadratic(1.0).unwrap().shifted(-1.0),
        ];
        for g in &gens {
            let a = g.audit(&mut rng, 10_000, 10.0);
            assert!(a.passes(1e-9), "{} failed audit: {a:?}", g.label());
        }
    }

    #[test]
    fn audit_catches_wrong_declaration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut g = GeneratorSpec::quadratic(2.0).unwrap();
        g.gamma = 1.0;
        assert!(g.audit(&mut rng, 1000, 5.0).growth_excess > 0.0);
        let mut g = GeneratorSpec::neg_quadratic(1.0).unwrap();
        g.z_shape = ZShape::Convex;
        assert!(g.audit(&mut rng, 1000, 5.0).shape_excess > 0.0);
    }
}
