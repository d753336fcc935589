use std::fmt;
use std::sync::Arc;

use crate::catalog::SpaceTimeFn;
use crate::error::{Error, Result};

use super::{GeneratorSpec, ParameterSet, TerminalFn};

/// Markovian data: forward coefficients `b`, `σ`, terminal payoff `h`,
/// obstacle `l` and generator `f`, with the structural constants used by the
/// moment and growth estimates.
///
/// When `clamp_radius` is set, `b` and `σ` are evaluated at `x` clamped to
/// `[-R, R]`; this is how models with unbounded volatility are given a finite
/// `sigma_star`.
#[derive(Clone)]
pub struct MarkovModel {
    pub drift: SpaceTimeFn,
    pub sigma: SpaceTimeFn,
    pub terminal: TerminalFn,
    pub obstacle: SpaceTimeFn,
    pub generator: GeneratorSpec,
    pub kappa_lip: f64,
    pub varpi: f64,
    pub sigma_star: f64,
    pub b0: f64,
    pub horizon: f64,
    pub clamp_radius: Option<f64>,
}

impl fmt::Debug for MarkovModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkovModel")
            .field("generator", &self.generator)
            .field("kappa_lip", &self.kappa_lip)
            .field("varpi", &self.varpi)
            .field("sigma_star", &self.sigma_star)
            .field("b0", &self.b0)
            .field("horizon", &self.horizon)
            .field("clamp_radius", &self.clamp_radius)
            .finish_non_exhaustive()
    }
}

impl MarkovModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        drift: SpaceTimeFn,
        sigma: SpaceTimeFn,
        terminal: TerminalFn,
        obstacle: SpaceTimeFn,
        generator: GeneratorSpec,
        kappa_lip: f64,
        varpi: f64,
        sigma_star: f64,
        b0: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !(kappa_lip.is_finite() && kappa_lip >= 0.0) {
            return Err(Error::invalid(
                "kappa_lip",
                format!("must be >= 0 (got {kappa_lip})"),
            ));
        }
        if !(1.0..2.0).contains(&varpi) {
            return Err(Error::invalid(
                "varpi",
                format!("must lie in [1, 2) (got {varpi})"),
            ));
        }
        if !(sigma_star.is_finite() && sigma_star >= 0.0) {
            return Err(Error::invalid(
                "sigma_star",
                format!("must be >= 0 (got {sigma_star})"),
            ));
        }
        if !(b0.is_finite() && b0 >= 0.0) {
            return Err(Error::invalid("b0", format!("must be >= 0 (got {b0})")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(
                "horizon",
                format!("must be > 0 (got {horizon})"),
            ));
        }
        Ok(MarkovModel {
            drift,
            sigma,
            terminal,
            obstacle,
            generator,
            kappa_lip,
            varpi,
            sigma_star,
            b0,
            horizon,
            clamp_radius: None,
        })
    }

    pub fn with_clamp_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(
                "clamp_radius",
                format!("must be > 0 (got {radius})"),
            ));
        }
        self.clamp_radius = Some(radius);
        Ok(self)
    }

    fn clamp(&self, x: f64) -> f64 {
        match self.clamp_radius {
            Some(r) => x.clamp(-r, r),
            None => x,
        }
    }

    pub fn drift_at(&self, t: f64, x: f64) -> f64 {
        (self.drift)(t, self.clamp(x))
    }

    pub fn sigma_at(&self, t: f64, x: f64) -> f64 {
        (self.sigma)(t, self.clamp(x))
    }

    pub fn terminal_at(&self, x: f64) -> f64 {
        (self.terminal)(x)
    }

    pub fn obstacle_at(&self, t: f64, x: f64) -> f64 {
        (self.obstacle)(t, x)
    }

    /// The RBSDE data `(h(X_T), f, l(·, X))` of this model.
    pub fn parameter_set(&self) -> ParameterSet {
        ParameterSet::new(
            self.terminal.clone(),
            self.obstacle.clone(),
            self.generator.clone(),
        )
    }

    pub fn with_generator(&self, generator: GeneratorSpec) -> MarkovModel {
        MarkovModel {
            generator,
            ..self.clone()
        }
    }

    pub fn with_terminal(&self, terminal: TerminalFn) -> MarkovModel {
        MarkovModel {
            terminal,
            ..self.clone()
        }
    }

    pub fn with_obstacle(&self, obstacle: SpaceTimeFn) -> MarkovModel {
        MarkovModel {
            obstacle,
            ..self.clone()
        }
    }

    /// `h + dh` and `l + dl`.
    pub fn with_shifted_payoffs(&self, dh: f64, dl: f64) -> MarkovModel {
        let h = self.terminal.clone();
        let l = self.obstacle.clone();
        MarkovModel {
            terminal: Arc::new(move |x| h(x) + dh),
            obstacle: Arc::new(move |t, x| l(t, x) + dl),
            ..self.clone()
        }
    }

    /// Audits the declared constants on a deterministic sample of points in
    /// `[-radius, radius]`: Lipschitz continuity of `b` and `σ`, the bound
    /// `sigma_star`, `l(T, x) <= h(x)` and the polynomial growth of `h`, `l`.
    pub fn audit(&self, radius: f64, samples: usize) -> Result<()> {
        let n = samples.max(2);
        let xs: Vec<f64> = (0..n)
            .map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64)
            .collect();
        let ts = [0.0, 0.5 * self.horizon, self.horizon];
        let tol = 1e-9;
        for &t in &ts {
            for w in xs.windows(2) {
                let (x, xp) = (w[0], w[1]);
                let lhs = (self.drift_at(t, x) - self.drift_at(t, xp)).abs()
                    + (self.sigma_at(t, x) - self.sigma_at(t, xp)).abs();
                if lhs > self.kappa_lip * (x - xp).abs() + tol {
                    return Err(Error::invalid(
                        "kappa_lip",
                        format!(
                            "coefficients are not {}-Lipschitz near x = {x}",
                            self.kappa_lip
                        ),
                    ));
                }
            }
            for &x in &xs {
                if self.sigma_at(t, x).abs() > self.sigma_star + tol {
                    return Err(Error::invalid(
                        "sigma_star",
                        format!("|sigma({t}, {x})| exceeds sigma_star = {}", self.sigma_star),
                    ));
                }
                let cap = self.kappa_lip * (1.0 + x.abs().powf(self.varpi));
                if self.obstacle_at(t, x).abs() > cap + tol {
                    return Err(Error::invalid(
                        "obstacle",
                        format!("|l({t}, {x})| exceeds kappa (1 + |x|^varpi)"),
                    ));
                }
            }
        }
        for &t in &ts {
            if self.drift_at(t, 0.0).abs() > self.b0 + tol {
                return Err(Error::invalid(
                    "b0",
                    format!("|b({t}, 0)| exceeds b0 = {}", self.b0),
                ));
            }
        }
        for &x in &xs {
            let h = self.terminal_at(x);
            if self.obstacle_at(self.horizon, x) > h + tol {
                return Err(Error::invalid(
                    "obstacle",
                    format!("l(T, {x}) exceeds h({x})"),
                ));
            }
            if h.abs() > self.kappa_lip * (1.0 + x.abs().powf(self.varpi)) + tol {
                return Err(Error::invalid(
                    "terminal",
                    format!("|h({x})| exceeds kappa (1 + |x|^varpi)"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::space_time_fn;

    fn put_model() -> MarkovModel {
        let put = space_time_fn("put:strike=1").unwrap();
        let h = put.clone();
        MarkovModel::new(
            space_time_fn("zero").unwrap(),
            space_time_fn("gbm:vol=0.2").unwrap(),
            Arc::new(move |x| h(0.0, x)),
            put,
            GeneratorSpec::zero(),
            1.0,
            1.0,
            0.4,
            0.0,
            1.0,
        )
        .unwrap()
        .with_clamp_radius(2.0)
        .unwrap()
    }

    #[test]
    fn clamp_bounds_volatility() {
        let m = put_model();
        assert_eq!(m.sigma_at(0.0, 10.0), 0.4);
        assert!(m.audit(5.0, 201).is_ok());
    }

    #[test]
    fn audit_flags_understated_sigma_star() {
        let mut m = put_model();
        m.sigma_star = 0.1;
        assert!(
            matches!(m.audit(5.0, 101), Err(Error::InvalidParameter { ref field, .. }) if field == "sigma_star")
        );
    }

    #[test]
    fn rejects_varpi_out_of_range() {
        let m = put_model();
        let r = MarkovModel::new(
            m.drift.clone(),
            m.sigma.clone(),
            m.terminal.clone(),
            m.obstacle.clone(),
            GeneratorSpec::zero(),
            1.0,
            2.0,
            0.4,
            0.0,
            1.0,
        );
        assert!(r.is_err());
    }
}
