use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MarkovModel;

/// Uniform space-time grid on `[x_min, x_max] × [t0, T]` with `n_space`
/// intervals in `x` and `n_time` steps in `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_space: usize,
    pub n_time: usize,
    pub t0: f64,
    pub horizon: f64,
    pub dx: f64,
    pub dt: f64,
}

impl PdeGrid {
    pub fn new(
        x_min: f64,
        x_max: f64,
        n_space: usize,
        t0: f64,
        horizon: f64,
        n_time: usize,
    ) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(Error::invalid(
                "x_radius",
                format!("empty domain [{x_min}, {x_max}]"),
            ));
        }
        if n_space < 2 {
            return Err(Error::invalid("n_space", "must be >= 2"));
        }
        if n_time < 1 {
            return Err(Error::invalid("n_time", "must be >= 1"));
        }
        if !(t0.is_finite() && horizon.is_finite() && t0 < horizon) {
            return Err(Error::invalid(
                "t0",
                format!("must be < T (got {t0}, T = {horizon})"),
            ));
        }
        Ok(PdeGrid {
            x_min,
            x_max,
            n_space,
            n_time,
            t0,
            horizon,
            dx: (x_max - x_min) / n_space as f64,
            dt: (horizon - t0) / n_time as f64,
        })
    }

    /// Domain `x0 ± radius`; with `radius = None`, `5 σ_* √T`.
    pub fn centered(
        m: &MarkovModel,
        x0: f64,
        radius: Option<f64>,
        n_space: usize,
        t0: f64,
        n_time: usize,
    ) -> Result<Self> {
        let r = radius.unwrap_or(5.0 * m.sigma_star * m.horizon.sqrt());
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid("x_radius", format!("must be > 0 (got {r})")));
        }
        Self::new(x0 - r, x0 + r, n_space, t0, m.horizon, n_time)
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.n_space {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx
        }
    }

    pub fn t(&self, n: usize) -> f64 {
        if n == self.n_time {
            self.horizon
        } else {
            self.t0 + n as f64 * self.dt
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..=self.n_space).map(|i| self.x(i)).collect()
    }

    /// `dx² / (σ_*² + dx |b|_∞) − dt`, with `|b|_∞` sampled on the grid.
    /// Negative values mean the explicit monotonicity margin is not met.
    pub fn monotonicity_margin(&self, m: &MarkovModel) -> f64 {
        let mut b_max = 0.0f64;
        for n in [0, self.n_time / 2, self.n_time] {
            for i in 0..=self.n_space {
                b_max = b_max.max(m.drift_at(self.t(n), self.x(i)).abs());
            }
        }
        self.dx * self.dx / (m.sigma_star * m.sigma_star + self.dx * b_max) - self.dt
    }
}
