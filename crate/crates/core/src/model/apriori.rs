use serde::Serialize;

use crate::error::{Error, Result};

use super::GeneratorSpec;

/// Explicit constants of the exponential a priori bound
/// `Y_t <= c0 + (1/γ) ln E[exp(γ e^{βT} (ξ⁺ ∨ L⁺_*)) | F_t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriConstants {
    /// `αγ ∨ β ∨ 1`
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
    pub horizon: f64,
    /// `μ φ(T) / γ`
    pub c0: f64,
}

impl AprioriConstants {
    /// `φ(s) = (e^{βs} − 1)/β` for `β > 0`, `s` for `β = 0`.
    pub fn varphi(&self, s: f64) -> f64 {
        varphi(self.beta, s)
    }

    /// `exp{μ φ(T) + γ x⁺ e^{βT}}`, the uniform bound on the ODE solutions.
    pub fn phi_cap(&self, x: f64) -> f64 {
        (self.mu * self.varphi(self.horizon)
            + self.gamma * x.max(0.0) * (self.beta * self.horizon).exp())
        .exp()
    }

    /// The comparison function `H(y)` dominating the transformed generator.
    pub fn h_bound(&self, y: f64) -> f64 {
        if y >= 1.0 {
            y * (self.mu + self.beta * y.ln())
        } else {
            self.mu
        }
    }
}

fn varphi(beta: f64, s: f64) -> f64 {
    if beta > 0.0 {
        (beta * s).exp_m1() / beta
    } else {
        s
    }
}

pub fn apriori_constants(g: &GeneratorSpec, horizon: f64) -> Result<AprioriConstants> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid(
            "horizon",
            format!("must be > 0 (got {horizon})"),
        ));
    }
    let mu = (g.alpha * g.gamma).max(g.beta).max(1.0);
    let c0 = mu * varphi(g.beta, horizon) / g.gamma;
    Ok(AprioriConstants {
        mu,
        beta: g.beta,
        gamma: g.gamma,
        horizon,
        c0,
    })
}

/// Closed-form solution `φ^{T̃}_t(x)` of `φ(t) = e^{γx} + ∫_t^{T̃} H(φ(s)) ds`.
pub fn phi_ode(x: f64, t: f64, t_tilde: f64, c: &AprioriConstants) -> Result<f64> {
    if !(0.0 <= t && t <= t_tilde && t_tilde <= c.horizon) {
        return Err(Error::invalid(
            "t",
            format!(
                "need 0 <= t <= T̃ <= T (got t={t}, T̃={t_tilde}, T={})",
                c.horizon
            ),
        ));
    }
    let s = t_tilde - t;
    let v = if x >= 0.0 {
        (c.mu * c.varphi(s) + c.gamma * x * (c.beta * s).exp()).exp()
    } else {
        let start = (c.gamma * x).exp();
        if start + c.mu * s < 1.0 {
            start + c.mu * s
        } else {
            (c.mu * c.varphi(s + (start - 1.0) / c.mu)).exp()
        }
    };
    Ok(v)
}
