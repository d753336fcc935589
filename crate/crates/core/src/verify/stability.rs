use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::lattice::RecombiningLattice;
use crate::model::ParameterSet;
use crate::rbsde::{log_exp_future_sup, solve_rbsde};

use super::report::{PropertyReport, ReportKind};

/// Rounding allowance on the sup-error gates; the rate bound is attained
/// exactly for drivers free of `y`.
const RATE_SLACK: f64 = 1e-12;

/// `ξ + 1/n`, `L + 1/n`, `f + 1/n`.
pub fn one_over_n(base: &ParameterSet, n: usize) -> ParameterSet {
    let c = 1.0 / n as f64;
    let xi = base.terminal.clone();
    let l = base.obstacle.clone();
    ParameterSet::new(
        Arc::new(move |x| xi(x) + c),
        Arc::new(move |t, x| l(t, x) + c),
        base.generator.shifted(c),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityOutcome {
    pub ns: Vec<usize>,
    /// `sup over nodes |Yⁿ − Y⁰|`.
    pub sup_errors: Vec<f64>,
    /// `E[exp(sup_t |Yⁿ_t − Y⁰_t|)]` along lattice paths.
    pub exp_statistics: Vec<f64>,
    /// `e^{κT}(1 + T)`.
    pub rate_constant: f64,
    pub rate: PropertyReport,
    pub exp_moment: PropertyReport,
}

impl StabilityOutcome {
    pub fn reports(&self) -> Vec<PropertyReport> {
        vec![self.rate.clone(), self.exp_moment.clone()]
    }
}

/// Solves the base problem and each perturbation `(n, pₙ)`, and reports
/// (a) whether the sup-errors are non-increasing and below
/// `e^{κT}(1+T)/n`, and (b) how far `E[exp(sup|Yⁿ − Y⁰|)]` at the last `n`
/// is from 1.
pub fn stability_experiment(
    lat: &RecombiningLattice,
    base: &ParameterSet,
    perturbations: &[(usize, ParameterSet)],
    exp_tolerance: f64,
) -> Result<StabilityOutcome> {
    let y0 = solve_rbsde(lat, base)?;
    let span = lat.horizon() - lat.t0();
    let rate_constant = (base.generator.kappa * span).exp() * (1.0 + span);
    let mut ns = Vec::new();
    let mut sup_errors = Vec::new();
    let mut exp_statistics = Vec::new();
    for (n, p) in perturbations {
        let yn = solve_rbsde(lat, p)?;
        let diff: Vec<Vec<f64>> =
            yn.y.iter()
                .zip(&y0.y)
                .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()).collect())
                .collect();
        let sup = diff.iter().flatten().cloned().fold(0.0, f64::max);
        let log_e = log_exp_future_sup(lat, &diff, 1.0)?;
        ns.push(*n);
        sup_errors.push(sup);
        exp_statistics.push(log_e[0][0].exp());
    }

    let mut rate_excess = f64::NEG_INFINITY;
    for (n, e) in ns.iter().zip(&sup_errors) {
        rate_excess = rate_excess.max(e - rate_constant / *n as f64);
    }
    for w in sup_errors.windows(2) {
        rate_excess = rate_excess.max(w[1] - w[0]);
    }
    let mut rate = PropertyReport::measured(
        "stability/sup-error",
        ReportKind::Convergence,
        rate_excess.max(0.0),
        RATE_SLACK,
    )
    .with_detail("sup|Yⁿ − Y⁰| non-increasing and <= e^{κT}(1+T)/n")
    .observe("rate_constant", rate_constant);
    let last = exp_statistics.last().copied().unwrap_or(1.0);
    let mut exp_moment = PropertyReport::measured(
        "stability/exp-moment",
        ReportKind::Convergence,
        (last - 1.0).abs(),
        exp_tolerance,
    )
    .with_detail(format!(
        "E[exp(sup|Yⁿ − Y⁰|)] at n = {}",
        ns.last().copied().unwrap_or(0)
    ));
    for ((n, e), s) in ns.iter().zip(&sup_errors).zip(&exp_statistics) {
        rate = rate.observe(format!("sup_error[n={n}]"), *e);
        exp_moment = exp_moment.observe(format!("exp_statistic[n={n}]"), *s);
    }
    Ok(StabilityOutcome {
        ns,
        sup_errors,
        exp_statistics,
        rate_constant,
        rate,
        exp_moment,
    })
}
