use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::space_time_fn;
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, Structure};
use crate::model::{
    apriori_constants, conjugacy_check, FenchelDual, GeneratorSpec, MarkovModel, ZShape,
};
use crate::pde::{scheme_comparison, solve_obstacle_pde, PdeGrid, PdeScheme, SCHEME_TOLERANCE};
use crate::rbsde::{apriori_bound_check, cole_hopf_oracle, solve_rbsde};
use crate::stopping::{enumeration_oracle, LatticeStoppingTime, RewardProcess};

use super::comparison::{comparison_experiment, random_ordered_pairs};
use super::cross::cross_validate;
use super::markov::markov_property_check;
use super::report::{PropertyReport, ReportKind, Status};

/// Per-experiment tolerances. Keys accepted by [`Tolerances::from_map`] are
/// the field names.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub reflection: f64,
    pub flat_off: f64,
    pub apriori: f64,
    pub markov: f64,
    pub comparison: f64,
    pub cole_hopf: f64,
    pub cross_validate: f64,
    pub pde_comparison: f64,
    pub scheme_gap: f64,
    pub stopping: f64,
    pub stability_exp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            reflection: 1e-12,
            flat_off: 0.0,
            apriori: 1e-12,
            markov: 1e-10,
            comparison: 1e-12,
            cole_hopf: 5e-3,
            cross_validate: 0.02,
            pde_comparison: 1e-8,
            scheme_gap: 2.0 * SCHEME_TOLERANCE,
            stopping: 1e-10,
            stability_exp: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut t = Tolerances::default();
        for (k, &v) in map {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    format!("tolerances.{k}"),
                    "must be a finite number >= 0",
                ));
            }
            let slot = match k.as_str() {
                "reflection" => &mut t.reflection,
                "flat_off" => &mut t.flat_off,
                "apriori" => &mut t.apriori,
                "markov" => &mut t.markov,
                "comparison" => &mut t.comparison,
                "cole_hopf" => &mut t.cole_hopf,
                "cross_validate" => &mut t.cross_validate,
                "pde_comparison" => &mut t.pde_comparison,
                "scheme_gap" => &mut t.scheme_gap,
                "stopping" => &mut t.stopping,
                "stability_exp" => &mut t.stability_exp,
                _ => {
                    return Err(Error::invalid(
                        format!("tolerances.{k}"),
                        "unknown tolerance",
                    ))
                }
            };
            *slot = v;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteSettings {
    pub t0: f64,
    pub x0: f64,
    pub n_steps: usize,
    pub structure: Structure,
    pub n_space: usize,
    pub n_time: usize,
    pub x_radius: Option<f64>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl SuiteSettings {
    pub fn grid(&self, m: &MarkovModel) -> Result<PdeGrid> {
        PdeGrid::centered(
            m,
            self.x0,
            self.x_radius,
            self.n_space,
            self.t0,
            self.n_time,
        )
    }

    /// Five probe points around `x0` on two PDE time levels.
    pub fn probe_points(&self, m: &MarkovModel) -> Vec<(f64, f64)> {
        let span = m.horizon - self.t0;
        let w = 0.75 * m.sigma_star.max(0.1) * span.sqrt();
        let mid = self.t0 + 0.5 * span;
        vec![
            (self.t0, self.x0 - w),
            (self.t0, self.x0 - 0.5 * w),
            (self.t0, self.x0),
            (mid, self.x0 + 0.5 * w),
            (mid, self.x0 + w),
        ]
    }
}

pub fn reflection_reports(m: &MarkovModel, s: &SuiteSettings) -> Result<Vec<PropertyReport>> {
    let lat = build_lattice(m, s.t0, s.x0, s.n_steps, s.structure)?;
    let p = m.parameter_set();
    let sol = solve_rbsde(&lat, &p)?;
    let tol = &s.tolerances;
    let c = apriori_constants(&p.generator, m.horizon - s.t0)?;
    Ok(vec![
        PropertyReport::measured(
            "reflection",
            ReportKind::Exact,
            (-sol.min_reflection_gap()).max(0.0),
            tol.reflection,
        )
        .observe("min_gap", sol.min_reflection_gap()),
        PropertyReport::measured(
            "flat-off",
            ReportKind::Exact,
            sol.flat_off_residual.abs(),
            tol.flat_off,
        )
        .observe("k_T_mean", sol.k_terminal_mean()),
        PropertyReport::measured(
            "apriori-bound",
            ReportKind::Exact,
            apriori_bound_check(&sol, &p, &c)?,
            tol.apriori,
        )
        .observe("c0", c.c0),
    ])
}

pub fn markov_reports(m: &MarkovModel, s: &SuiteSettings) -> Result<Vec<PropertyReport>> {
    let n = 50;
    let span = m.horizon - s.t0;
    [10usize, 25, 40]
        .iter()
        .map(|&k| {
            let time = s.t0 + span * k as f64 / n as f64;
            let mut r = markov_property_check(m, s.t0, s.x0, time, n, s.structure)?;
            r.tolerance = s.tolerances.markov;
            r.status = if r.metric <= r.tolerance {
                Status::Pass
            } else {
                Status::Fail
            };
            Ok(r)
        })
        .collect()
}

/// 50 ordered pairs on the model's lattice; the metric is the worst
/// `max (Y¹ − Y²)⁺` over conclusive pairs.
pub fn comparison_report(m: &MarkovModel, s: &SuiteSettings) -> Result<PropertyReport> {
    let lat = build_lattice(m, s.t0, s.x0, 100.min(s.n_steps), s.structure)?;
    let mut worst = 0.0f64;
    let mut conclusive = 0;
    let pairs = random_ordered_pairs(s.seed, 50)?;
    for (p1, p2) in &pairs {
        let r = comparison_experiment(&lat, p1, p2)?;
        if r.status != Status::Inconclusive {
            conclusive += 1;
            worst = worst.max(r.metric);
        }
    }
    if conclusive == 0 {
        return Ok(PropertyReport::inconclusive(
            "comparison",
            ReportKind::Exact,
            s.tolerances.comparison,
            "no pair satisfied the hypotheses",
        ));
    }
    Ok(PropertyReport::measured(
        "comparison",
        ReportKind::Exact,
        worst,
        s.tolerances.comparison,
    )
    .with_detail(format!("{conclusive} of {} pairs conclusive", pairs.len()))
    .observe("conclusive_pairs", conclusive as f64))
}

pub fn cole_hopf_report(m: &MarkovModel, s: &SuiteSettings) -> Result<Option<PropertyReport>> {
    let Some(gamma) = m.generator.pure_quadratic_gamma() else {
        return Ok(None);
    };
    let p = m.parameter_set();
    let gap = |n: usize| -> Result<f64> {
        let lat = build_lattice(m, s.t0, s.x0, n, s.structure)?;
        let y = solve_rbsde(&lat, &p)?.y0();
        let o = cole_hopf_oracle(&lat, gamma, |x| (p.terminal)(x), |t, x| (p.obstacle)(t, x))?;
        Ok((y - o[0][0]).abs())
    };
    let (coarse, main, fine) = (gap(s.n_steps / 2)?, gap(s.n_steps)?, gap(2 * s.n_steps)?);
    Ok(Some(
        PropertyReport::measured(
            "cole-hopf",
            ReportKind::Convergence,
            main,
            s.tolerances.cole_hopf,
        )
        .observe("gap_half_steps", coarse)
        .observe("gap_double_steps", fine)
        .observe("shrink_factor", coarse / fine),
    ))
}

pub fn pde_reports(m: &MarkovModel, s: &SuiteSettings) -> Result<Vec<PropertyReport>> {
    let grid = s.grid(m)?;
    let base = solve_obstacle_pde(m, &grid, PdeScheme::Projected)?;
    let shifted = solve_obstacle_pde(
        &m.with_shifted_payoffs(0.1, 0.1),
        &grid,
        PdeScheme::Projected,
    )?;
    let pen = solve_obstacle_pde(m, &grid, PdeScheme::Penalized)?;
    let gap = scheme_comparison(&pen, &base)?.max(scheme_comparison(&base, &pen)?);
    Ok(vec![
        PropertyReport::measured(
            "pde/ordered-data",
            ReportKind::Exact,
            scheme_comparison(&base, &shifted)?,
            s.tolerances.pde_comparison,
        ),
        PropertyReport::measured(
            "pde/scheme-gap",
            ReportKind::Convergence,
            gap,
            s.tolerances.scheme_gap,
        )
        .observe("projected_max_residual", base.max_abs_residual)
        .observe("penalized_max_residual", pen.max_abs_residual)
        .observe("monotonicity_margin", base.monotonicity_margin),
    ])
}

/// Brute-force optimal stopping on a 5-step unit binomial tree with random
/// rewards in `[0, 1]` and the model's generator.
pub fn stopping_report(m: &MarkovModel, s: &SuiteSettings) -> Result<PropertyReport> {
    let tree = MarkovModel::new(
        space_time_fn("zero")?,
        space_time_fn("const:c=1")?,
        m.terminal.clone(),
        m.obstacle.clone(),
        m.generator.clone(),
        1.0,
        1.0,
        1.0,
        0.0,
        1.0,
    )?;
    let lat = build_lattice(&tree, 0.0, 0.0, 5, Structure::Binomial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed);
    let running = (0..5)
        .map(|i| (0..lat.width(i)).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let terminal = (0..lat.width(5)).map(|_| rng.gen::<f64>()).collect();
    let reward = RewardProcess::new(&lat, running, terminal)?;
    let r = enumeration_oracle(
        &lat,
        &m.generator,
        &reward,
        &LatticeStoppingTime::at_root(&lat),
    )?;
    let metric = r.gap.max(r.tau_star_gap).max(r.max_excess.max(0.0));
    Ok(PropertyReport::measured(
        "optimal-stopping",
        ReportKind::Exact,
        metric,
        s.tolerances.stopping,
    )
    .observe("rules", r.rules as f64))
}

/// Conjugacy residual on a coarse grid against `2 step² γ`, and the
/// quadratic lower bound of the dual on random samples.
pub fn fenchel_report(
    g: &GeneratorSpec,
    seed: u64,
    samples: usize,
) -> Result<Option<PropertyReport>> {
    if g.z_shape != ZShape::Concave {
        return Ok(None);
    }
    let step = 0.5;
    let dual = FenchelDual::new(g.clone(), 5.0, 5.0, step)?;
    let zs: Vec<(f64, f64, f64, f64)> =
        (-4..=4).map(|k| (0.0, 0.0, 0.0, 0.45 * k as f64)).collect();
    let residual = conjugacy_check(g, &dual, &zs)?;
    let fine_step = 0.01;
    let fine = FenchelDual::new(g.clone(), 3.0, 4.0 + 3.0 / g.gamma, fine_step)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slack = g.gamma * fine_step * fine_step / 8.0 + 1e-12;
    let mut lower_excess = f64::NEG_INFINITY;
    for _ in 0..samples {
        let t = rng.gen_range(0.0..1.0);
        let x = rng.gen_range(-2.0..2.0);
        let y = rng.gen_range(-2.0..2.0);
        let q = rng.gen_range(-2.0..2.0);
        let v = fine.value(t, x, y, q)?;
        let lower = -g.alpha - g.beta * y.abs() + q * q / (2.0 * g.gamma);
        lower_excess = lower_excess.max(lower - v - slack);
    }
    let bound = 2.0 * step * step * g.gamma;
    // both parts must be within their bounds: normalise to one metric
    let metric = (residual / bound).max(if lower_excess <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    });
    Ok(Some(
        PropertyReport::measured("fenchel", ReportKind::Convergence, metric, 1.0)
            .with_detail("conjugacy residual / (2 step² γ); infinite if the dual lower bound fails")
            .observe("conjugacy_residual", residual)
            .observe("lower_bound_excess", lower_excess),
    ))
}

/// Every lattice and PDE property that applies to the model.
pub fn property_suite(m: &MarkovModel, s: &SuiteSettings) -> Result<Vec<PropertyReport>> {
    let mut out = reflection_reports(m, s)?;
    out.extend(markov_reports(m, s)?);
    out.push(comparison_report(m, s)?);
    out.extend(cole_hopf_report(m, s)?);
    out.push(stopping_report(m, s)?);
    let grid = s.grid(m)?;
    let (cross, _) = cross_validate(
        m,
        &s.probe_points(m),
        s.n_steps,
        s.structure,
        &grid,
        s.tolerances.cross_validate,
    )?;
    out.push(cross);
    out.extend(pde_reports(m, s)?);
    out.extend(fenchel_report(&m.generator, s.seed, 10_000)?);
    Ok(out)
}
