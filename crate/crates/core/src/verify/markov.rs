use crate::error::{Error, Result};
use crate::lattice::{build_lattice, Structure};
use crate::model::MarkovModel;
use crate::rbsde::solve_rbsde;

use super::report::{PropertyReport, ReportKind};

/// Compares `Y^{t,x}_s` from one solve on `[t, T]` with `u(s, ·)` obtained by
/// re-solving from every time-`s` node on its own lattice. `s` must be a
/// grid time of the `n_steps` lattice rooted at `t`.
pub fn markov_property_check(
    m: &MarkovModel,
    t: f64,
    x: f64,
    s: f64,
    n_steps: usize,
    structure: Structure,
) -> Result<PropertyReport> {
    if !(t <= s && s <= m.horizon) {
        return Err(Error::invalid(
            "s",
            format!("need t <= s <= T (got t={t}, s={s})"),
        ));
    }
    let lat = build_lattice(m, t, x, n_steps, structure)?;
    let k_real = (s - t) / lat.dt();
    let k = k_real.round() as usize;
    if (k_real - k as f64).abs() > 1e-9 {
        return Err(Error::invalid(
            "s",
            format!("{s} is not a time of the lattice"),
        ));
    }
    let p = m.parameter_set();
    let full = solve_rbsde(&lat, &p)?;
    let mut worst = 0.0f64;
    for (j, &xj) in lat.states(k).iter().enumerate() {
        let u = if k == n_steps {
            m.terminal_at(xj)
        } else {
            let sub = build_lattice(m, lat.times()[k], xj, n_steps - k, structure)?;
            solve_rbsde(&sub, &p)?.y0()
        };
        worst = worst.max((u - full.y[k][j]).abs());
    }
    Ok(
        PropertyReport::measured(format!("markov/s={s}"), ReportKind::Exact, worst, 1e-10)
            .with_detail(format!("{} nodes at step {k} of {n_steps}", lat.width(k))),
    )
}
