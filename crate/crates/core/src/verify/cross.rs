use crate::error::{Error, Result};
use crate::lattice::{build_lattice, Structure};
use crate::model::MarkovModel;
use crate::pde::{solve_obstacle_pde, PdeGrid, PdeScheme, PdeSolution};
use crate::rbsde::{cole_hopf_oracle, solve_rbsde};

use super::report::{PropertyReport, ReportKind};

/// Lattice (and, for a pure quadratic driver, Cole–Hopf) values against the
/// PDE solution at the probe points. Solver failures or a flagged PDE
/// residual make the report inconclusive.
pub fn cross_validate(
    m: &MarkovModel,
    points: &[(f64, f64)],
    lat_steps: usize,
    structure: Structure,
    grid: &PdeGrid,
    tolerance: f64,
) -> Result<(PropertyReport, Option<PdeSolution>)> {
    let name = "cross-validate";
    let pde = match solve_obstacle_pde(m, grid, PdeScheme::Projected) {
        Ok(sol) if !sol.residual_flagged => sol,
        Ok(sol) => {
            let r = PropertyReport::inconclusive(
                name,
                ReportKind::Convergence,
                tolerance,
                format!(
                    "PDE residual {} above the scheme tolerance",
                    sol.max_abs_residual
                ),
            );
            return Ok((r, Some(sol)));
        }
        Err(e) => {
            return Ok((
                PropertyReport::inconclusive(
                    name,
                    ReportKind::Convergence,
                    tolerance,
                    e.to_string(),
                ),
                None,
            ))
        }
    };
    let p = m.parameter_set();
    let mut worst = 0.0f64;
    let mut report_obs = Vec::new();
    for &(t, x) in points {
        if !(grid.x_min <= x && x <= grid.x_max && grid.t0 <= t && t < grid.horizon) {
            return Err(Error::invalid(
                "points",
                format!("({t}, {x}) lies outside the PDE grid"),
            ));
        }
        let u_pde = pde.value_at(t, x);
        let solved = build_lattice(m, t, x, lat_steps, structure).and_then(|lat| {
            let y = solve_rbsde(&lat, &p)?.y0();
            let oracle = match p.generator.pure_quadratic_gamma() {
                Some(gamma) => Some(
                    cole_hopf_oracle(&lat, gamma, |v| (p.terminal)(v), |s, v| (p.obstacle)(s, v))?
                        [0][0],
                ),
                None => None,
            };
            Ok((y, oracle))
        });
        let (u_lat, oracle) = match solved {
            Ok(v) => v,
            Err(e) => {
                let r = PropertyReport::inconclusive(
                    name,
                    ReportKind::Convergence,
                    tolerance,
                    e.to_string(),
                );
                return Ok((r, Some(pde)));
            }
        };
        let mut gap = (u_lat - u_pde).abs();
        if let Some(o) = oracle {
            gap = gap.max((o - u_pde).abs()).max((o - u_lat).abs());
        }
        worst = worst.max(gap);
        report_obs.push((format!("gap[t={t},x={x}]"), gap));
    }
    let mut r = PropertyReport::measured(name, ReportKind::Convergence, worst, tolerance)
        .with_detail(format!(
            "{} points, {lat_steps} lattice steps, {}x{} PDE grid",
            points.len(),
            grid.n_space,
            grid.n_time
        ));
    for (k, v) in report_obs {
        r = r.observe(k, v);
    }
    Ok((r, Some(pde)))
}
