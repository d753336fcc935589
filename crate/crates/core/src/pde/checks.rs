use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MarkovModel;

use super::solver::{explicit_driver, generator_bands, PdeSolution};

/// `min(u − l, (u^n − u^{n+1})/dt − ℒ_h u^n − f(t_{n+1}, x, u^{n+1}, σ D u^{n+1}))`
/// at interior cells; zero on the spatial boundary and the terminal level.
pub fn pde_residual(sol: &PdeSolution, m: &MarkovModel) -> Result<Vec<Vec<f64>>> {
    let g = &sol.grid;
    let k = g.n_space;
    let mut out = vec![vec![0.0; k + 1]; g.n_time + 1];
    for n in 0..g.n_time {
        let (sub, diag, sup) = generator_bands(m, g, n);
        let f = explicit_driver(m, g, n + 1, &sol.u[n + 1])?;
        let u = &sol.u[n];
        for i in 1..k {
            let lu = sub[i] * u[i - 1] + diag[i] * u[i] + sup[i] * u[i + 1];
            let pde = (u[i] - sol.u[n + 1][i]) / g.dt - lu - f[i];
            out[n][i] = (u[i] - sol.obstacle[n][i]).min(pde);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthReport {
    /// Smallest `c` with `|u| <= c (1 + |x|^ϖ)` on the grid.
    pub c: f64,
    pub varpi: f64,
}

pub fn growth_check(sol: &PdeSolution, m: &MarkovModel) -> GrowthReport {
    let g = &sol.grid;
    let mut c = 0.0f64;
    for row in &sol.u {
        for (i, v) in row.iter().enumerate() {
            c = c.max(v.abs() / (1.0 + g.x(i).abs().powf(m.varpi)));
        }
    }
    GrowthReport { c, varpi: m.varpi }
}

/// `max (u_sub − u_super)` over the grid.
pub fn scheme_comparison(u_sub: &PdeSolution, u_super: &PdeSolution) -> Result<f64> {
    if u_sub.grid != u_super.grid {
        return Err(Error::Shape("solutions live on different grids".into()));
    }
    let nt = u_sub.grid.n_time;
    if u_sub.u[nt].iter().zip(&u_super.u[nt]).any(|(a, b)| a > b) {
        return Err(Error::invalid(
            "terminal",
            "sub-solution terminal data exceeds the super-solution's",
        ));
    }
    Ok(u_sub
        .u
        .iter()
        .zip(&u_super.u)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y))
        .fold(f64::NEG_INFINITY, f64::max))
}
