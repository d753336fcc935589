use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarkovModel;

use super::checks::pde_residual;
use super::grid::PdeGrid;
use super::tridiag::solve_tridiagonal;

/// Declared accuracy of both obstacle schemes; complementarity residuals
/// above it are flagged.
pub const SCHEME_TOLERANCE: f64 = 5e-3;

const ACTIVE_TOL: f64 = 1e-10;
const POLICY_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdeScheme {
    /// Penalty `(1/ε)(l − u)⁺` with `ε = dt`.
    Penalized,
    /// Discrete complementarity `min(A u − r, u − l) = 0` at every step.
    Projected,
}

#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub grid: PdeGrid,
    pub scheme: PdeScheme,
    /// `u[n][i]` at `(t_n, x_i)`.
    pub u: Vec<Vec<f64>>,
    pub obstacle: Vec<Vec<f64>>,
    pub obstacle_active: Vec<Vec<bool>>,
    /// `min(u − l, −D_t u − ℒ_h u − f)` per cell, zero on the boundary and
    /// the terminal level.
    pub residuals: Vec<Vec<f64>>,
    pub max_abs_residual: f64,
    /// Set when some interior residual exceeds [`SCHEME_TOLERANCE`].
    pub residual_flagged: bool,
    /// See [`PdeGrid::monotonicity_margin`].
    pub monotonicity_margin: f64,
}

/// Coefficients of `ℒ_h` at level `n`: `(sub, diag, sup)` such that
/// `(ℒ_h u)_i = sub_i u_{i-1} + diag_i u_i + sup_i u_{i+1}`. Interior rows
/// use central second differences and upwind first differences; boundary
/// rows keep only the inward-pointing drift.
pub(crate) fn generator_bands(
    m: &MarkovModel,
    grid: &PdeGrid,
    n: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = grid.n_space;
    let t = grid.t(n);
    let (dx, dx2) = (grid.dx, grid.dx * grid.dx);
    let mut sub = vec![0.0; k + 1];
    let mut diag = vec![0.0; k + 1];
    let mut sup = vec![0.0; k + 1];
    for i in 0..=k {
        let x = grid.x(i);
        let b = m.drift_at(t, x);
        let s = m.sigma_at(t, x);
        if i == 0 {
            let bp = b.max(0.0) / dx;
            diag[i] = -bp;
            sup[i] = bp;
        } else if i == k {
            let bm = (-b).max(0.0) / dx;
            diag[i] = -bm;
            sub[i] = bm;
        } else {
            let d = 0.5 * s * s / dx2;
            let bp = b.max(0.0) / dx;
            let bm = (-b).max(0.0) / dx;
            sub[i] = d + bm;
            sup[i] = d + bp;
            diag[i] = -2.0 * d - bp - bm;
        }
    }
    (sub, diag, sup)
}

/// `σ ∂_x u` with central differences inside and one-sided at the ends.
pub(crate) fn sigma_gradient(m: &MarkovModel, grid: &PdeGrid, t: f64, u: &[f64]) -> Vec<f64> {
    let k = grid.n_space;
    (0..=k)
        .map(|i| {
            let du = if i == 0 {
                (u[1] - u[0]) / grid.dx
            } else if i == k {
                (u[k] - u[k - 1]) / grid.dx
            } else {
                (u[i + 1] - u[i - 1]) / (2.0 * grid.dx)
            };
            m.sigma_at(t, grid.x(i)) * du
        })
        .collect()
}

/// `f(t_{n+1}, x, u^{n+1}, σ ∂_x u^{n+1})` on the grid.
pub(crate) fn explicit_driver(
    m: &MarkovModel,
    grid: &PdeGrid,
    n_next: usize,
    u_next: &[f64],
) -> Result<Vec<f64>> {
    let t = grid.t(n_next);
    let z = sigma_gradient(m, grid, t, u_next);
    (0..=grid.n_space)
        .map(|i| m.generator.eval(t, grid.x(i), u_next[i], z[i]))
        .collect()
}

/// Solves `min(A u − r, u − l) = 0` (projected) or
/// `A u − (l − u)⁺ = r` (penalized) by policy iteration.
fn obstacle_step(
    scheme: PdeScheme,
    a: &(Vec<f64>, Vec<f64>, Vec<f64>),
    r: &[f64],
    l: &[f64],
    guess: &[f64],
) -> Result<Vec<f64>> {
    let k = r.len();
    let (sub, diag, sup) = a;
    let mut active: Vec<bool> = (0..k).map(|i| guess[i] <= l[i]).collect();
    for _ in 0..=k + 1 {
        let mut s = sub.clone();
        let mut d = diag.clone();
        let mut p = sup.clone();
        let mut rhs = r.to_vec();
        for i in 0..k {
            if !active[i] {
                continue;
            }
            match scheme {
                PdeScheme::Projected => {
                    s[i] = 0.0;
                    p[i] = 0.0;
                    d[i] = 1.0;
                    rhs[i] = l[i];
                }
                PdeScheme::Penalized => {
                    d[i] += 1.0;
                    rhs[i] += l[i];
                }
            }
        }
        let u = solve_tridiagonal(&s, &d, &p, &rhs)?;
        let switch = |i: usize, diff: f64| {
            let tol = POLICY_TOL * (1.0 + u[i].abs() + l[i].abs());
            if diff > tol {
                true
            } else if diff < -tol {
                false
            } else {
                active[i]
            }
        };
        let next: Vec<bool> = match scheme {
            PdeScheme::Projected => (0..k)
                .map(|i| {
                    let mut au = diag[i] * u[i];
                    if i > 0 {
                        au += sub[i] * u[i - 1];
                    }
                    if i + 1 < k {
                        au += sup[i] * u[i + 1];
                    }
                    switch(i, (au - r[i]) - (u[i] - l[i]))
                })
                .collect(),
            PdeScheme::Penalized => (0..k).map(|i| switch(i, l[i] - u[i])).collect(),
        };
        if next == active {
            return Ok(u);
        }
        active = next;
    }
    Err(Error::non_finite(
        "obstacle policy iteration did not settle",
    ))
}

/// Backward time stepping from `u(T, ·) = h`. Diffusion and drift are
/// implicit, the driver is explicit at the previous level.
pub fn solve_obstacle_pde(
    m: &MarkovModel,
    grid: &PdeGrid,
    scheme: PdeScheme,
) -> Result<PdeSolution> {
    let kappa_dt = m.generator.kappa * grid.dt;
    if kappa_dt >= 1.0 {
        return Err(Error::NotMonotone { kappa_dt });
    }
    let xs = grid.xs();
    let nt = grid.n_time;
    let obstacle: Vec<Vec<f64>> = (0..=nt)
        .map(|n| xs.iter().map(|&x| m.obstacle_at(grid.t(n), x)).collect())
        .collect();
    let mut u = vec![Vec::new(); nt + 1];
    u[nt] = xs.iter().map(|&x| m.terminal_at(x)).collect();
    if u[nt].iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("terminal payoff on the PDE grid"));
    }
    for n in (0..nt).rev() {
        let (ls, ld, lp) = generator_bands(m, grid, n);
        let a = (
            ls.iter().map(|c| -grid.dt * c).collect::<Vec<_>>(),
            ld.iter().map(|c| 1.0 - grid.dt * c).collect::<Vec<_>>(),
            lp.iter().map(|c| -grid.dt * c).collect::<Vec<_>>(),
        );
        let f = explicit_driver(m, grid, n + 1, &u[n + 1])?;
        let r: Vec<f64> = u[n + 1]
            .iter()
            .zip(&f)
            .map(|(v, fv)| v + grid.dt * fv)
            .collect();
        u[n] = obstacle_step(scheme, &a, &r, &obstacle[n], &u[n + 1])?;
    }
    let obstacle_active = u
        .iter()
        .zip(&obstacle)
        .map(|(row, l)| {
            row.iter()
                .zip(l)
                .map(|(v, lv)| v - lv <= ACTIVE_TOL)
                .collect()
        })
        .collect();
    let mut sol = PdeSolution {
        grid: grid.clone(),
        scheme,
        u,
        obstacle,
        obstacle_active,
        residuals: Vec::new(),
        max_abs_residual: 0.0,
        residual_flagged: false,
        monotonicity_margin: grid.monotonicity_margin(m),
    };
    sol.residuals = pde_residual(&sol, m)?;
    sol.max_abs_residual = sol
        .residuals
        .iter()
        .flatten()
        .fold(0.0, |a, r| a.max(r.abs()));
    sol.residual_flagged = sol.max_abs_residual > SCHEME_TOLERANCE;
    Ok(sol)
}

impl PdeSolution {
    /// Wraps externally supplied values on a grid; residual fields are left
    /// empty until [`pde_residual`] is called.
    pub fn from_values(
        grid: PdeGrid,
        scheme: PdeScheme,
        u: Vec<Vec<f64>>,
        obstacle: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let shape_ok = |v: &Vec<Vec<f64>>| {
            v.len() == grid.n_time + 1 && v.iter().all(|r| r.len() == grid.n_space + 1)
        };
        if !shape_ok(&u) || !shape_ok(&obstacle) {
            return Err(Error::Shape("values do not match the PDE grid".into()));
        }
        let obstacle_active = u
            .iter()
            .zip(&obstacle)
            .map(|(row, l)| {
                row.iter()
                    .zip(l)
                    .map(|(v, lv)| v - lv <= ACTIVE_TOL)
                    .collect()
            })
            .collect();
        Ok(PdeSolution {
            grid,
            scheme,
            u,
            obstacle,
            obstacle_active,
            residuals: Vec::new(),
            max_abs_residual: 0.0,
            residual_flagged: false,
            monotonicity_margin: 0.0,
        })
    }

    /// Bilinear interpolation in `(t, x)`, clamped to the grid.
    pub fn value_at(&self, t: f64, x: f64) -> f64 {
        let g = &self.grid;
        let locate = |v: f64, lo: f64, h: f64, cells: usize| {
            let s = ((v - lo) / h).clamp(0.0, cells as f64);
            let k = (s.floor() as usize).min(cells - 1);
            (k, s - k as f64)
        };
        let (n, wt) = locate(t, g.t0, g.dt, g.n_time.max(1));
        let (i, wx) = locate(x, g.x_min, g.dx, g.n_space);
        let row = |n: usize| self.u[n][i] * (1.0 - wx) + self.u[n][i + 1] * wx;
        if g.n_time == 0 {
            row(0)
        } else {
            row(n) * (1.0 - wt) + row(n + 1) * wt
        }
    }

    /// `max (l − u)⁺` over the grid.
    pub fn obstacle_violation(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.obstacle)
            .flat_map(|(r, l)| r.iter().zip(l).map(|(v, lv)| lv - v))
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,u,obstacle_active")?;
        for n in 0..=self.grid.n_time {
            let t = self.grid.t(n);
            for i in 0..=self.grid.n_space {
                writeln!(
                    w,
                    "{t},{},{},{}",
                    self.grid.x(i),
                    self.u[n][i],
                    u8::from(self.obstacle_active[n][i])
                )?;
            }
        }
        Ok(())
    }
}
