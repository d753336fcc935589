use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::RecombiningLattice;
use crate::model::{GeneratorSpec, ParameterSet};

const PAR_MIN_LEN: usize = 256;

/// Output of reflected backward induction: `Y`, `Z` and the reflection
/// increments `ΔK` per node. `K` itself is path dependent on a recombining
/// lattice; [`DiscreteSolution::expected_k`] gives `E[K_{t_i} | node]`.
#[derive(Debug, Clone)]
pub struct DiscreteSolution<'a> {
    lattice: &'a RecombiningLattice,
    pub y: Vec<Vec<f64>>,
    /// Zero on the terminal step.
    pub z: Vec<Vec<f64>>,
    /// `Y_i − Ỹ_i`; zero on the terminal step.
    pub dk: Vec<Vec<f64>>,
    pub obstacle: Vec<Vec<f64>>,
    pub flat_off_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSummary {
    pub y0: f64,
    #[serde(rename = "k_T_mean")]
    pub k_t_mean: f64,
    pub flat_off_residual: f64,
}

pub(crate) fn check_monotone(lat: &RecombiningLattice, g: &GeneratorSpec) -> Result<()> {
    let kappa_dt = g.kappa * lat.dt();
    if kappa_dt >= 1.0 {
        return Err(Error::NotMonotone { kappa_dt });
    }
    Ok(())
}

/// `(Ỹ, Z)` at a node from the values on the next step.
pub(crate) fn one_step(
    lat: &RecombiningLattice,
    g: &GeneratorSpec,
    step: usize,
    index: usize,
    next: &[f64],
) -> Result<(f64, f64)> {
    let dt = lat.dt();
    let ey = lat.expect(step, index, next);
    let z = lat.expect_noise(step, index, next) / dt;
    let x = lat.states(step)[index];
    let f = g.eval(lat.times()[step], x, ey, z)?;
    let y = ey + f * dt;
    if !y.is_finite() {
        return Err(Error::non_finite(format!(
            "backward induction at step {step}, node {index}"
        )));
    }
    Ok((y, z))
}

fn step_values(
    lat: &RecombiningLattice,
    step: usize,
    next: &[f64],
    node: impl Fn(usize, &[f64]) -> Result<(f64, f64, f64)> + Sync,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let rows: Vec<(f64, f64, f64)> = (0..lat.width(step))
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|j| node(j, next))
        .collect::<Result<_>>()?;
    let mut y = Vec::with_capacity(rows.len());
    let mut z = Vec::with_capacity(rows.len());
    let mut dk = Vec::with_capacity(rows.len());
    for (a, b, c) in rows {
        y.push(a);
        z.push(b);
        dk.push(c);
    }
    Ok((y, z, dk))
}

/// Reflected backward induction
/// `Y_i = max(L_i, E_i[Y'] + f(t_i, x_i, E_i[Y'], Z_i) dt)` with
/// `Z_i = E_i[Y' ΔB] / dt` and `Y_N = ξ`.
pub fn solve_rbsde<'a>(
    lat: &'a RecombiningLattice,
    p: &ParameterSet,
) -> Result<DiscreteSolution<'a>> {
    let g = &p.generator;
    check_monotone(lat, g)?;
    let n = lat.n_steps();
    let obstacle = lat.map_nodes(|t, x| (p.obstacle)(t, x));
    let xi = lat.map_terminal(|x| (p.terminal)(x));
    if let Some(v) = xi.iter().find(|v| !v.is_finite()) {
        return Err(Error::non_finite(format!("terminal payoff ({v})")));
    }
    let mut y = vec![Vec::new(); n + 1];
    let mut z = vec![Vec::new(); n + 1];
    let mut dk = vec![Vec::new(); n + 1];
    z[n] = vec![0.0; xi.len()];
    dk[n] = vec![0.0; xi.len()];
    y[n] = xi;
    for i in (0..n).rev() {
        let l = &obstacle[i];
        let (yi, zi, dki) = step_values(lat, i, &y[i + 1], |j, next| {
            let (yt, zj) = one_step(lat, g, i, j, next)?;
            let yj = yt.max(l[j]);
            Ok((yj, zj, yj - yt))
        })?;
        y[i] = yi;
        z[i] = zi;
        dk[i] = dki;
    }
    Ok(DiscreteSolution::from_parts(lat, y, z, dk, obstacle))
}

/// Backward induction without reflection. With `cutoff` flags, the generator
/// is switched off from the first flagged node on each path: there `Y` is
/// `E[ξ | node]` and `Z` is reported as zero.
pub fn solve_bsde(
    lat: &RecombiningLattice,
    g: &GeneratorSpec,
    terminal: impl Fn(f64) -> f64,
    cutoff: Option<&[Vec<bool>]>,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    check_monotone(lat, g)?;
    let n = lat.n_steps();
    let xi = lat.map_terminal(terminal);
    if let Some(flags) = cutoff {
        check_flag_shape(lat, flags)?;
    }
    let mean = cutoff.map(|_| conditional_mean(lat, &xi));
    let mut y = vec![Vec::new(); n + 1];
    let mut z = vec![Vec::new(); n + 1];
    z[n] = vec![0.0; xi.len()];
    y[n] = xi;
    for i in (0..n).rev() {
        let (yi, zi, _) = step_values(lat, i, &y[i + 1], |j, next| {
            if let (Some(flags), Some(mean)) = (cutoff, &mean) {
                if flags[i][j] {
                    return Ok((mean[i][j], 0.0, 0.0));
                }
            }
            let (yt, zj) = one_step(lat, g, i, j, next)?;
            Ok((yt, zj, 0.0))
        })?;
        y[i] = yi;
        z[i] = zi;
    }
    Ok((y, z))
}

pub(crate) fn check_flag_shape<T>(lat: &RecombiningLattice, rows: &[Vec<T>]) -> Result<()> {
    if rows.len() != lat.n_steps() + 1 || (0..rows.len()).any(|i| rows[i].len() != lat.width(i)) {
        return Err(Error::Shape(
            "per-node values do not match the lattice".into(),
        ));
    }
    Ok(())
}

/// `E[v(X_N) | node]` on every node.
pub(crate) fn conditional_mean(lat: &RecombiningLattice, terminal: &[f64]) -> Vec<Vec<f64>> {
    let n = lat.n_steps();
    let mut out = vec![Vec::new(); n + 1];
    out[n] = terminal.to_vec();
    for i in (0..n).rev() {
        out[i] = (0..lat.width(i))
            .map(|j| lat.expect(i, j, &out[i + 1]))
            .collect();
    }
    out
}

/// `E[Σ_i (Y_i − L_i) ΔK_i]` under the lattice measure.
pub fn flat_off_residual(s: &DiscreteSolution<'_>) -> f64 {
    s.flat_off_residual
}

fn compute_flat_off(
    lat: &RecombiningLattice,
    y: &[Vec<f64>],
    dk: &[Vec<f64>],
    l: &[Vec<f64>],
) -> f64 {
    let probs = lat.node_probabilities();
    let mut acc = 0.0;
    for i in 0..probs.len() {
        for j in 0..probs[i].len() {
            if dk[i][j] != 0.0 {
                acc += probs[i][j] * (y[i][j] - l[i][j]) * dk[i][j];
            }
        }
    }
    acc
}

impl<'a> DiscreteSolution<'a> {
    /// Assembles a solution from per-node arrays; the flat-off residual is
    /// recomputed from the data.
    pub fn from_parts(
        lattice: &'a RecombiningLattice,
        y: Vec<Vec<f64>>,
        z: Vec<Vec<f64>>,
        dk: Vec<Vec<f64>>,
        obstacle: Vec<Vec<f64>>,
    ) -> Self {
        let flat_off_residual = compute_flat_off(lattice, &y, &dk, &obstacle);
        DiscreteSolution {
            lattice,
            y,
            z,
            dk,
            obstacle,
            flat_off_residual,
        }
    }

    pub fn lattice(&self) -> &'a RecombiningLattice {
        self.lattice
    }

    pub fn y0(&self) -> f64 {
        self.y[0][0]
    }

    /// `E[K_{t_i} | node]` with `K_{t_{i+1}} − K_{t_i} = ΔK_i` and `K_0 = 0`.
    pub fn expected_k(&self) -> Vec<Vec<f64>> {
        let lat = self.lattice;
        let probs = lat.node_probabilities();
        let mut k = vec![vec![0.0]];
        for i in 0..lat.n_steps() {
            let mut mass = vec![0.0; lat.width(i + 1)];
            for j in 0..lat.width(i) {
                let carried = probs[i][j] * (k[i][j] + self.dk[i][j]);
                for (c, p, _) in lat.children(i, j) {
                    mass[c] += p * carried;
                }
            }
            let row = mass
                .iter()
                .zip(&probs[i + 1])
                .map(|(m, q)| if *q > 0.0 { m / q } else { 0.0 })
                .collect();
            k.push(row);
        }
        k
    }

    /// `E[K_T]`.
    pub fn k_terminal_mean(&self) -> f64 {
        let probs = self.lattice.node_probabilities();
        let mut acc = 0.0;
        for i in 0..probs.len() {
            for j in 0..probs[i].len() {
                acc += probs[i][j] * self.dk[i][j];
            }
        }
        acc
    }

    /// `min (Y − L)` over non-terminal nodes.
    pub fn min_reflection_gap(&self) -> f64 {
        let n = self.lattice.n_steps();
        (0..n)
            .flat_map(|i| self.y[i].iter().zip(&self.obstacle[i]).map(|(y, l)| y - l))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            y0: self.y0(),
            k_t_mean: self.k_terminal_mean(),
            flat_off_residual: self.flat_off_residual,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let lat = self.lattice;
        let k = self.expected_k();
        writeln!(w, "node_id,step,t,x,y,z,k")?;
        let mut id = 0usize;
        for i in 0..=lat.n_steps() {
            let t = lat.times()[i];
            for (j, x) in lat.states(i).iter().enumerate() {
                writeln!(
                    w,
                    "{id},{i},{t},{x},{},{},{}",
                    self.y[i][j], self.z[i][j], k[i][j]
                )?;
                id += 1;
            }
        }
        Ok(())
    }
}
