use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{NodeId, RecombiningLattice};
use crate::model::{GeneratorSpec, ParameterSet};
use crate::rbsde::{check_monotone, one_step};

use super::{enumerate_stopping_times, LatticeStoppingTime};

/// Tolerance for "Y = R" when locating the optimal stopping time.
const TIE_TOL: f64 = 1e-10;

/// `R_t = L_t` before `T` and `ξ` at `T`, per node.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardProcess {
    /// Steps `0..N`.
    pub running: Vec<Vec<f64>>,
    pub terminal: Vec<f64>,
}

impl RewardProcess {
    pub fn new(
        lat: &RecombiningLattice,
        running: Vec<Vec<f64>>,
        terminal: Vec<f64>,
    ) -> Result<Self> {
        let n = lat.n_steps();
        if running.len() != n
            || (0..n).any(|i| running[i].len() != lat.width(i))
            || terminal.len() != lat.width(n)
        {
            return Err(Error::Shape("reward does not match the lattice".into()));
        }
        if running
            .iter()
            .flatten()
            .chain(&terminal)
            .any(|v| !v.is_finite())
        {
            return Err(Error::non_finite("reward"));
        }
        Ok(RewardProcess { running, terminal })
    }

    pub fn from_parameters(lat: &RecombiningLattice, p: &ParameterSet) -> Result<Self> {
        let mut running = lat.map_nodes(|t, x| (p.obstacle)(t, x));
        running.pop();
        Self::new(lat, running, lat.map_terminal(|x| (p.terminal)(x)))
    }

    pub fn at(&self, step: usize, index: usize) -> f64 {
        if step == self.running.len() {
            self.terminal[index]
        } else {
            self.running[step][index]
        }
    }

    /// `R` at the nodes where `tau` stops and `None` elsewhere.
    pub fn at_stopping(&self, tau: &LatticeStoppingTime) -> Vec<Vec<Option<f64>>> {
        tau.flags()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &f)| f.then(|| self.at(i, j)))
                    .collect()
            })
            .collect()
    }
}

/// `E^g_{·,τ}[payoff]` at every node, with `τ` read from the node on.
/// `payoff` must be given exactly at the nodes where `tau` stops.
pub fn g_evaluate(
    lat: &RecombiningLattice,
    g: &GeneratorSpec,
    tau: &LatticeStoppingTime,
    payoff: &[Vec<Option<f64>>],
) -> Result<Vec<Vec<f64>>> {
    check_monotone(lat, g)?;
    let n = lat.n_steps();
    if payoff.len() != n + 1 || (0..=n).any(|i| payoff[i].len() != lat.width(i)) {
        return Err(Error::Shape("payoff does not match the lattice".into()));
    }
    for i in 0..=n {
        for j in 0..lat.width(i) {
            match (tau.stops_at(i, j), payoff[i][j]) {
                (true, None) => {
                    return Err(Error::PayoffMismatch {
                        step: i,
                        node: j,
                        expected: "defined",
                    })
                }
                (false, Some(_)) => {
                    return Err(Error::PayoffMismatch {
                        step: i,
                        node: j,
                        expected: "undefined",
                    })
                }
                _ => {}
            }
        }
    }
    let mut y = vec![Vec::new(); n + 1];
    y[n] = payoff[n]
        .iter()
        .map(|v| v.expect("terminal payoff checked"))
        .collect();
    for i in (0..n).rev() {
        y[i] = (0..lat.width(i))
            .map(|j| match payoff[i][j] {
                Some(v) => Ok(v),
                None => one_step(lat, g, i, j, &y[i + 1]).map(|(v, _)| v),
            })
            .collect::<Result<_>>()?;
    }
    Ok(y)
}

#[derive(Debug, Clone)]
pub struct OptimalStop {
    /// `Y` on every node.
    pub y: Vec<Vec<f64>>,
    /// `Y_ν` at the nodes where `ν` stops.
    pub value: Vec<(NodeId, f64)>,
    /// First time from `ν` on with `|Y − R| <= 1e-10`.
    pub tau_star: LatticeStoppingTime,
    /// Nodes where `τ*` stops for paths started at `ν`.
    pub tau_star_nodes: Vec<NodeId>,
}

impl OptimalStop {
    /// Value at the root; meaningful when `ν` is the root.
    pub fn root_value(&self) -> f64 {
        self.y[0][0]
    }
}

/// Value and optimal rule of `sup_{τ >= ν} E^g_{ν,τ}[R_τ]`.
pub fn optimal_stop(
    lat: &RecombiningLattice,
    g: &GeneratorSpec,
    reward: &RewardProcess,
    nu: &LatticeStoppingTime,
) -> Result<OptimalStop> {
    check_monotone(lat, g)?;
    let n = lat.n_steps();
    let mut y = vec![Vec::new(); n + 1];
    y[n] = reward.terminal.clone();
    for i in (0..n).rev() {
        y[i] = (0..lat.width(i))
            .map(|j| one_step(lat, g, i, j, &y[i + 1]).map(|(v, _)| v.max(reward.running[i][j])))
            .collect::<Result<_>>()?;
    }
    let flags: Vec<Vec<bool>> = (0..=n)
        .map(|i| {
            (0..lat.width(i))
                .map(|j| (y[i][j] - reward.at(i, j)).abs() <= TIE_TOL)
                .collect()
        })
        .collect();
    let tau_star = LatticeStoppingTime::from_flags(lat, flags)?;
    let nu_nodes = nu.hit_nodes(lat);
    let tau_star_nodes = tau_star.hit_nodes_from(lat, &nu_nodes);
    let value = nu_nodes.iter().map(|&v| (v, y[v.step][v.index])).collect();
    Ok(OptimalStop {
        y,
        value,
        tau_star,
        tau_star_nodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    pub rules: usize,
    /// Best value over all rules at each node where `ν` stops.
    pub best: Vec<f64>,
    /// `max over ν-nodes |optimal value − best|`.
    pub gap: f64,
    /// Largest excess of any rule's value over the optimal value.
    pub max_excess: f64,
    /// `max over ν-nodes |optimal value − value under τ*|`.
    pub tau_star_gap: f64,
}

/// Brute-force check of [`optimal_stop`] against every Markovian stopping
/// rule on a small lattice.
pub fn enumeration_oracle(
    lat: &RecombiningLattice,
    g: &GeneratorSpec,
    reward: &RewardProcess,
    nu: &LatticeStoppingTime,
) -> Result<EnumerationResult> {
    let opt = optimal_stop(lat, g, reward, nu)?;
    let nu_nodes = nu.hit_nodes(lat);
    let rules = enumerate_stopping_times(lat)?;
    let values: Vec<Vec<f64>> = rules
        .par_iter()
        .map(|tau| {
            let y = g_evaluate(lat, g, tau, &reward.at_stopping(tau))?;
            Ok(nu_nodes.iter().map(|v| y[v.step][v.index]).collect())
        })
        .collect::<Result<_>>()?;
    let mut best = vec![f64::NEG_INFINITY; nu_nodes.len()];
    for row in &values {
        for (b, v) in best.iter_mut().zip(row) {
            *b = b.max(*v);
        }
    }
    let optimal: Vec<f64> = opt.value.iter().map(|(_, v)| *v).collect();
    let gap = optimal
        .iter()
        .zip(&best)
        .map(|(o, b)| (o - b).abs())
        .fold(0.0, f64::max);
    let max_excess = values
        .iter()
        .flat_map(|row| row.iter().zip(&optimal).map(|(v, o)| v - o))
        .fold(f64::NEG_INFINITY, f64::max);
    let at_star = g_evaluate(lat, g, &opt.tau_star, &reward.at_stopping(&opt.tau_star))?;
    let tau_star_gap = nu_nodes
        .iter()
        .zip(&optimal)
        .map(|(v, o)| (at_star[v.step][v.index] - o).abs())
        .fold(0.0, f64::max);
    Ok(EnumerationResult {
        rules: rules.len(),
        best,
        gap,
        max_excess,
        tau_star_gap,
    })
}

/// For candidate values `y`: the largest amount by which `y` fails to
/// dominate `R` or to satisfy `y_i >= Φ(y_{i+1})` (non-positive means `y`
/// is a dominating g-supermartingale).
pub fn dominating_supermartingale_gap(
    lat: &RecombiningLattice,
    g: &GeneratorSpec,
    reward: &RewardProcess,
    y: &[Vec<f64>],
) -> Result<f64> {
    let n = lat.n_steps();
    let mut worst = f64::NEG_INFINITY;
    for (j, v) in y[n].iter().enumerate() {
        worst = worst.max(reward.terminal[j] - v);
    }
    for i in 0..n {
        for j in 0..lat.width(i) {
            let (phi, _) = one_step(lat, g, i, j, &y[i + 1])?;
            worst = worst.max(reward.running[i][j] - y[i][j]).max(phi - y[i][j]);
        }
    }
    Ok(worst)
}
