use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MarkovModel;

use super::RecombiningLattice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
}

/// Euler–Maruyama draws of the forward diffusion on `[t0, T]`.
///
/// Path `i` uses the ChaCha stream `i` of the seed, so the ensemble does not
/// depend on how paths are scheduled across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub t0: f64,
    pub x0: f64,
    pub times: Vec<f64>,
    /// `values[path][step]`.
    pub values: Vec<Vec<f64>>,
}

pub fn simulate_forward(
    m: &MarkovModel,
    t0: f64,
    x0: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be >= 1"));
    }
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be >= 1"));
    }
    if !(t0.is_finite() && t0 >= 0.0 && t0 < m.horizon) {
        return Err(Error::invalid(
            "t0",
            format!("must lie in [0, T) (got {t0})"),
        ));
    }
    let dt = (m.horizon - t0) / n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let times: Vec<f64> = (0..=n_steps)
        .map(|i| {
            if i == n_steps {
                m.horizon
            } else {
                t0 + i as f64 * dt
            }
        })
        .collect();
    let values: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path as u64);
            let mut x = x0;
            let mut out = Vec::with_capacity(n_steps + 1);
            out.push(x);
            for &t in &times[..n_steps] {
                let dw: f64 = StandardNormal.sample(&mut rng);
                x += m.drift_at(t, x) * dt + m.sigma_at(t, x) * sqrt_dt * dw;
                out.push(x);
            }
            out
        })
        .collect();
    Ok(PathEnsemble {
        n_paths,
        seed,
        scheme: Scheme::Euler,
        t0,
        x0,
        times,
        values,
    })
}

impl PathEnsemble {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn terminal(&self) -> Vec<f64> {
        self.values.iter().map(|p| p[p.len() - 1]).collect()
    }

    /// `X_s` on path `path`, frozen at `x0` for `s <= t0` and piecewise
    /// constant between grid times.
    pub fn value_at(&self, path: usize, s: f64) -> f64 {
        if s <= self.t0 {
            return self.x0;
        }
        let dt = self.times[1] - self.times[0];
        let k = (((s - self.t0) / dt + 1e-9).floor() as usize).min(self.n_steps());
        self.values[path][k]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "path_id,step,t,x")?;
        for (p, path) in self.values.iter().enumerate() {
            for (i, x) in path.iter().enumerate() {
                writeln!(w, "{p},{i},{},{}", self.times[i], x)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub p: f64,
    pub varpi: f64,
    /// Monte Carlo estimate of `E[exp(p sup|X|^ϖ)]`.
    pub exp_moment: f64,
    /// `exp(p 3^(ϖ-1) e^(κϖT) |x0|^ϖ)`.
    pub bound_shape: f64,
    /// `exp_moment / bound_shape`.
    pub implied_c_tilde: f64,
    /// Estimate of `E[sup|X − x0|²] / (T − t0)`.
    pub sup_sq_ratio: f64,
    pub overflow: bool,
}

impl MomentReport {
    pub fn bound_violated(&self, c_tilde: f64) -> bool {
        self.overflow || self.exp_moment.is_nan() || self.exp_moment > c_tilde * self.bound_shape
    }
}

pub fn moment_check(e: &PathEnsemble, m: &MarkovModel, p: f64) -> Result<MomentReport> {
    let varpi = m.varpi;
    if varpi.is_nan() || varpi >= 2.0 {
        return Err(Error::invalid("varpi", "must be < 2"));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::invalid("p", "must be > 0"));
    }
    let n = e.n_paths as f64;
    let exponents: Vec<f64> = e
        .values
        .iter()
        .map(|path| p * path.iter().fold(0.0f64, |a, x| a.max(x.abs())).powf(varpi))
        .collect();
    let top = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_mean = top + (exponents.iter().map(|v| (v - top).exp()).sum::<f64>() / n).ln();
    let exp_moment = log_mean.exp();
    let span = m.horizon - e.t0;
    let log_shape =
        p * 3f64.powf(varpi - 1.0) * (m.kappa_lip * varpi * span).exp() * e.x0.abs().powf(varpi);
    let bound_shape = log_shape.exp();
    let sup_sq: f64 = e
        .values
        .iter()
        .map(|path| path.iter().fold(0.0f64, |a, x| a.max((x - e.x0).powi(2))))
        .sum::<f64>()
        / n;
    Ok(MomentReport {
        p,
        varpi,
        exp_moment,
        bound_shape,
        implied_c_tilde: (log_mean - log_shape).exp(),
        sup_sq_ratio: sup_sq / span,
        overflow: !exp_moment.is_finite() || !bound_shape.is_finite(),
    })
}

/// Kolmogorov–Smirnov distance between the lattice law of `X_T` and the
/// empirical law of `samples`, evaluated midway between consecutive lattice
/// atoms (and outside the extreme atoms).
pub fn ks_distance_to_lattice(lat: &RecombiningLattice, samples: &[f64]) -> f64 {
    let n = lat.n_steps();
    let probs = lat.node_probabilities();
    let mut atoms: Vec<(f64, f64)> = lat
        .states(n)
        .iter()
        .cloned()
        .zip(probs[n].iter().cloned())
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let empirical = |x: f64| sorted.partition_point(|&s| s <= x) as f64 / m;

    let mut probes = Vec::with_capacity(atoms.len() + 1);
    probes.push((atoms[0].0 - 1.0, 0.0));
    let mut cum = 0.0;
    for k in 0..atoms.len() {
        cum += atoms[k].1;
        let x = if k + 1 < atoms.len() {
            0.5 * (atoms[k].0 + atoms[k + 1].0)
        } else {
            atoms[k].0 + 1.0
        };
        probes.push((x, cum));
    }
    probes
        .into_iter()
        .map(|(x, f)| (f - empirical(x)).abs())
        .fold(0.0, f64::max)
}
