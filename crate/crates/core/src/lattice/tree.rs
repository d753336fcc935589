use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarkovModel;

const PROB_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Binomial,
    Trinomial,
}

/// `(step, index within step)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId {
    pub step: usize,
    pub index: usize,
}

/// One-step transition out of a node. Branch `b` leads to child `index + b`.
/// `noise[b]` is the standardised Brownian increment on that branch: zero
/// mean and variance `dt` under `probs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub probs: [f64; 3],
    pub noise: [f64; 3],
}

/// Recombining lattice on the uniform grid `t0 < t0 + dt < ... < T`.
///
/// Binomial step `i` has `i + 1` nodes at `x0 + (2j − i) h`, `h = σ √dt`, with
/// the drift carried by tilted probabilities. Trinomial step `i` has `2i + 1`
/// nodes at `x0 + (k − i) h`, `h = √3 σ_* √dt`, with probabilities matching
/// the first two conditional moments exactly. A model with `σ ≡ 0`
/// collapses to a single deterministic chain.
#[derive(Debug, Clone)]
pub struct RecombiningLattice {
    t0: f64,
    horizon: f64,
    n_steps: usize,
    dt: f64,
    times: Vec<f64>,
    structure: Structure,
    degenerate: bool,
    spacing: f64,
    nodes: Vec<Vec<f64>>,
    transitions: Vec<Vec<Transition>>,
}

pub fn build_lattice(
    m: &MarkovModel,
    t0: f64,
    x0: f64,
    n_steps: usize,
    structure: Structure,
) -> Result<RecombiningLattice> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be >= 1"));
    }
    if !(t0.is_finite() && t0 >= 0.0 && t0 < m.horizon) {
        return Err(Error::invalid(
            "t0",
            format!("must lie in [0, T) (got {t0}, T = {})", m.horizon),
        ));
    }
    if !x0.is_finite() {
        return Err(Error::invalid("x0", "must be finite"));
    }
    let dt = (m.horizon - t0) / n_steps as f64;
    let times: Vec<f64> = (0..=n_steps)
        .map(|i| {
            if i == n_steps {
                m.horizon
            } else {
                t0 + i as f64 * dt
            }
        })
        .collect();

    let root_sigma = m.sigma_at(t0, x0).abs();
    let degenerate = match structure {
        Structure::Binomial => root_sigma == 0.0,
        Structure::Trinomial => m.sigma_star == 0.0,
    };
    let mut lat = RecombiningLattice {
        t0,
        horizon: m.horizon,
        n_steps,
        dt,
        times,
        structure,
        degenerate,
        spacing: 0.0,
        nodes: Vec::with_capacity(n_steps + 1),
        transitions: Vec::with_capacity(n_steps),
    };
    if degenerate {
        lat.build_chain(m, x0)?;
    } else {
        match structure {
            Structure::Binomial => lat.build_binomial(m, x0, root_sigma)?,
            Structure::Trinomial => lat.build_trinomial(m, x0)?,
        }
    }
    Ok(lat)
}

fn check_prob(p: f64, step: usize, node: usize) -> Result<f64> {
    if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p) {
        return Err(Error::ProbabilityOutOfRange {
            step,
            node,
            prob: p,
        });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Standardised noise `√dt (Δx − mean) / sd` for the given branch moves.
fn standardise(moves: &[f64; 3], probs: &[f64; 3], arity: usize, dt: f64) -> [f64; 3] {
    let mean: f64 = (0..arity).map(|b| probs[b] * moves[b]).sum();
    let var: f64 = (0..arity)
        .map(|b| probs[b] * (moves[b] - mean).powi(2))
        .sum();
    let mut noise = [0.0; 3];
    if var > 0.0 {
        let scale = (dt / var).sqrt();
        for b in 0..arity {
            noise[b] = (moves[b] - mean) * scale;
        }
    }
    noise
}

impl RecombiningLattice {
    fn build_chain(&mut self, m: &MarkovModel, x0: f64) -> Result<()> {
        let mut x = x0;
        for i in 0..=self.n_steps {
            let t = self.times[i];
            if m.sigma_at(t, x) != 0.0 {
                return Err(Error::NonConstantVolatility {
                    step: i,
                    found: m.sigma_at(t, x),
                    expected: 0.0,
                });
            }
            self.nodes.push(vec![x]);
            if i < self.n_steps {
                self.transitions.push(vec![Transition {
                    probs: [1.0, 0.0, 0.0],
                    noise: [0.0; 3],
                }]);
                x += m.drift_at(t, x) * self.dt;
            }
        }
        Ok(())
    }

    fn build_binomial(&mut self, m: &MarkovModel, x0: f64, sigma: f64) -> Result<()> {
        let h = sigma * self.dt.sqrt();
        self.spacing = h;
        for i in 0..=self.n_steps {
            let t = self.times[i];
            let xs: Vec<f64> = (0..=i)
                .map(|j| x0 + (2.0 * j as f64 - i as f64) * h)
                .collect();
            for &x in &xs {
                let s = m.sigma_at(t, x).abs();
                if (s - sigma).abs() > 1e-12 * sigma.max(1.0) {
                    return Err(Error::NonConstantVolatility {
                        step: i,
                        found: s,
                        expected: sigma,
                    });
                }
            }
            if i < self.n_steps {
                let mut row = Vec::with_capacity(xs.len());
                for (j, &x) in xs.iter().enumerate() {
                    let up = check_prob(0.5 * (1.0 + m.drift_at(t, x) * self.dt / h), i, j)?;
                    let probs = [1.0 - up, up, 0.0];
                    let noise = standardise(&[-h, h, 0.0], &probs, 2, self.dt);
                    row.push(Transition { probs, noise });
                }
                self.transitions.push(row);
            }
            self.nodes.push(xs);
        }
        Ok(())
    }

    fn build_trinomial(&mut self, m: &MarkovModel, x0: f64) -> Result<()> {
        let h = (3.0 * self.dt).sqrt() * m.sigma_star;
        self.spacing = h;
        for i in 0..=self.n_steps {
            let t = self.times[i];
            let xs: Vec<f64> = (0..2 * i + 1)
                .map(|k| x0 + (k as f64 - i as f64) * h)
                .collect();
            if i < self.n_steps {
                let mut row = Vec::with_capacity(xs.len());
                for (k, &x) in xs.iter().enumerate() {
                    let mean = m.drift_at(t, x) * self.dt;
                    let s = m.sigma_at(t, x);
                    let second = (s * s * self.dt + mean * mean) / (h * h);
                    let drift = mean / h;
                    let up = check_prob(0.5 * (second + drift), i, k)?;
                    let down = check_prob(0.5 * (second - drift), i, k)?;
                    let mid = check_prob(1.0 - up - down, i, k)?;
                    let probs = [down, mid, up];
                    let noise = standardise(&[-h, 0.0, h], &probs, 3, self.dt);
                    row.push(Transition { probs, noise });
                }
                self.transitions.push(row);
            }
            self.nodes.push(xs);
        }
        Ok(())
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// `true` when the lattice collapsed to a deterministic chain.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Grid spacing in `x` (0 for a chain).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of children per node.
    pub fn arity(&self) -> usize {
        if self.degenerate {
            1
        } else {
            match self.structure {
                Structure::Binomial => 2,
                Structure::Trinomial => 3,
            }
        }
    }

    pub fn states(&self, step: usize) -> &[f64] {
        &self.nodes[step]
    }

    pub fn width(&self, step: usize) -> usize {
        self.nodes[step].len()
    }

    pub fn transition(&self, step: usize, index: usize) -> &Transition {
        &self.transitions[step][index]
    }

    /// `(child index, probability, noise)` for each branch.
    pub fn children(
        &self,
        step: usize,
        index: usize,
    ) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let tr = &self.transitions[step][index];
        (0..self.arity()).map(move |b| (index + b, tr.probs[b], tr.noise[b]))
    }

    /// `E[V_{i+1} | node]` for values `next` on step `i + 1`.
    pub fn expect(&self, step: usize, index: usize, next: &[f64]) -> f64 {
        let tr = &self.transitions[step][index];
        (0..self.arity())
            .map(|b| tr.probs[b] * next[index + b])
            .sum()
    }

    /// `E[V_{i+1} ΔB | node]`.
    pub fn expect_noise(&self, step: usize, index: usize, next: &[f64]) -> f64 {
        let tr = &self.transitions[step][index];
        (0..self.arity())
            .map(|b| tr.probs[b] * tr.noise[b] * next[index + b])
            .sum()
    }

    /// Conditional mean and variance of `X_{i+1} − X_i` at a node.
    pub fn one_step_moments(&self, step: usize, index: usize) -> (f64, f64) {
        let x = self.nodes[step][index];
        let next = &self.nodes[step + 1];
        let tr = &self.transitions[step][index];
        let mean: f64 = self
            .children(step, index)
            .map(|(c, p, _)| p * (next[c] - x))
            .sum();
        let var: f64 = (0..self.arity())
            .map(|b| tr.probs[b] * (next[index + b] - x - mean).powi(2))
            .sum();
        (mean, var)
    }

    /// Probability of reaching each node from the root.
    pub fn node_probabilities(&self) -> Vec<Vec<f64>> {
        let mut probs = vec![vec![1.0]];
        for i in 0..self.n_steps {
            let mut next = vec![0.0; self.width(i + 1)];
            for (j, &pj) in probs[i].iter().enumerate() {
                for (c, p, _) in self.children(i, j) {
                    next[c] += pj * p;
                }
            }
            probs.push(next);
        }
        probs
    }

    /// Flat index of a node, counting steps in order.
    pub fn flat_id(&self, node: NodeId) -> usize {
        (0..node.step).map(|i| self.width(i)).sum::<usize>() + node.index
    }

    pub fn total_nodes(&self) -> usize {
        (0..=self.n_steps).map(|i| self.width(i)).sum()
    }

    /// Per-node values of `f(t_i, x)`.
    pub fn map_nodes(&self, mut f: impl FnMut(f64, f64) -> f64) -> Vec<Vec<f64>> {
        (0..=self.n_steps)
            .map(|i| self.nodes[i].iter().map(|&x| f(self.times[i], x)).collect())
            .collect()
    }

    /// Per-node terminal values `g(x)` on the last step.
    pub fn map_terminal(&self, mut g: impl FnMut(f64) -> f64) -> Vec<f64> {
        self.nodes[self.n_steps].iter().map(|&x| g(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::space_time_fn;
    use crate::model::GeneratorSpec;
    use std::sync::Arc;

    fn model(drift: &str, sigma: &str, sigma_star: f64) -> MarkovModel {
        MarkovModel::new(
            space_time_fn(drift).unwrap(),
            space_time_fn(sigma).unwrap(),
            Arc::new(|x| x),
            space_time_fn("none").unwrap(),
            GeneratorSpec::zero(),
            1.0,
            1.0,
            sigma_star,
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn constant_chain() {
        let lat = build_lattice(
            &model("zero", "zero", 0.0),
            0.0,
            1.0,
            4,
            Structure::Binomial,
        )
        .unwrap();
        assert!(lat.is_degenerate());
        for i in 0..=4 {
            assert_eq!(lat.states(i), &[1.0]);
        }
    }

    #[test]
    fn drift_chain() {
        let lat = build_lattice(
            &model("const:c=1", "zero", 0.0),
            0.0,
            0.0,
            4,
            Structure::Trinomial,
        )
        .unwrap();
        let xs: Vec<f64> = (0..=4).map(|i| lat.states(i)[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn binomial_variance_exact() {
        let lat = build_lattice(
            &model("zero", "const:c=1", 1.0),
            0.0,
            0.0,
            100,
            Structure::Binomial,
        )
        .unwrap();
        assert!((lat.dt() - 0.01).abs() < 1e-15);
        // E[(ΔX)^2] from the constructed probabilities
        for j in 0..lat.width(50) {
            let x = lat.states(50)[j];
            let second: f64 = lat
                .children(50, j)
                .map(|(c, p, _)| p * (lat.states(51)[c] - x).powi(2))
                .sum();
            assert!((second - 0.01).abs() < 1e-15);
        }
    }

    #[test]
    fn trinomial_moments_exact_for_constant_coefficients() {
        let lat = build_lattice(
            &model("const:c=0.7", "const:c=0.5", 0.5),
            0.0,
            0.2,
            50,
            Structure::Trinomial,
        )
        .unwrap();
        let dt = lat.dt();
        for i in [0, 10, 49] {
            for j in 0..lat.width(i) {
                let (mean, var) = lat.one_step_moments(i, j);
                assert!((mean - 0.7 * dt).abs() < 1e-15);
                assert!((var - 0.25 * dt).abs() < 1e-15);
                let tr = lat.transition(i, j);
                let s: f64 = tr.probs.iter().sum();
                assert!((s - 1.0).abs() < 1e-15);
                assert!(tr.probs.iter().all(|p| (0.0..=1.0).contains(p)));
                let en: f64 = lat.children(i, j).map(|(_, p, n)| p * n).sum();
                let en2: f64 = lat.children(i, j).map(|(_, p, n)| p * n * n).sum();
                assert!(en.abs() < 1e-15 && (en2 - dt).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn binomial_drift_tilt() {
        let lat = build_lattice(
            &model("const:c=0.3", "const:c=1", 1.0),
            0.0,
            0.0,
            20,
            Structure::Binomial,
        )
        .unwrap();
        let dt = lat.dt();
        let (mean, var) = lat.one_step_moments(5, 2);
        assert!((mean - 0.3 * dt).abs() < 1e-15);
        // variance is σ²dt − (b dt)²
        assert!((var - (dt - 0.09 * dt * dt)).abs() < 1e-15);
    }

    #[test]
    fn recombination() {
        let lat = build_lattice(
            &model("zero", "const:c=1", 1.0),
            0.0,
            0.0,
            3,
            Structure::Binomial,
        )
        .unwrap();
        // up-down and down-up land on the same node
        let up_then_down = lat.states(2)[1];
        assert!((up_then_down - 0.0).abs() < 1e-15);
        let lat = build_lattice(
            &model("zero", "const:c=1", 1.0),
            0.0,
            0.0,
            3,
            Structure::Trinomial,
        )
        .unwrap();
        assert_eq!(lat.width(3), 7);
        assert!(lat.states(2)[2].abs() < 1e-15);
    }

    #[test]
    fn large_drift_fails_loudly() {
        let m = model("const:c=100", "const:c=1", 1.0);
        let r = build_lattice(&m, 0.0, 0.0, 4, Structure::Binomial);
        assert!(matches!(r, Err(Error::ProbabilityOutOfRange { .. })));
        assert!(matches!(
            build_lattice(&m, 0.0, 0.0, 4, Structure::Trinomial),
            Err(Error::ProbabilityOutOfRange { .. })
        ));
    }

    #[test]
    fn binomial_rejects_state_dependent_sigma() {
        let m = model("zero", "linear:a=1,b=0.1", 2.0);
        assert!(matches!(
            build_lattice(&m, 0.0, 0.0, 4, Structure::Binomial),
            Err(Error::NonConstantVolatility { .. })
        ));
        assert!(build_lattice(&m, 0.0, 0.0, 4, Structure::Trinomial).is_ok());
    }

    #[test]
    fn node_probabilities_sum_to_one() {
        let lat = build_lattice(
            &model("const:c=0.2", "linear:a=1,b=0.05", 1.0),
            0.0,
            0.0,
            30,
            Structure::Trinomial,
        )
        .unwrap();
        for row in lat.node_probabilities() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(
            lat.total_nodes(),
            (0..=30).map(|i| 2 * i + 1).sum::<usize>()
        );
        assert_eq!(lat.flat_id(NodeId { step: 2, index: 1 }), 1 + 3 + 1);
    }
}
