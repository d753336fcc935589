use crate::error::{Error, Result};
use crate::lattice::RecombiningLattice;
use crate::model::{AprioriConstants, ParameterSet};

use super::solver::{check_flag_shape, DiscreteSolution};

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln E[exp(c · max_{s >= t_i} A_s) | node]` for per-node values `A`,
/// computed by backward induction on the lattice augmented with the running
/// maximum. The running maximum only takes values among the distinct entries
/// of `A`, so the cost is `nodes × distinct values`.
pub fn log_exp_future_sup(
    lat: &RecombiningLattice,
    values: &[Vec<f64>],
    c: f64,
) -> Result<Vec<Vec<f64>>> {
    check_flag_shape(lat, values)?;
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("path functional input"));
    }
    let mut levels: Vec<f64> = values.iter().flatten().cloned().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let level_of = |v: f64| levels.partition_point(|&l| l < v);
    let n = lat.n_steps();
    let nl = levels.len();

    // w[j * nl + k] = ln E[exp(c max(level_k, sup_{s >= i} A_s)) | node j]
    let mut w: Vec<f64> = Vec::with_capacity(lat.width(n) * nl);
    for &a in &values[n] {
        let ka = level_of(a);
        for k in 0..nl {
            w.push(c * levels[k.max(ka)]);
        }
    }
    let mut out = vec![Vec::new(); n + 1];
    out[n] = values[n].iter().map(|&a| c * a).collect();
    for i in (0..n).rev() {
        let width = lat.width(i);
        let mut prev = vec![f64::NEG_INFINITY; width * nl];
        let mut here = Vec::with_capacity(width);
        for j in 0..width {
            let ka = level_of(values[i][j]);
            let branches: Vec<(usize, f64)> = lat
                .children(i, j)
                .filter(|(_, p, _)| *p > 0.0)
                .map(|(ch, p, _)| (ch, p.ln()))
                .collect();
            for k in 0..nl {
                let kk = k.max(ka);
                if k < ka && k > 0 {
                    prev[j * nl + k] = prev[j * nl];
                    continue;
                }
                let mut acc = f64::NEG_INFINITY;
                for &(ch, lp) in &branches {
                    acc = log_add(acc, lp + w[ch * nl + kk]);
                }
                prev[j * nl + k] = acc;
            }
            here.push(prev[j * nl + ka]);
        }
        out[i] = here;
        w = prev;
    }
    Ok(out)
}

/// Largest excess of `Y` over the a priori bound
/// `c0 + (1/γ) ln E[exp(γ e^{βT} (ξ⁺ ∨ sup_{s >= t} L⁺_s)) | F_t]` on the
/// lattice. The supremum over the remaining path dominates the pathwise
/// supremum only from `t` on, which is the Markov form of the bound and is
/// implied by it.
pub fn apriori_bound_check(
    s: &DiscreteSolution<'_>,
    p: &ParameterSet,
    c: &AprioriConstants,
) -> Result<f64> {
    let lat = s.lattice();
    let n = lat.n_steps();
    let mut a: Vec<Vec<f64>> = s
        .obstacle
        .iter()
        .map(|row| row.iter().map(|l| l.max(0.0)).collect())
        .collect();
    let xi = lat.map_terminal(|x| (p.terminal)(x));
    for (j, v) in xi.iter().enumerate() {
        a[n][j] = a[n][j].max(v.max(0.0));
    }
    let scale = c.gamma * (c.beta * c.horizon).exp();
    let log_rhs = log_exp_future_sup(lat, &a, scale)?;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..=n {
        for j in 0..lat.width(i) {
            let rhs = c.c0 + log_rhs[i][j] / c.gamma;
            worst = worst.max(s.y[i][j] - rhs);
        }
    }
    Ok(worst)
}
