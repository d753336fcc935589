use crate::error::{Error, Result};
use crate::lattice::RecombiningLattice;

use super::solver::check_flag_shape;

/// `V_N = R_N`, `V_i = max(R_i, E_i[V_{i+1}])`.
pub fn snell_envelope(lat: &RecombiningLattice, reward: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    check_flag_shape(lat, reward)?;
    let n = lat.n_steps();
    let mut v = vec![Vec::new(); n + 1];
    v[n] = reward[n].clone();
    for i in (0..n).rev() {
        v[i] = (0..lat.width(i))
            .map(|j| reward[i][j].max(lat.expect(i, j, &v[i + 1])))
            .collect();
    }
    Ok(v)
}

/// Exact lattice solution of the reflected problem with driver `(γ/2) z²` in
/// the continuous-time sense: `(1/γ) ln Snell(e^{γR})`, with `R` the obstacle
/// before `T` and the terminal payoff at `T`.
///
/// Works with `e^{γR} − 1` so that small `γ` keeps full precision.
pub fn cole_hopf_oracle(
    lat: &RecombiningLattice,
    gamma: f64,
    terminal: impl Fn(f64) -> f64,
    obstacle: impl Fn(f64, f64) -> f64,
) -> Result<Vec<Vec<f64>>> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(
            "gamma",
            format!("must be > 0 (got {gamma})"),
        ));
    }
    let n = lat.n_steps();
    let mut reward = lat.map_nodes(|t, x| (gamma * obstacle(t, x)).exp_m1());
    reward[n] = lat.map_terminal(|x| (gamma * terminal(x)).exp_m1());
    if reward.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Overflow {
            context: format!("exp(gamma * reward) with gamma = {gamma}"),
        });
    }
    let v = snell_envelope(lat, &reward)?;
    Ok(v.into_iter()
        .map(|row| row.into_iter().map(|w| w.ln_1p() / gamma).collect())
        .collect())
}
