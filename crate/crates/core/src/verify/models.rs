//! Reference models shared by the experiments, the CLI and the tests.

use std::sync::Arc;

use crate::catalog::space_time_fn;
use crate::error::Result;
use crate::model::{GeneratorSpec, MarkovModel};

/// A model with its default root state.
#[derive(Debug, Clone)]
pub struct StandardModel {
    pub name: &'static str,
    pub model: MarkovModel,
    pub x0: f64,
}

/// `dX = 0.3 dB`, `h(x) = x`, no effective obstacle, `f = 0`.
pub fn linear_martingale() -> Result<StandardModel> {
    let model = MarkovModel::new(
        space_time_fn("zero")?,
        space_time_fn("const:c=0.3")?,
        Arc::new(|x| x),
        space_time_fn("none")?,
        GeneratorSpec::zero(),
        1.0,
        1.0,
        0.3,
        0.0,
        1.0,
    )?;
    Ok(StandardModel {
        name: "linear-martingale",
        model,
        x0: 1.0,
    })
}

/// `dX = 0.2 X dB` (clamped at radius 2), `h = l = (1 − x)⁺`.
pub fn american_put(generator: GeneratorSpec) -> Result<StandardModel> {
    let put = space_time_fn("put:strike=1")?;
    let h = put.clone();
    let model = MarkovModel::new(
        space_time_fn("zero")?,
        space_time_fn("gbm:vol=0.2")?,
        Arc::new(move |x| h(1.0, x)),
        put,
        generator,
        1.0,
        1.0,
        0.4,
        0.0,
        1.0,
    )?
    .with_clamp_radius(2.0)?;
    Ok(StandardModel {
        name: "american-put",
        model,
        x0: 1.0,
    })
}

/// `dX = 0.3 dB`, `h = l = (1 − x)⁺`, `f = (γ/2) z²`.
pub fn pure_quadratic(gamma: f64) -> Result<StandardModel> {
    let put = space_time_fn("put:strike=1")?;
    let h = put.clone();
    let model = MarkovModel::new(
        space_time_fn("zero")?,
        space_time_fn("const:c=0.3")?,
        Arc::new(move |x| h(1.0, x)),
        put,
        GeneratorSpec::quadratic(gamma)?,
        1.0,
        1.0,
        0.3,
        0.0,
        1.0,
    )?;
    Ok(StandardModel {
        name: "pure-quadratic",
        model,
        x0: 1.0,
    })
}

/// The three models cross-validated against the PDE solver.
pub fn standard_models() -> Result<Vec<StandardModel>> {
    Ok(vec![
        linear_martingale()?,
        american_put(GeneratorSpec::zero())?,
        pure_quadratic(1.0)?,
    ])
}
