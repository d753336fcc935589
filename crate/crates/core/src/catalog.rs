//! String-addressable catalog of coefficient functions and generators.
//!
//! Every entry has the form `name` or `name:key=value,key=value`. Values are
//! parsed as `f64`, except `shape` which takes `convex` or `concave`.
//!
//! Space-time functions (drift, volatility, terminal payoff, obstacle):
//!
//! | id                     | rule                         |
//! |------------------------|------------------------------|
//! | `zero`                 | 0                            |
//! | `identity`             | x                            |
//! | `const:c=C`            | C                            |
//! | `linear:a=A,b=B`       | A + B·x                      |
//! | `gbm:vol=V`            | V·max(x, 0)                  |
//! | `put:strike=K`         | max(K − x, 0)                |
//! | `call:strike=K`        | max(x − K, 0)                |
//! | `exp:scale=S`          | exp(S·x)                     |
//! | `floor:c=C`            | −C·(1 + abs(x))              |
//! | `none`                 | same as `floor:c=1`          |
//!
//! Generators `f(t, x, y, z)`:
//!
//! | id                                        | rule                               |
//! |-------------------------------------------|------------------------------------|
//! | `zero`                                    | 0                                  |
//! | `quad:gamma=G`                            | (G/2)·z²                           |
//! | `neg_quad:gamma=G`                        | −(G/2)·z²                          |
//! | `affine:a=A,b=B`                          | A + B·y                            |
//! | `lipschitz_quad:a=A,b=B,gamma=G[,shape=S]`| A + B·abs(y) ± (G/2)·z² (S sets ±) |

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{GeneratorSpec, ZShape};

/// A deterministic function of `(t, x)`.
pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Parsed `name:key=value,...` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogId {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl CatalogId {
    pub fn parse(input: &str) -> Result<Self> {
        let input = input.trim();
        let (name, rest) = match input.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (input, None),
        };
        if name.is_empty() {
            return Err(parse_err(input, "empty catalog name"));
        }
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| parse_err(input, format!("expected key=value, got `{kv}`")))?;
                if params
                    .insert(k.trim().to_string(), v.trim().to_string())
                    .is_some()
                {
                    return Err(parse_err(input, format!("duplicate key `{}`", k.trim())));
                }
            }
        }
        Ok(CatalogId {
            name: name.to_string(),
            params,
        })
    }

    fn num(&self, input: &str, key: &str) -> Result<f64> {
        let raw = self
            .params
            .get(key)
            .ok_or_else(|| parse_err(input, format!("missing parameter `{key}`")))?;
        let v: f64 = raw
            .parse()
            .map_err(|_| parse_err(input, format!("`{key}={raw}` is not a number")))?;
        if !v.is_finite() {
            return Err(parse_err(input, format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    fn expect_keys(&self, input: &str, allowed: &[&str]) -> Result<()> {
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(parse_err(input, format!("unknown parameter `{k}`")));
            }
        }
        Ok(())
    }
}

fn parse_err(input: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// Resolves a space-time function id.
pub fn space_time_fn(input: &str) -> Result<SpaceTimeFn> {
    let id = CatalogId::parse(input)?;
    let f: SpaceTimeFn = match id.name.as_str() {
        "zero" => {
            id.expect_keys(input, &[])?;
            Arc::new(|_, _| 0.0)
        }
        "identity" => {
            id.expect_keys(input, &[])?;
            Arc::new(|_, x| x)
        }
        "const" => {
            id.expect_keys(input, &["c"])?;
            let c = id.num(input, "c")?;
            Arc::new(move |_, _| c)
        }
        "linear" => {
            id.expect_keys(input, &["a", "b"])?;
            let a = id.num(input, "a")?;
            let b = id.num(input, "b")?;
            Arc::new(move |_, x| a + b * x)
        }
        "gbm" => {
            id.expect_keys(input, &["vol"])?;
            let v = id.num(input, "vol")?;
            Arc::new(move |_, x| v * x.max(0.0))
        }
        "put" => {
            id.expect_keys(input, &["strike"])?;
            let k = id.num(input, "strike")?;
            Arc::new(move |_, x| (k - x).max(0.0))
        }
        "call" => {
            id.expect_keys(input, &["strike"])?;
            let k = id.num(input, "strike")?;
            Arc::new(move |_, x| (x - k).max(0.0))
        }
        "exp" => {
            id.expect_keys(input, &["scale"])?;
            let s = id.num(input, "scale")?;
            Arc::new(move |_, x| (s * x).exp())
        }
        "floor" => {
            id.expect_keys(input, &["c"])?;
            let c = id.num(input, "c")?;
            Arc::new(move |_, x| -c * (1.0 + x.abs()))
        }
        "none" => {
            id.expect_keys(input, &[])?;
            Arc::new(|_, x| -(1.0 + x.abs()))
        }
        other => return Err(parse_err(input, format!("unknown function `{other}`"))),
    };
    Ok(f)
}

/// Resolves a generator id into a [`GeneratorSpec`] with its declared constants.
pub fn generator(input: &str) -> Result<GeneratorSpec> {
    let id = CatalogId::parse(input)?;
    match id.name.as_str() {
        "zero" => {
            id.expect_keys(input, &[])?;
            Ok(GeneratorSpec::zero())
        }
        "quad" => {
            id.expect_keys(input, &["gamma"])?;
            GeneratorSpec::quadratic(id.num(input, "gamma")?)
        }
        "neg_quad" => {
            id.expect_keys(input, &["gamma"])?;
            GeneratorSpec::neg_quadratic(id.num(input, "gamma")?)
        }
        "affine" => {
            id.expect_keys(input, &["a", "b"])?;
            GeneratorSpec::affine(id.num(input, "a")?, id.num(input, "b")?)
        }
        "lipschitz_quad" => {
            id.expect_keys(input, &["a", "b", "gamma", "shape"])?;
            let shape = match id.params.get("shape").map(String::as_str) {
                None | Some("convex") => ZShape::Convex,
                Some("concave") => ZShape::Concave,
                Some(other) => {
                    return Err(parse_err(
                        input,
                        format!("shape must be convex or concave, got `{other}`"),
                    ))
                }
            };
            GeneratorSpec::lipschitz_quadratic(
                id.num(input, "a")?,
                id.num(input, "b")?,
                id.num(input, "gamma")?,
                shape,
            )
        }
        other => Err(parse_err(input, format!("unknown generator `{other}`"))),
    }
}
