use std::fmt;
use std::sync::Arc;

use crate::catalog::SpaceTimeFn;
use crate::error::{Error, Result};

use super::GeneratorSpec;

/// Terminal payoff as a function of the terminal state.
pub type TerminalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The triple `(terminal ξ, generator f, obstacle L)` an RBSDE is posed with,
/// in Markovian form: `ξ = terminal(X_T)` and `L_t = obstacle(t, X_t)`.
#[derive(Clone)]
pub struct ParameterSet {
    pub terminal: TerminalFn,
    pub obstacle: SpaceTimeFn,
    pub generator: GeneratorSpec,
}

impl fmt::Debug for ParameterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParameterSet")
            .field("generator", &self.generator)
            .finish_non_exhaustive()
    }
}

impl ParameterSet {
    pub fn new(terminal: TerminalFn, obstacle: SpaceTimeFn, generator: GeneratorSpec) -> Self {
        ParameterSet {
            terminal,
            obstacle,
            generator,
        }
    }

    /// Checks `L_T <= ξ` on the supplied terminal states.
    pub fn check_terminal_dominance(&self, horizon: f64, states: &[f64]) -> Result<()> {
        for &x in states {
            let l = (self.obstacle)(horizon, x);
            let xi = (self.terminal)(x);
            if l > xi {
                return Err(Error::invalid(
                    "obstacle",
                    format!("L(T, {x}) = {l} exceeds terminal value {xi}"),
                ));
            }
        }
        Ok(())
    }

    /// `(ξ + dxi, f + df, L + dl)`.
    pub fn shifted(&self, dxi: f64, df: f64, dl: f64) -> ParameterSet {
        let terminal = self.terminal.clone();
        let obstacle = self.obstacle.clone();
        ParameterSet {
            terminal: Arc::new(move |x| terminal(x) + dxi),
            obstacle: Arc::new(move |t, x| obstacle(t, x) + dl),
            generator: self.generator.shifted(df),
        }
    }

    pub fn with_generator(&self, generator: GeneratorSpec) -> ParameterSet {
        ParameterSet {
            generator,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_is_checked() {
        let p = ParameterSet::new(
            Arc::new(|x: f64| (1.0 - x).max(0.0)),
            Arc::new(|_, x: f64| (1.0 - x).max(0.0)),
            GeneratorSpec::zero(),
        );
        assert!(p.check_terminal_dominance(1.0, &[-1.0, 0.5, 2.0]).is_ok());
        let bad = p.shifted(0.0, 0.0, 0.1);
        assert!(bad.check_terminal_dominance(1.0, &[0.5]).is_err());
        let shifted = p.shifted(0.5, 0.0, 0.0);
        assert_eq!((shifted.terminal)(0.5), 1.0);
    }
}
