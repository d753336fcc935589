use crate::error::{Error, Result};

/// Thomas algorithm for `sub[i] u[i-1] + diag[i] u[i] + sup[i] u[i+1] = rhs[i]`.
/// `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::Shape("tridiagonal bands differ in length".into()));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - sub[i] * c[i - 1];
        }
        if !(pivot.is_finite() && pivot.abs() > 1e-300) {
            return Err(Error::TridiagonalBreakdown { row: i });
        }
        c[i] = if i + 1 < n { sup[i] / pivot } else { 0.0 };
        d[i] = if i == 0 {
            rhs[0] / pivot
        } else {
            (rhs[i] - sub[i] * d[i - 1]) / pivot
        };
    }
    let mut u = d;
    for i in (0..n.saturating_sub(1)).rev() {
        u[i] -= c[i] * u[i + 1];
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::TridiagonalBreakdown { row: n });
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [2 -1 0; -1 2 -1; 0 -1 2] u = [1 0 1] -> u = [1 1 1]
        let u = solve_tridiagonal(
            &[0.0, -1.0, -1.0],
            &[2.0; 3],
            &[-1.0, -1.0, 0.0],
            &[1.0, 0.0, 1.0],
        )
        .unwrap();
        for v in u {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_pivot_breaks_down() {
        let r = solve_tridiagonal(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]);
        assert_eq!(r, Err(Error::TridiagonalBreakdown { row: 0 }));
    }
}
