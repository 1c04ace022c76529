//! Exact maximizer of entropy plus a linear functional.
//!
//! `max_p { H(X) - E[a(X)] } = log2 Xi` with `Xi = sum_x 2^{-a(x)}` and the
//! maximum attained at `p(x) = 2^{-a(x)} / Xi`. All entropies are in bits.

use super::EngineError;

/// Returns `(log2 sum_x 2^{-a(x)}, argmax distribution)`.
///
/// Shifted by `min a` before exponentiation so large penalties cannot
/// underflow the whole sum.
pub fn solve_inner_softmax(a: &[f64]) -> Result<(f64, Vec<f64>), EngineError> {
    if a.is_empty() {
        return Err(EngineError::EmptySupport);
    }
    let shift = a.iter().copied().fold(f64::INFINITY, f64::min);
    debug_assert!(shift.is_finite(), "non-finite penalty in softmax");
    let weights: Vec<f64> = a.iter().map(|&ai| (-(ai - shift)).exp2()).collect();
    let xi: f64 = weights.iter().sum();
    let dist = weights.iter().map(|w| w / xi).collect();
    Ok((xi.log2() - shift, dist))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_when_costs_are_flat() {
        let (value, dist) = solve_inner_softmax(&[0.0, 0.0, 0.0]).unwrap();
        assert!((value - 3f64.log2()).abs() < 1e-15);
        for p in dist {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn binary_penalty_example() {
        // a = (0, 1, 1): value log2(1 + 2 * 1/2) = 1, dist (1/2, 1/4, 1/4).
        let (value, dist) = solve_inner_softmax(&[0.0, 1.0, 1.0]).unwrap();
        assert!((value - 1.0).abs() < 1e-15);
        assert!((dist[0] - 0.5).abs() < 1e-15);
        assert!((dist[1] - 0.25).abs() < 1e-15);
        assert!((dist[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn reproduces_empty_battery_bellman_row() {
        // Applied to the b=0 row of the adjacent Bellman system: with
        // penalties a = (0, -h1, -h2) shifted by 2*rho for charging,
        // the row value is log2(1 + 2^h1 + 2^h2) - 2*rho.
        let (h1, h2, rho) = (0.37, 1.21, 0.4);
        let a = vec![2.0 * rho, 2.0 * rho - h1, 2.0 * rho - h2];
        let (value, _) = solve_inner_softmax(&a).unwrap();
        let expected = (1.0 + h1.exp2() + h2.exp2()).log2() - 2.0 * rho;
        assert!((value - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_support_is_an_error() {
        assert!(matches!(
            solve_inner_softmax(&[]),
            Err(EngineError::EmptySupport)
        ));
    }

    #[test]
    fn huge_penalties_do_not_underflow() {
        let (value, dist) = solve_inner_softmax(&[5000.0, 5001.0]).unwrap();
        assert!(value.is_finite());
        assert!((value + 5000.0 - 1.5f64.log2()).abs() < 1e-9);
        assert!((dist[0] + dist[1] - 1.0).abs() < 1e-15);
    }
}
