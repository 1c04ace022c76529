//! Charger-adjacent engine: relative value iteration on battery levels.
//!
//! The state is the battery level, the action an energy symbol plus an input
//! distribution supported on transmittable symbols, and the Bellman equation
//!
//! `lambda + h(b) = max_e max_p { H(X) - rho e + E[h(min(b+e,B̄) - phi(X))] }`.
//!
//! The inner maximization over `p` is done exactly by the softmax closed
//! form; the outer iteration is damped so periodic optimal chains still
//! converge, and the returned residual is computed with the undamped
//! operator, giving the certificate `J ∈ [lambda - r, lambda + r]`.

use crate::chain::closed_classes_from;
use crate::graphs::BatteryGraphSet;

use super::softmax::solve_inner_softmax;
use super::{DualSolve, EngineError, Policy, SolveOptions};

struct Transitions {
    /// `levels[i]` is the battery value of local state `i`.
    levels: Vec<u64>,
    /// `next[i][ei][x] = Some(local successor)` when symbol `x` is feasible
    /// from `levels[i]` under energy index `ei`.
    next: Vec<Vec<Vec<Option<usize>>>>,
}

fn transitions(graphs: &BatteryGraphSet) -> Transitions {
    let levels = graphs.reachable_levels();
    let local: Vec<Option<usize>> = graphs
        .levels()
        .iter()
        .map(|&b| levels.iter().position(|&l| l == b))
        .collect();
    let spec = graphs.spec();
    let next = levels
        .iter()
        .map(|&b| {
            spec.energies()
                .iter()
                .map(|&e| {
                    (0..spec.num_symbols())
                        .map(|x| {
                            crate::channel::step_battery(
                                crate::channel::BatteryLevel(b),
                                e,
                                x,
                                spec,
                            )
                            .map(|nb| local[nb.0 as usize].expect("successor reachable"))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Transitions { levels, next }
}

/// One application of the Bellman operator at state `i`; returns the row
/// value plus the maximizing energy and input distribution. Energy ties go
/// to the smaller value.
fn bellman_row(
    tr: &Transitions,
    graphs: &BatteryGraphSet,
    rho: f64,
    h: &[f64],
    i: usize,
) -> (f64, u64, Vec<f64>) {
    let spec = graphs.spec();
    let mut best = f64::NEG_INFINITY;
    let mut best_e = 0u64;
    let mut best_dist: Vec<f64> = Vec::new();
    for (ei, &e) in spec.energies().iter().enumerate() {
        let feasible: Vec<usize> = (0..spec.num_symbols())
            .filter(|&x| tr.next[i][ei][x].is_some())
            .collect();
        let a: Vec<f64> = feasible
            .iter()
            .map(|&x| rho * e as f64 - h[tr.next[i][ei][x].unwrap()])
            .collect();
        let (value, dist) = solve_inner_softmax(&a).expect("zero symbol keeps support non-empty");
        if value > best + 1e-15 {
            best = value;
            best_e = e;
            let mut full = vec![0.0; spec.num_symbols()];
            for (k, &x) in feasible.iter().enumerate() {
                full[x] = dist[k];
            }
            best_dist = full;
        }
    }
    (best, best_e, best_dist)
}

/// Solves the charger-adjacent dual `J_X(rho)` by damped relative value
/// iteration over the reachable battery levels.
pub fn adjacent_relative_vi(
    graphs: &BatteryGraphSet,
    rho: f64,
    opts: &SolveOptions,
) -> Result<DualSolve, EngineError> {
    let tr = transitions(graphs);
    let n = tr.levels.len();
    let tau = opts.damping;
    let mut h = vec![0.0f64; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let t: Vec<f64> = (0..n)
            .map(|i| bellman_row(&tr, graphs, rho, &h, i).0)
            .collect();
        let diffs: Vec<f64> = (0..n).map(|i| t[i] - h[i]).collect();
        let hi = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = diffs.iter().copied().fold(f64::INFINITY, f64::min);
        lambda = 0.5 * (hi + lo);
        residual = 0.5 * (hi - lo);
        if residual < opts.tolerance {
            break;
        }
        let anchor = (1.0 - tau) * h[0] + tau * t[0];
        for i in 0..n {
            h[i] = (1.0 - tau) * h[i] + tau * t[i] - anchor;
        }
    }
    if residual >= opts.tolerance {
        return Err(EngineError::NonConvergence {
            iterations,
            residual,
        });
    }

    let rows: Vec<(f64, u64, Vec<f64>)> =
        (0..n).map(|i| bellman_row(&tr, graphs, rho, &h, i)).collect();
    let energy: Vec<u64> = rows.iter().map(|r| r.1).collect();
    let input_dist: Vec<Vec<f64>> = rows.iter().map(|r| r.2.clone()).collect();

    // Normalize h at the lowest-index state of the recurrent class induced
    // by the optimal policy.
    let adj = policy_support(&tr, graphs, &energy, &input_dist);
    let start = tr
        .levels
        .iter()
        .position(|&b| b == graphs.spec().capacity())
        .expect("full battery reachable");
    let classes = closed_classes_from(&adj, start);
    let ref_state = classes
        .iter()
        .flat_map(|c| c.iter().copied())
        .min()
        .unwrap_or(0);
    let shift = h[ref_state];
    let h: Vec<f64> = h.iter().map(|v| v - shift).collect();

    Ok(DualSolve {
        rho,
        lambda,
        h,
        policy: Policy::Adjacent {
            states: tr.levels.clone(),
            energy,
            input_dist,
        },
        bellman_residual: residual,
        iterations,
    })
}

fn policy_support(
    tr: &Transitions,
    graphs: &BatteryGraphSet,
    energy: &[u64],
    input_dist: &[Vec<f64>],
) -> Vec<Vec<usize>> {
    let spec = graphs.spec();
    (0..tr.levels.len())
        .map(|i| {
            let ei = spec
                .energies()
                .iter()
                .position(|&e| e == energy[i])
                .expect("policy energy in alphabet");
            let mut succ: Vec<usize> = (0..spec.num_symbols())
                .filter(|&x| input_dist[i][x] > 1e-15)
                .filter_map(|x| tr.next[i][ei][x])
                .collect();
            succ.sort_unstable();
            succ.dedup();
            succ
        })
        .collect()
}

/// Independent cross-check of a fixed-energy-policy solve: the average
/// reward equals `log2` of the Perron root of the weight matrix
/// `W[b][b'] = (#edges b -> b' under e(b)) * 2^{-rho e(b)}`.
///
/// `energy` gives the policy per reachable level, aligned with
/// `graphs.reachable_levels()`. Power iteration runs on the recurrent class;
/// a policy with several closed classes is reported as reducible.
pub fn adjacent_perron_check(
    graphs: &BatteryGraphSet,
    energy: &[u64],
    rho: f64,
) -> Result<f64, EngineError> {
    let levels = graphs.reachable_levels();
    assert_eq!(levels.len(), energy.len(), "one energy per reachable level");
    let n = levels.len();
    let local: Vec<Option<usize>> = graphs
        .levels()
        .iter()
        .map(|&b| levels.iter().position(|&l| l == b))
        .collect();

    let mut w = vec![vec![0.0f64; n]; n];
    for (i, &b) in levels.iter().enumerate() {
        let a = graphs
            .adjacency(energy[i])
            .map_err(|_| EngineError::EmptySupport)?;
        let scale = (-(rho * energy[i] as f64)).exp2();
        for (bp, &mult) in a[b as usize].iter().enumerate() {
            if mult > 0 {
                let j = local[bp].expect("successor reachable");
                w[i][j] += mult as f64 * scale;
            }
        }
    }

    let adj: Vec<Vec<usize>> = w
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let classes = crate::chain::closed_classes(&adj);
    if classes.len() != 1 {
        return Err(EngineError::ReducibleClass);
    }
    let class = &classes[0];
    let m = class.len();
    // Power iteration on W + I restricted to the class; the +I shift makes
    // periodic classes converge, and shifts the root by exactly 1.
    let mut v = vec![1.0f64 / m as f64; m];
    let mut root = 0.0f64;
    for _ in 0..200_000 {
        let mut next = vec![0.0f64; m];
        for (ii, &i) in class.iter().enumerate() {
            for (jj, &j) in class.iter().enumerate() {
                let wij = w[i][j] + if i == j { 1.0 } else { 0.0 };
                if wij != 0.0 {
                    next[jj] += v[ii] * wij;
                }
            }
        }
        let norm: f64 = next.iter().sum();
        for x in &mut next {
            *x /= norm;
        }
        let prev = root;
        root = norm;
        v = next;
        if (root - prev).abs() < 1e-10 * root.max(1.0) {
            return Ok((root - 1.0).log2());
        }
    }
    Err(EngineError::NonConvergence {
        iterations: 200_000,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{binary_precision_spec, ternary_spec};
    use crate::graphs::build_graphs;

    fn solve(rho: f64) -> DualSolve {
        let graphs = build_graphs(&ternary_spec());
        adjacent_relative_vi(&graphs, rho, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn small_rho_always_charges() {
        // rho = 1/4 sits in the always-charge regime:
        // lambda = log2(2 + 2^{2 rho}) - 2 rho, e* = (2,2,0), h = (0,0,2 rho).
        let rho = 0.25;
        let solve = solve(rho);
        let expected = (2.0 + (2.0 * rho).exp2()).log2() - 2.0 * rho;
        assert!((solve.lambda - expected).abs() < 1e-9, "{}", solve.lambda);
        match &solve.policy {
            Policy::Adjacent { states, energy, .. } => {
                assert_eq!(states, &vec![0, 1, 2]);
                assert_eq!(energy, &vec![2, 2, 0]);
            }
            other => panic!("unexpected policy {other:?}"),
        }
        assert!(solve.h[0].abs() < 1e-8);
        assert!(solve.h[1].abs() < 1e-8);
        assert!((solve.h[2] - 2.0 * rho).abs() < 1e-8);
        assert!(solve.bellman_residual < 1e-10);
    }

    #[test]
    fn large_rho_charges_only_when_empty() {
        // rho = 1: lambda = 2 log2(1 + sqrt(1 + 2^4)) - 2 rho - 2.
        let rho = 1.0;
        let solve = solve(rho);
        let expected = 2.0 * (1.0 + 17f64.sqrt()).log2() - 2.0 * rho - 2.0;
        assert!((solve.lambda - expected).abs() < 1e-9);
        match &solve.policy {
            Policy::Adjacent { energy, .. } => assert_eq!(energy, &vec![2, 0, 0]),
            other => panic!("unexpected policy {other:?}"),
        }
        // h(1) = log2(-1 + sqrt(1 + 2^{2rho+2})) - 1, h(2) = 2 rho.
        let h1 = (-1.0 + (1.0 + (2.0 * rho + 2.0).exp2()).sqrt()).log2() - 1.0;
        assert!((solve.h[1] - h1).abs() < 1e-8);
        assert!((solve.h[2] - 2.0 * rho).abs() < 1e-8);
    }

    #[test]
    fn binary_precision_at_zero_rho_gives_one_bit() {
        let graphs = build_graphs(&binary_precision_spec());
        let solve = adjacent_relative_vi(&graphs, 0.0, &SolveOptions::default()).unwrap();
        assert!((solve.lambda - 1.0).abs() < 1e-10);
    }

    #[test]
    fn perron_check_agrees_with_rvi() {
        let graphs = build_graphs(&ternary_spec());
        let rho = 1.0;
        let solve = adjacent_relative_vi(&graphs, rho, &SolveOptions::default()).unwrap();
        let lambda = adjacent_perron_check(&graphs, &[2, 0, 0], rho).unwrap();
        assert!((lambda - solve.lambda).abs() < 1e-8);
    }

    #[test]
    fn perron_always_charge_is_log3() {
        let graphs = build_graphs(&ternary_spec());
        let lambda = adjacent_perron_check(&graphs, &[2, 2, 2], 0.0).unwrap();
        assert!((lambda - 3f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn perron_binary_charge_iff_empty() {
        let graphs = build_graphs(&binary_precision_spec());
        let lambda = adjacent_perron_check(&graphs, &[1, 0], 0.0).unwrap();
        assert!((lambda - 1.0).abs() < 1e-9);
    }
}
