//! Fully cognitive charger engines.
//!
//! The belief formulation tracks `s_t(b) = p(b_t | x^{t-1})` over battery
//! levels, with the action a conditional distribution `p(x, e | b)` that is
//! zero on untransmittable triples. Because the update conditions on the
//! observed input and the inner optimum picks one energy per `(b, x)`
//! (entropy is a function of the input marginal alone, and cost is linear,
//! so randomizing the energy for a given input buys nothing), beliefs
//! reached from the deterministic start stay singletons: the engine runs
//! relative value iteration over reachable levels with per-(level, symbol)
//! energy choice folded into the Bellman operator,
//!
//! `lambda + h(b) = log2 sum_x 2^{ max_e [ -rho e + h(min(b+e,B̄)-phi(x)) ] }`.
//!
//! The reduced engine instead fixes a certified causal minimal charging
//! function `e*(b, x)` and solves the finite MDP it induces on its recurrent
//! battery levels, mirroring the pruned-graph construction.

use crate::chain::closed_classes_from;
use crate::channel::{step_battery, BatteryLevel};
use crate::graphs::BatteryGraphSet;
use crate::oracle::minimal_energy_for;

use super::softmax::solve_inner_softmax;
use super::{DualSolve, EngineError, Policy, SolveOptions};

/// A causal minimal charging function `e*(b, x)` with its deterministic
/// transition `b' = f_B(b, x)`, certified minimal on all input sequences up
/// to `certified_depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalChargingRule {
    /// `energy[b][x]`: energy emitted when symbol `x` is sent at level `b`;
    /// `None` where no occurrence was observed (untransmittable or unreached).
    pub energy: Vec<Vec<Option<u64>>>,
    /// Successor level under the rule.
    pub next: Vec<Vec<Option<u64>>>,
    /// Closed recurrent classes of `f_B` reachable from the full battery,
    /// each sorted ascending.
    pub recurrent: Vec<Vec<u64>>,
    pub certified_depth: usize,
}

fn advance(digits: &mut [usize], k: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < k {
            return true;
        }
        *d = 0;
    }
    false
}

/// Attempts to build a per-(level, symbol) minimal charging rule.
///
/// Replays the minimal-cost energy assignment of every input sequence up to
/// `depth`, proposes the unanimous per-(b, x) energy, and certifies that the
/// causal rule reproduces the clairvoyant minimal cost on every such
/// sequence. Any ambiguity or certification miss reports the reduction as
/// unavailable rather than guessing.
pub fn minimal_charging_policy(
    graphs: &BatteryGraphSet,
    depth: usize,
) -> Result<MinimalChargingRule, EngineError> {
    let spec = graphs.spec();
    let nb = spec.capacity() as usize + 1;
    let nx = spec.num_symbols();
    let mut energy: Vec<Vec<Option<u64>>> = vec![vec![None; nx]; nb];

    for n in 1..=depth {
        let mut xs = vec![0usize; n];
        loop {
            if let Some(min) = minimal_energy_for(spec, &xs) {
                let mut b = BatteryLevel(spec.capacity());
                for (t, &x) in xs.iter().enumerate() {
                    let e = min.energies[t];
                    match energy[b.0 as usize][x] {
                        None => energy[b.0 as usize][x] = Some(e),
                        Some(prev) if prev == e => {}
                        Some(prev) => {
                            return Err(EngineError::ReductionUnavailable(format!(
                                "state {} symbol {} takes both energy {} and {}",
                                b.0, x, prev, e
                            )))
                        }
                    }
                    b = step_battery(b, e, x, spec).expect("minimal path feasible");
                }
            }
            if !advance(&mut xs, nx) {
                break;
            }
        }
    }

    let next: Vec<Vec<Option<u64>>> = (0..nb)
        .map(|b| {
            (0..nx)
                .map(|x| {
                    energy[b][x].map(|e| {
                        step_battery(BatteryLevel(b as u64), e, x, spec)
                            .expect("rule step feasible")
                            .0
                    })
                })
                .collect()
        })
        .collect();

    // Certification: the causal rule must reproduce the minimal cost of
    // every feasible sequence up to the verification depth.
    for n in 1..=depth {
        let mut xs = vec![0usize; n];
        loop {
            if let Some(min) = minimal_energy_for(spec, &xs) {
                let mut b = spec.capacity();
                let mut cost = 0u64;
                let mut ok = true;
                for &x in &xs {
                    match energy[b as usize][x] {
                        Some(e) => {
                            cost += e;
                            b = next[b as usize][x].expect("rule transition");
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok || cost != min.total {
                    return Err(EngineError::ReductionUnavailable(format!(
                        "causal replay of {xs:?} costs {} but the minimum is {}",
                        if ok { cost.to_string() } else { "inf".into() },
                        min.total
                    )));
                }
            }
            if !advance(&mut xs, nx) {
                break;
            }
        }
    }

    // Recurrent classes of the induced deterministic transition.
    let adj: Vec<Vec<usize>> = (0..nb)
        .map(|b| {
            let mut succ: Vec<usize> = (0..nx)
                .filter_map(|x| next[b][x].map(|nb| nb as usize))
                .collect();
            succ.sort_unstable();
            succ.dedup();
            succ
        })
        .collect();
    let recurrent: Vec<Vec<u64>> = closed_classes_from(&adj, spec.capacity() as usize)
        .into_iter()
        .map(|class| class.into_iter().map(|b| b as u64).collect())
        .collect();
    if recurrent.is_empty() {
        return Err(EngineError::NoRecurrentClass);
    }

    Ok(MinimalChargingRule {
        energy,
        next,
        recurrent,
        certified_depth: depth,
    })
}

/// Relative value iteration for a fixed per-(b, x) energy table restricted
/// to `states`; `support(b)` are the symbols with a defined energy.
fn rule_rvi(
    states: &[u64],
    energy: &[Vec<Option<u64>>],
    next: &[Vec<Option<u64>>],
    rho: f64,
    opts: &SolveOptions,
) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>, f64, usize), EngineError> {
    let n = states.len();
    let nx = energy[0].len();
    let local = |b: u64| states.iter().position(|&s| s == b).expect("state in class");
    let tau = opts.damping;
    let mut h = vec![0.0f64; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    let row = |h: &[f64], i: usize| -> Result<(f64, Vec<f64>), EngineError> {
        let b = states[i] as usize;
        let feasible: Vec<usize> = (0..nx).filter(|&x| energy[b][x].is_some()).collect();
        let a: Vec<f64> = feasible
            .iter()
            .map(|&x| {
                let e = energy[b][x].unwrap();
                let nb = next[b][x].unwrap();
                rho * e as f64 - h[local(nb)]
            })
            .collect();
        let (value, dist) = solve_inner_softmax(&a)?;
        let mut full = vec![0.0; nx];
        for (k, &x) in feasible.iter().enumerate() {
            full[x] = dist[k];
        }
        Ok((value, full))
    };

    while iterations < opts.max_iterations {
        iterations += 1;
        let mut t = vec![0.0f64; n];
        for (i, ti) in t.iter_mut().enumerate() {
            *ti = row(&h, i)?.0;
        }
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
    let dists: Vec<Vec<f64>> = (0..n)
        .map(|i| row(&h, i).map(|r| r.1))
        .collect::<Result<_, _>>()?;
    Ok((lambda, h, dists, residual, iterations))
}

/// Solves the cognitive dual `J_M(rho)` on the finite MDP induced by a
/// certified minimal charging rule: reward `H(X) - rho E[e*(b, X)]`,
/// dynamics `b' = f_B(b, x)`. With several reachable closed classes the
/// controller steers to the best one during the (reward-irrelevant)
/// transient, so the value is the classwise maximum.
pub fn cognitive_reduced_vi(
    _graphs: &BatteryGraphSet,
    rule: &MinimalChargingRule,
    rho: f64,
    opts: &SolveOptions,
) -> Result<DualSolve, EngineError> {
    let mut best: Option<DualSolve> = None;
    for class in &rule.recurrent {
        let (lambda, h, dists, residual, iterations) =
            rule_rvi(class, &rule.energy, &rule.next, rho, opts)?;
        let solve = DualSolve {
            rho,
            lambda,
            h,
            policy: Policy::CognitiveRule {
                states: class.clone(),
                energy: class
                    .iter()
                    .map(|&b| rule.energy[b as usize].clone())
                    .collect(),
                next: class
                    .iter()
                    .map(|&b| rule.next[b as usize].clone())
                    .collect(),
                input_dist: dists,
            },
            bellman_residual: residual,
            iterations,
        };
        if best.as_ref().map_or(true, |b| solve.lambda > b.lambda) {
            best = Some(solve);
        }
    }
    best.ok_or(EngineError::NoRecurrentClass)
}

/// Solves the cognitive dual `J_M(rho)` on the belief MDP.
///
/// Starting from the deterministic belief at the full battery, the inner
/// optimum resolves each `(level, symbol)` to its best single energy, so
/// all reachable beliefs are singletons over reachable levels; the engine
/// runs certified relative value iteration there, re-maximizing the energy
/// choice inside every Bellman application.
pub fn cognitive_belief_vi(
    graphs: &BatteryGraphSet,
    rho: f64,
    opts: &SolveOptions,
) -> Result<DualSolve, EngineError> {
    let spec = graphs.spec();
    let states = graphs.reachable_levels();
    let n = states.len();
    if n > opts.state_cap {
        return Err(EngineError::StateCapExceeded {
            cap: opts.state_cap,
        });
    }
    let nx = spec.num_symbols();
    let local = |b: u64| states.iter().position(|&s| s == b).expect("reachable");

    // q(b, x | h) = max_e [-rho e + h(step(b, e, x))], with the maximizing
    // energy (ties toward lower energy).
    let q = |h: &[f64], b: u64, x: usize| -> Option<(f64, u64, u64)> {
        let mut best: Option<(f64, u64, u64)> = None;
        for &e in spec.energies() {
            if let Some(nb) = step_battery(BatteryLevel(b), e, x, spec) {
                let v = -rho * e as f64 + h[local(nb.0)];
                if best.map_or(true, |(bv, _, _)| v > bv + 1e-15) {
                    best = Some((v, e, nb.0));
                }
            }
        }
        best
    };

    let tau = opts.damping;
    let mut h = vec![0.0f64; n];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let apply = |h: &[f64], i: usize| -> Result<f64, EngineError> {
        let b = states[i];
        let a: Vec<f64> = (0..nx).filter_map(|x| q(h, b, x)).map(|(v, _, _)| -v).collect();
        let (value, _) = solve_inner_softmax(&a)?;
        Ok(value)
    };
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut t = vec![0.0f64; n];
        for (i, ti) in t.iter_mut().enumerate() {
            *ti = apply(&h, i)?;
        }
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

    // Policy extraction at the converged h.
    let mut energy: Vec<Vec<Option<u64>>> = vec![vec![None; nx]; n];
    let mut next: Vec<Vec<Option<u64>>> = vec![vec![None; nx]; n];
    let mut dists: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, &b) in states.iter().enumerate() {
        let mut feasible = Vec::new();
        let mut a = Vec::new();
        for x in 0..nx {
            if let Some((v, e, nb)) = q(&h, b, x) {
                energy[i][x] = Some(e);
                next[i][x] = Some(nb);
                feasible.push(x);
                a.push(-v);
            }
        }
        let (_, dist) = solve_inner_softmax(&a)?;
        let mut full = vec![0.0; nx];
        for (k, &x) in feasible.iter().enumerate() {
            full[x] = dist[k];
        }
        dists.push(full);
    }

    Ok(DualSolve {
        rho,
        lambda,
        h,
        policy: Policy::CognitiveRule {
            states,
            energy,
            next,
            input_dist: dists,
        },
        bellman_residual: residual,
        iterations,
    })
}

/// Finite-horizon value of the rule-induced MDP from the full battery,
/// including transient levels: `J_n = V_n(B̄)` with
/// `V_{t+1}(b) = log2 sum_x 2^{-rho e*(b,x) + V_t(f_B(b,x))}`.
pub fn finite_horizon_reduced(
    graphs: &BatteryGraphSet,
    rule: &MinimalChargingRule,
    rho: f64,
    horizon: usize,
) -> f64 {
    let spec = graphs.spec();
    let nb = spec.capacity() as usize + 1;
    let nx = spec.num_symbols();
    let mut v = vec![0.0f64; nb];
    for _ in 0..horizon {
        let mut nextv = vec![0.0f64; nb];
        for (b, slot) in nextv.iter_mut().enumerate() {
            let a: Vec<f64> = (0..nx)
                .filter_map(|x| {
                    rule.energy[b][x].map(|e| {
                        rho * e as f64 - v[rule.next[b][x].unwrap() as usize]
                    })
                })
                .collect();
            *slot = match solve_inner_softmax(&a) {
                Ok((value, _)) => value,
                Err(_) => f64::NEG_INFINITY,
            };
        }
        v = nextv;
    }
    v[spec.capacity() as usize]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{binary_precision_spec, ternary_spec};
    use crate::graphs::build_graphs;

    fn ternary_rule() -> (BatteryGraphSet, MinimalChargingRule) {
        let graphs = build_graphs(&ternary_spec());
        let rule = minimal_charging_policy(&graphs, 6).unwrap();
        (graphs, rule)
    }

    #[test]
    fn ternary_rule_matches_pruned_two_state_graph() {
        let (_, rule) = ternary_rule();
        // From b=0: 0 costs 0 and stays, 1 costs 2 and moves to 1, 2 costs 2
        // and stays at 0.
        assert_eq!(rule.energy[0], vec![Some(0), Some(2), Some(2)]);
        assert_eq!(rule.next[0], vec![Some(0), Some(1), Some(0)]);
        // From b=1: 0 stays, 1 drains to 0, 2 costs 2 and lands at 0.
        assert_eq!(rule.energy[1], vec![Some(0), Some(0), Some(2)]);
        assert_eq!(rule.next[1], vec![Some(1), Some(0), Some(0)]);
        // b=2 is transient: the recurrent class is {0, 1}.
        assert_eq!(rule.recurrent, vec![vec![0, 1]]);
    }

    #[test]
    fn reduced_matches_dual_closed_form() {
        let (graphs, rule) = ternary_rule();
        for &rho in &[0.0, 0.3, 1.0, 2.0] {
            let solve =
                cognitive_reduced_vi(&graphs, &rule, rho, &SolveOptions::default()).unwrap();
            let root = (5.0 + (2.0 * rho + 2.0).exp2()).sqrt();
            let expected = (2.0 + (-2.0 * rho).exp2() * (1.0 + root)).log2() - 1.0;
            assert!(
                (solve.lambda - expected).abs() < 1e-9,
                "rho={rho}: {} vs {expected}",
                solve.lambda
            );
            assert!(solve.bellman_residual < 1e-10);
        }
    }

    #[test]
    fn reduced_optimal_distribution_at_empty_battery() {
        // p*(x | b=0) ∝ (2^{1+2rho}, -1+sqrt(5+2^{2+2rho}), 2).
        let (graphs, rule) = ternary_rule();
        let rho = 1.0;
        let solve = cognitive_reduced_vi(&graphs, &rule, rho, &SolveOptions::default()).unwrap();
        let root = (5.0 + (2.0 + 2.0 * rho).exp2()).sqrt();
        let raw = [(1.0 + 2.0 * rho).exp2(), root - 1.0, 2.0];
        let norm: f64 = raw.iter().sum();
        match &solve.policy {
            Policy::CognitiveRule {
                states, input_dist, ..
            } => {
                let i = states.iter().position(|&b| b == 0).unwrap();
                for x in 0..3 {
                    assert!(
                        (input_dist[i][x] - raw[x] / norm).abs() < 1e-9,
                        "x={x}: {} vs {}",
                        input_dist[i][x],
                        raw[x] / norm
                    );
                }
            }
            other => panic!("unexpected policy {other:?}"),
        }
    }

    #[test]
    fn belief_engine_agrees_with_reduced() {
        let (graphs, rule) = ternary_rule();
        for &rho in &[0.0, 0.5, 1.0, 3.0] {
            let reduced =
                cognitive_reduced_vi(&graphs, &rule, rho, &SolveOptions::default()).unwrap();
            let belief = cognitive_belief_vi(&graphs, rho, &SolveOptions::default()).unwrap();
            assert!(
                (reduced.lambda - belief.lambda).abs() < 1e-8,
                "rho={rho}: {} vs {}",
                reduced.lambda,
                belief.lambda
            );
        }
    }

    #[test]
    fn belief_engine_zero_rho_is_log3() {
        let graphs = build_graphs(&ternary_spec());
        let solve = cognitive_belief_vi(&graphs, 0.0, &SolveOptions::default()).unwrap();
        assert!((solve.lambda - 3f64.log2()).abs() < 1e-10);
    }

    #[test]
    fn huge_rho_prefers_the_zero_symbol() {
        // As rho grows the reward drains to zero and the input distribution
        // concentrates on the free symbol. (Mixing slows like 2^{-2 rho},
        // so the limit is probed at a finite but large multiplier.)
        let (graphs, rule) = ternary_rule();
        let solve = cognitive_reduced_vi(&graphs, &rule, 8.0, &SolveOptions::default()).unwrap();
        assert!(solve.lambda < 0.01);
        match &solve.policy {
            Policy::CognitiveRule {
                states, input_dist, ..
            } => {
                let i = states.iter().position(|&b| b == 0).unwrap();
                assert!(input_dist[i][0] > 0.99);
            }
            other => panic!("unexpected policy {other:?}"),
        }
    }

    #[test]
    fn binary_precision_rule_certifies() {
        let graphs = build_graphs(&binary_precision_spec());
        let rule = minimal_charging_policy(&graphs, 6).unwrap();
        // Never pre-charge: from a full battery the 1 is sent from storage,
        // and from an empty one the exact cost is drawn on demand. The
        // recurrent class collapses to the empty level.
        assert_eq!(rule.energy[1], vec![Some(0), Some(0)]);
        assert_eq!(rule.energy[0], vec![Some(0), Some(1)]);
        assert_eq!(rule.recurrent, vec![vec![0]]);
        // Reduced and adjacent duals coincide for a precision charger.
        for &rho in &[0.0, 0.7, 1.9] {
            let solve =
                cognitive_reduced_vi(&graphs, &rule, rho, &SolveOptions::default()).unwrap();
            let expected = (1.0 + (-rho).exp2()).log2();
            assert!((solve.lambda - expected).abs() < 1e-9);
        }
    }
}
