//! Average-reward MDP solvers for the three charger-cognition regimes.
//!
//! Each engine maximizes an entropy rate minus `rho` times the average
//! energy, and returns a [`DualSolve`]: the average reward `lambda`, a
//! relative value function `h`, the optimal stationary policy, and a
//! Bellman-residual certificate. The engines are:
//!
//! * [`generic_value_iteration`] — charger commits to a fixed sequence;
//!   deterministic value iteration on normalized count vectors.
//! * [`adjacent_relative_vi`] — charger sees past inputs; relative value
//!   iteration on battery levels.
//! * [`cognitive_belief_vi`] / [`cognitive_reduced_vi`] — charger knows the
//!   message; belief-state iteration, plus the finite reduction through a
//!   causal minimal charging function when one certifies.

mod adjacent;
mod cognitive;
mod generic;
mod softmax;

pub use adjacent::{adjacent_perron_check, adjacent_relative_vi};
pub use cognitive::{
    cognitive_belief_vi, cognitive_reduced_vi, finite_horizon_reduced, minimal_charging_policy,
    MinimalChargingRule,
};
pub use generic::generic_value_iteration;
pub use softmax::solve_inner_softmax;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("empty support in inner maximization")]
    EmptySupport,
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("reachable state cap {cap} exceeded")]
    StateCapExceeded { cap: usize },
    #[error("horizon cap {cap} exceeded without a stable period")]
    HorizonCapExceeded { cap: usize },
    #[error("recurrent class under the fixed policy is reducible")]
    ReducibleClass,
    #[error("minimal charging reduction unavailable: {0}")]
    ReductionUnavailable(String),
    #[error("policy induces no closed recurrent class")]
    NoRecurrentClass,
}

/// Shared solver knobs.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Bellman-residual target for relative value iteration.
    pub tolerance: f64,
    /// Iteration cap for the relative-value engines.
    pub max_iterations: usize,
    /// Cap on lazily discovered simplex/belief states.
    pub state_cap: usize,
    /// Horizon cap for the finite-horizon generic engine.
    pub horizon_cap: usize,
    /// Damping factor for relative value iteration (aperiodicity transform).
    pub damping: f64,
    /// Verification depth for the minimal charging rule.
    pub minimal_rule_depth: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-10,
            max_iterations: 500_000,
            state_cap: 100_000,
            horizon_cap: 1 << 14,
            damping: 0.5,
            minimal_rule_depth: 6,
        }
    }
}

/// Stationary policy returned by an engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// One period of the optimal charging pattern (lexicographically smallest
    /// rotation).
    GenericCycle { energies: Vec<u64> },
    /// Per-battery-level energy choice and input distribution.
    Adjacent {
        states: Vec<u64>,
        energy: Vec<u64>,
        input_dist: Vec<Vec<f64>>,
    },
    /// Per-(level, symbol) energy choice with its deterministic transition,
    /// and per-level input distribution.
    CognitiveRule {
        states: Vec<u64>,
        energy: Vec<Vec<Option<u64>>>,
        next: Vec<Vec<Option<u64>>>,
        input_dist: Vec<Vec<f64>>,
    },
}

/// Result of one dual solve at a fixed multiplier `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolve {
    pub rho: f64,
    /// Optimal average reward `J(rho)` in bits per channel use.
    pub lambda: f64,
    /// Relative value function over the engine's state set
    /// (cycle states for the generic engine, battery levels otherwise).
    pub h: Vec<f64>,
    pub policy: Policy,
    /// Certified half-width: the optimal average reward lies within
    /// `lambda ± bellman_residual` at convergence.
    pub bellman_residual: f64,
    pub iterations: usize,
}

impl DualSolve {
    /// Structured text record consumed by the sweep module and the CLI.
    pub fn to_record(&self) -> String {
        let mut out = format!(
            "rho={:.12} lambda={:.12} residual={:e} iterations={}\n",
            self.rho, self.lambda, self.bellman_residual, self.iterations
        );
        match &self.policy {
            Policy::GenericCycle { energies } => {
                let cycle: Vec<String> = energies.iter().map(|e| e.to_string()).collect();
                out.push_str(&format!("policy=generic cycle={}\n", cycle.join(",")));
            }
            Policy::Adjacent {
                states,
                energy,
                input_dist,
            } => {
                out.push_str("policy=adjacent\n");
                for (i, &b) in states.iter().enumerate() {
                    let probs: Vec<String> =
                        input_dist[i].iter().map(|p| format!("{p:.12}")).collect();
                    out.push_str(&format!(
                        "state={b} e={} p={}\n",
                        energy[i],
                        probs.join(",")
                    ));
                }
            }
            Policy::CognitiveRule {
                states,
                energy,
                input_dist,
                ..
            } => {
                out.push_str("policy=cognitive\n");
                for (i, &b) in states.iter().enumerate() {
                    let choices: Vec<String> = energy[i]
                        .iter()
                        .map(|e| e.map_or("-".into(), |v| v.to_string()))
                        .collect();
                    let probs: Vec<String> =
                        input_dist[i].iter().map(|p| format!("{p:.12}")).collect();
                    out.push_str(&format!(
                        "state={b} e={} p={}\n",
                        choices.join(","),
                        probs.join(",")
                    ));
                }
            }
        }
        out
    }
}
