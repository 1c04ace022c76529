//! Dual-to-primal conversion: sweeps `rho` over a grid, pairs each dual
//! value `J(rho)` with the long-run average energy `Γ(rho)` of its optimal
//! policy, and assembles the capacity curve `C(Γ) = J(rho) + rho Γ(rho)`,
//! closed under time sharing (upper concave envelope). Dual breakpoints,
//! where the optimal policy flips and `Γ` jumps, are detected by probing
//! `rho ± δ` and contribute both flanking vertices, so the linear segment
//! between them is exactly the time-sharing branch.

use rayon::prelude::*;
use thiserror::Error;

use crate::chain::{closed_classes_from, stationary_distribution, ChainError};
use crate::channel::{step_battery, BatteryLevel, ChannelSpec, Frac};
use crate::engines::{
    adjacent_relative_vi, cognitive_belief_vi, cognitive_reduced_vi, generic_value_iteration,
    minimal_charging_policy, solve_inner_softmax, DualSolve, EngineError, MinimalChargingRule,
    Policy, SolveOptions,
};
use crate::graphs::BatteryGraphSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("policy induces more than one reachable closed class")]
    Multichain,
    #[error("no charging cycle available for the generic policy")]
    EmptyCycle,
    #[error("rho grid is empty")]
    EmptyGrid,
}

/// Which engine a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Generic,
    Adjacent,
    Cognitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMode {
    Generic,
    Adjacent,
    Cognitive,
    UpperBound,
    Precision,
}

impl CurveMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMode::Generic => "generic",
            CurveMode::Adjacent => "adjacent",
            CurveMode::Cognitive => "cognitive",
            CurveMode::UpperBound => "ub",
            CurveMode::Precision => "precision",
        }
    }
}

/// Where a curve vertex came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointSource {
    /// Direct engine solve at `rho`.
    Engine { rho: f64, residual: f64 },
    /// Flank of a detected dual breakpoint (time-sharing endpoint).
    TimeShare { rho: f64, residual: f64 },
    /// `(0, log2 #zero-cost-symbols)`: the never-charge point.
    Origin,
    /// Pointwise max-entropy-under-cost evaluation.
    UpperBound { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub gamma: f64,
    pub capacity: f64,
    pub source: PointSource,
}

/// A piecewise-linear capacity curve: vertices with strictly increasing
/// `gamma`, non-decreasing concave capacities. Evaluation interpolates
/// linearly and extends the last vertex as a plateau.
#[derive(Debug, Clone)]
pub struct CapacityCurve {
    pub mode: CurveMode,
    pub points: Vec<CurvePoint>,
    /// Grid multipliers whose solve failed, with the reason.
    pub gaps: Vec<(f64, String)>,
}

impl CapacityCurve {
    pub fn eval(&self, gamma: f64) -> f64 {
        assert!(!self.points.is_empty(), "empty curve");
        let pts = &self.points;
        if gamma <= pts[0].gamma {
            return pts[0].capacity;
        }
        for w in pts.windows(2) {
            if gamma <= w[1].gamma {
                let t = (gamma - w[0].gamma) / (w[1].gamma - w[0].gamma);
                return w[0].capacity + t * (w[1].capacity - w[0].capacity);
            }
        }
        pts.last().unwrap().capacity
    }

    /// Smallest gamma whose capacity is within `tol` of the curve maximum.
    pub fn saturation_gamma(&self, tol: f64) -> f64 {
        let max = self
            .points
            .iter()
            .map(|p| p.capacity)
            .fold(f64::NEG_INFINITY, f64::max);
        self.points
            .iter()
            .find(|p| p.capacity >= max - tol)
            .map(|p| p.gamma)
            .unwrap_or(f64::NAN)
    }

    /// Chord test on consecutive vertex triples.
    pub fn is_concave(&self, tol: f64) -> bool {
        self.points.windows(3).all(|w| {
            let (a, b, c) = (w[0], w[1], w[2]);
            let chord = a.capacity
                + (b.gamma - a.gamma) / (c.gamma - a.gamma) * (c.capacity - a.capacity);
            b.capacity >= chord - tol
        })
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].capacity >= w[0].capacity - tol)
    }
}

/// Upper concave envelope of a vertex set: sorts by gamma, keeps the best
/// capacity per (rounded) gamma, then prunes everything under a chord.
pub fn concave_envelope(mut points: Vec<CurvePoint>) -> Vec<CurvePoint> {
    points.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(b.capacity.total_cmp(&a.capacity)));
    let mut dedup: Vec<CurvePoint> = Vec::with_capacity(points.len());
    for p in points {
        match dedup.last() {
            Some(last) if (p.gamma - last.gamma).abs() <= 1e-9 => {}
            _ => dedup.push(p),
        }
    }
    let mut hull: Vec<CurvePoint> = Vec::with_capacity(dedup.len());
    for p in dedup {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.gamma - a.gamma) * (p.capacity - a.capacity)
                - (b.capacity - a.capacity) * (p.gamma - a.gamma);
            if cross >= -1e-13 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Default dual grid: 200 log-spaced multipliers in `[1e-3, 8]` plus 0.
pub fn default_rho_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    let (lo, hi, n) = (1e-3f64, 8.0f64, 200usize);
    let step = (hi / lo).powf(1.0 / (n - 1) as f64);
    let mut rho = lo;
    for _ in 0..n {
        grid.push(rho);
        rho *= step;
    }
    grid
}

fn solve_one(
    graphs: &BatteryGraphSet,
    kind: EngineKind,
    rule: Option<&MinimalChargingRule>,
    rho: f64,
    opts: &SolveOptions,
) -> Result<DualSolve, EngineError> {
    match kind {
        EngineKind::Generic => generic_value_iteration(graphs, rho, opts),
        EngineKind::Adjacent => adjacent_relative_vi(graphs, rho, opts),
        EngineKind::Cognitive => match rule {
            Some(rule) => cognitive_reduced_vi(graphs, rule, rho, opts),
            None => cognitive_belief_vi(graphs, rho, opts),
        },
    }
}

/// Long-run average energy of a solved policy.
///
/// Stationary behavior is computed exactly: the empirical mean over one
/// period for generic cycles, and the stationary distribution of the induced
/// battery chain otherwise (the linear solve is the Cesaro average, so
/// periodic chains are fine).
pub fn gamma_of_policy(graphs: &BatteryGraphSet, solve: &DualSolve) -> Result<f64, SweepError> {
    match &solve.policy {
        Policy::GenericCycle { energies } => {
            if energies.is_empty() {
                return Err(SweepError::EmptyCycle);
            }
            Ok(energies.iter().sum::<u64>() as f64 / energies.len() as f64)
        }
        Policy::Adjacent {
            states,
            energy,
            input_dist,
        } => {
            let spec = graphs.spec();
            let n = states.len();
            let mut p = vec![vec![0.0f64; n]; n];
            for i in 0..n {
                for x in 0..spec.num_symbols() {
                    let prob = input_dist[i][x];
                    if prob <= 0.0 {
                        continue;
                    }
                    let nb = step_battery(BatteryLevel(states[i]), energy[i], x, spec)
                        .expect("supported symbol feasible");
                    let j = states.iter().position(|&s| s == nb.0).expect("reachable");
                    p[i][j] += prob;
                }
            }
            let pi = stationary_on_reachable_class(&p, start_index(states, spec))?;
            Ok((0..n).map(|i| pi[i] * energy[i] as f64).sum())
        }
        Policy::CognitiveRule {
            states,
            energy,
            next,
            input_dist,
        } => {
            let n = states.len();
            let mut p = vec![vec![0.0f64; n]; n];
            let mut mean_e = vec![0.0f64; n];
            for i in 0..n {
                for (x, prob) in input_dist[i].iter().enumerate() {
                    if *prob <= 0.0 {
                        continue;
                    }
                    let nb = next[i][x].expect("supported symbol has a transition");
                    let j = states.iter().position(|&s| s == nb).expect("state in set");
                    p[i][j] += prob;
                    mean_e[i] += prob * energy[i][x].expect("supported symbol has energy") as f64;
                }
            }
            // The walk starts from the full battery when it is in the state
            // set, otherwise from the first state of the set.
            let start = states
                .iter()
                .position(|&s| s == graphs.spec().capacity())
                .unwrap_or(0);
            let pi = stationary_on_reachable_class(&p, start)?;
            Ok((0..n).map(|i| pi[i] * mean_e[i]).sum())
        }
    }
}

fn start_index(states: &[u64], spec: &ChannelSpec) -> usize {
    states
        .iter()
        .position(|&s| s == spec.capacity())
        .expect("full battery in state set")
}

/// Stationary distribution supported on the unique closed class reachable
/// from `start`; transient states get probability zero.
fn stationary_on_reachable_class(p: &[Vec<f64>], start: usize) -> Result<Vec<f64>, SweepError> {
    let n = p.len();
    let adj: Vec<Vec<usize>> = p
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v > 1e-15)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let classes = closed_classes_from(&adj, start);
    if classes.len() != 1 {
        return Err(SweepError::Multichain);
    }
    let class = &classes[0];
    let sub: Vec<Vec<f64>> = class
        .iter()
        .map(|&i| class.iter().map(|&j| p[i][j]).collect())
        .collect();
    let pi_sub = stationary_distribution(&sub)?;
    let mut pi = vec![0.0f64; n];
    for (k, &i) in class.iter().enumerate() {
        pi[i] = pi_sub[k];
    }
    Ok(pi)
}

/// Sweeps one engine over a multiplier grid and assembles its capacity
/// curve. Failed points are recorded in `gaps` instead of aborting the
/// curve. `rho = 0` is always included so the saturation vertex exists.
pub fn sweep(
    graphs: &BatteryGraphSet,
    kind: EngineKind,
    rho_grid: &[f64],
    opts: &SolveOptions,
) -> Result<CapacityCurve, SweepError> {
    if rho_grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    let mut grid: Vec<f64> = rho_grid.to_vec();
    if !grid.iter().any(|&r| r == 0.0) {
        grid.push(0.0);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let rule = match kind {
        EngineKind::Cognitive => minimal_charging_policy(graphs, opts.minimal_rule_depth).ok(),
        _ => None,
    };

    let solves: Vec<(f64, Result<(DualSolve, f64), SweepError>)> = grid
        .par_iter()
        .map(|&rho| {
            let run = |r: f64| -> Result<(DualSolve, f64), SweepError> {
                let solve = solve_one(graphs, kind, rule.as_ref(), r, opts)?;
                let gamma = gamma_of_policy(graphs, &solve)?;
                Ok((solve, gamma))
            };
            (rho, run(rho))
        })
        .collect();

    let mut points: Vec<CurvePoint> = Vec::new();
    let mut gaps: Vec<(f64, String)> = Vec::new();
    let mut ok_points: Vec<(f64, f64)> = Vec::new(); // (rho, gamma) in grid order
    for (rho, result) in &solves {
        match result {
            Ok((solve, gamma)) => {
                points.push(CurvePoint {
                    gamma: *gamma,
                    capacity: solve.lambda + rho * gamma,
                    source: PointSource::Engine {
                        rho: *rho,
                        residual: solve.bellman_residual,
                    },
                });
                ok_points.push((*rho, *gamma));
            }
            Err(err) => gaps.push((*rho, err.to_string())),
        }
    }

    // Dual breakpoints sit between grid points where the policy flips and
    // the stationary energy jumps. Bisect each jump down to a width of
    // 2e-6 and add the two flanking vertices; the chord between them is
    // the exact time-sharing segment. The generic engine is skipped: its
    // stationary energy is constant inside a band, so both flanking
    // vertices already come from the grid itself.
    if kind != EngineKind::Generic {
        let jumps: Vec<(f64, f64)> = ok_points
            .windows(2)
            .filter(|w| (w[0].1 - w[1].1).abs() > 1e-4)
            .map(|w| (w[0].0, w[1].0))
            .collect();
        let flank_points: Vec<Vec<CurvePoint>> = jumps
            .par_iter()
            .map(|&(mut lo, mut hi)| {
                let solve_at = |r: f64| -> Option<(f64, f64, f64)> {
                    let s = solve_one(graphs, kind, rule.as_ref(), r, opts).ok()?;
                    let g = gamma_of_policy(graphs, &s).ok()?;
                    Some((s.lambda, g, s.bellman_residual))
                };
                let Some(mut lo_pt) = solve_at(lo) else {
                    return Vec::new();
                };
                let Some(mut hi_pt) = solve_at(hi) else {
                    return Vec::new();
                };
                for _ in 0..40 {
                    if hi - lo <= 2e-6 {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    let Some(mid_pt) = solve_at(mid) else { break };
                    if (mid_pt.1 - lo_pt.1).abs() <= (mid_pt.1 - hi_pt.1).abs() {
                        lo = mid;
                        lo_pt = mid_pt;
                    } else {
                        hi = mid;
                        hi_pt = mid_pt;
                    }
                }
                let rho_star = 0.5 * (lo + hi);
                vec![
                    CurvePoint {
                        gamma: lo_pt.1,
                        capacity: lo_pt.0 + lo * lo_pt.1,
                        source: PointSource::TimeShare {
                            rho: rho_star,
                            residual: lo_pt.2,
                        },
                    },
                    CurvePoint {
                        gamma: hi_pt.1,
                        capacity: hi_pt.0 + hi * hi_pt.1,
                        source: PointSource::TimeShare {
                            rho: rho_star,
                            residual: hi_pt.2,
                        },
                    },
                ]
            })
            .collect();
        points.extend(flank_points.into_iter().flatten());
    }

    // The never-charge endpoint: zero budget leaves exactly the zero-cost
    // symbols usable forever.
    points.push(CurvePoint {
        gamma: 0.0,
        capacity: (graphs.spec().zero_symbol_count() as f64).log2(),
        source: PointSource::Origin,
    });

    let mode = match kind {
        EngineKind::Generic => CurveMode::Generic,
        EngineKind::Adjacent => CurveMode::Adjacent,
        EngineKind::Cognitive => CurveMode::Cognitive,
    };
    Ok(CapacityCurve {
        mode,
        points: concave_envelope(points),
        gaps,
    })
}

/// Noiseless average-power upper bound at one budget:
/// `max { H(X) : E[phi(X)] <= gamma }`, solved by bisecting the cost
/// multiplier through the softmax closed form. Returns `(capacity, rho)`.
pub fn max_entropy_under_cost(spec: &ChannelSpec, gamma: f64) -> (f64, f64) {
    let costs: Vec<f64> = spec.costs().iter().map(|&c| c as f64).collect();
    let nx = costs.len() as f64;
    if gamma <= 0.0 {
        return ((spec.zero_symbol_count() as f64).log2(), f64::INFINITY);
    }
    let mean_uniform = costs.iter().sum::<f64>() / nx;
    if gamma >= mean_uniform {
        return (nx.log2(), 0.0);
    }
    let mean_at = |rho: f64| -> (f64, f64) {
        let a: Vec<f64> = costs.iter().map(|&c| rho * c).collect();
        let (value, dist) = solve_inner_softmax(&a).expect("non-empty alphabet");
        let mean = dist.iter().zip(&costs).map(|(p, c)| p * c).sum::<f64>();
        (mean, value)
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        if mean_at(hi).0 <= gamma {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid).0 > gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    let (mean, value) = mean_at(rho);
    // H(p_rho) = log2 Xi + rho E[phi]; the constraint binds at the optimum.
    (value + rho * mean, rho)
}

/// The upper-bound curve `C_ub` on a gamma grid.
pub fn upper_bound_curve(spec: &ChannelSpec, gamma_grid: &[Frac]) -> CapacityCurve {
    let mut points: Vec<CurvePoint> = gamma_grid
        .iter()
        .map(|g| {
            let gamma = frac_to_f64(*g);
            let (capacity, rho) = max_entropy_under_cost(spec, gamma);
            CurvePoint {
                gamma,
                capacity,
                source: PointSource::UpperBound { rho },
            }
        })
        .collect();
    points.push(CurvePoint {
        gamma: 0.0,
        capacity: (spec.zero_symbol_count() as f64).log2(),
        source: PointSource::Origin,
    });
    CapacityCurve {
        mode: CurveMode::UpperBound,
        points: concave_envelope(points),
        gaps: Vec::new(),
    }
}

pub fn frac_to_f64(f: Frac) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}
