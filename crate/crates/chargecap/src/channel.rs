//! Channel and battery model: alphabets, energy cost function, battery
//! evolution, and the feasibility predicates everything else is built on.
//!
//! The model is a noiseless discrete channel whose transmitter draws energy
//! from a finite battery of capacity `B̄`, refilled by a charger that emits
//! one energy symbol per slot. A symbol `x` can be sent at time `t` only if
//! `phi(x) <= min(b_t + e_t, B̄)`, and the battery then evolves as
//! `b_{t+1} = min(b_t + e_t, B̄) - phi(x_t)`.

use num_rational::Ratio;
use thiserror::Error;

/// Exact rational used for cost bounds and curve breakpoints.
pub type Frac = Ratio<i64>;

/// Index into a spec's input alphabet.
pub type Symbol = usize;

/// Battery level in `[0, battery_capacity]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BatteryLevel(pub u64);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("input alphabet is empty")]
    EmptyInputAlphabet,
    #[error("energy alphabet is empty")]
    EmptyEnergyAlphabet,
    #[error("duplicate input symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("no cost given for input symbol {0:?}")]
    MissingCost(String),
    #[error("no input symbol has zero cost")]
    NoZeroSymbol,
    #[error("cost {cost} of symbol {symbol:?} exceeds battery capacity {capacity}")]
    CostExceedsCapacity {
        symbol: String,
        cost: u64,
        capacity: u64,
    },
    #[error("energy value {energy} exceeds battery capacity {capacity}")]
    EnergyExceedsCapacity { energy: u64, capacity: u64 },
    #[error("energy alphabet has no strictly positive value")]
    NoPositiveEnergy,
    #[error("negative value in {field}: {value}")]
    NegativeValue { field: &'static str, value: i64 },
}

/// A validated channel description: input alphabet, integer energy costs,
/// integer energy alphabet, and integer battery capacity.
///
/// Quantities must already be scaled to integers; the library does not
/// rescale rationals. This keeps the reachable battery set inside
/// `{0, ..., battery_capacity}` and all state arithmetic exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSpec {
    labels: Vec<String>,
    costs: Vec<u64>,
    energies: Vec<u64>,
    capacity: u64,
}

impl ChannelSpec {
    /// Builds and validates a spec from raw signed integers.
    ///
    /// `costs[i]` is the energy cost of `labels[i]`. The energy alphabet is
    /// sorted and deduplicated. Fails with a distinct [`SpecError`] per
    /// violated model assumption.
    pub fn new(
        labels: Vec<String>,
        costs: Vec<i64>,
        energies: Vec<i64>,
        capacity: i64,
    ) -> Result<Self, SpecError> {
        if capacity < 0 {
            return Err(SpecError::NegativeValue {
                field: "battery_capacity",
                value: capacity,
            });
        }
        if labels.is_empty() {
            return Err(SpecError::EmptyInputAlphabet);
        }
        if energies.is_empty() {
            return Err(SpecError::EmptyEnergyAlphabet);
        }
        if labels.len() != costs.len() {
            // Treat a short cost vector as a missing cost for the first
            // uncovered label; a long one is a spec bug as well.
            let missing = labels
                .get(costs.len())
                .cloned()
                .unwrap_or_else(|| "<extra cost>".into());
            return Err(SpecError::MissingCost(missing));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(SpecError::DuplicateSymbol(l.clone()));
            }
        }
        for (&c, l) in costs.iter().zip(&labels) {
            if c < 0 {
                return Err(SpecError::NegativeValue {
                    field: "cost",
                    value: c,
                });
            }
            if c as u64 > capacity as u64 {
                return Err(SpecError::CostExceedsCapacity {
                    symbol: l.clone(),
                    cost: c as u64,
                    capacity: capacity as u64,
                });
            }
        }
        for &e in &energies {
            if e < 0 {
                return Err(SpecError::NegativeValue {
                    field: "energy",
                    value: e,
                });
            }
            if e as u64 > capacity as u64 {
                return Err(SpecError::EnergyExceedsCapacity {
                    energy: e as u64,
                    capacity: capacity as u64,
                });
            }
        }
        if !costs.contains(&0) {
            return Err(SpecError::NoZeroSymbol);
        }
        if !energies.iter().any(|&e| e > 0) {
            return Err(SpecError::NoPositiveEnergy);
        }
        let mut energies: Vec<u64> = energies.into_iter().map(|e| e as u64).collect();
        energies.sort_unstable();
        energies.dedup();
        Ok(ChannelSpec {
            labels,
            costs: costs.into_iter().map(|c| c as u64).collect(),
            energies,
            capacity: capacity as u64,
        })
    }

    /// Re-checks all invariants; returns the spec unchanged iff they hold.
    pub fn validate(self) -> Result<Self, SpecError> {
        ChannelSpec::new(
            self.labels.clone(),
            self.costs.iter().map(|&c| c as i64).collect(),
            self.energies.iter().map(|&e| e as i64).collect(),
            self.capacity as i64,
        )
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_symbols(&self) -> usize {
        self.labels.len()
    }

    pub fn cost(&self, x: Symbol) -> u64 {
        self.costs[x]
    }

    pub fn costs(&self) -> &[u64] {
        &self.costs
    }

    /// Energy alphabet, ascending.
    pub fn energies(&self) -> &[u64] {
        &self.energies
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn symbol_of(&self, label: &str) -> Option<Symbol> {
        self.labels.iter().position(|l| l == label)
    }

    /// Number of zero-cost symbols (at least 1 by validation).
    pub fn zero_symbol_count(&self) -> usize {
        self.costs.iter().filter(|&&c| c == 0).count()
    }

    /// Precision-charger condition: every symbol cost appears in the energy
    /// alphabet, `phi(X) ⊆ E`.
    pub fn is_precision(&self) -> bool {
        self.costs.iter().all(|c| self.energies.contains(c))
    }
}

/// One battery step: available energy is `min(b + e, B̄)`; transmitting `x`
/// consumes `phi(x)` of it. Returns `None` when `x` is not transmittable,
/// so graph construction can enumerate edges by filtering.
pub fn step_battery(
    b: BatteryLevel,
    e: u64,
    x: Symbol,
    spec: &ChannelSpec,
) -> Option<BatteryLevel> {
    let avail = (b.0 + e).min(spec.capacity);
    let cost = spec.cost(x);
    (cost <= avail).then(|| BatteryLevel(avail - cost))
}

/// A transmitter-charger sequence pair together with the battery levels it
/// induces from a full initial battery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub inputs: Vec<Symbol>,
    pub energies: Vec<u64>,
    /// `batteries[t]` is the level at the start of slot `t`; `batteries[0] = B̄`.
    /// Length `n + 1`; the last entry is the post-horizon level.
    pub batteries: Vec<BatteryLevel>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrajectoryError {
    #[error("inputs have length {inputs} but energies have length {energies}")]
    LengthMismatch { inputs: usize, energies: usize },
    #[error("empty trajectory")]
    Empty,
    #[error("unknown energy value {0}")]
    UnknownEnergy(u64),
    #[error("symbol index {0} out of range")]
    UnknownSymbol(usize),
}

/// Feasibility verdict for a trajectory: membership in the unconstrained
/// feasible set and in the cost-constrained one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feasibility {
    /// Every step satisfies the battery constraint starting from `b_1 = B̄`.
    pub in_a_prime: bool,
    /// Additionally the total energy satisfies `sum e_t <= n * gamma`.
    pub in_a_gamma: bool,
}

impl Trajectory {
    /// Replays the battery recursion from a full battery. Succeeds even for
    /// infeasible pairs; feasibility is judged by [`check_trajectory`].
    pub fn replay(
        inputs: Vec<Symbol>,
        energies: Vec<u64>,
        spec: &ChannelSpec,
    ) -> Result<(Self, bool), TrajectoryError> {
        if inputs.len() != energies.len() {
            return Err(TrajectoryError::LengthMismatch {
                inputs: inputs.len(),
                energies: energies.len(),
            });
        }
        if inputs.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for &x in &inputs {
            if x >= spec.num_symbols() {
                return Err(TrajectoryError::UnknownSymbol(x));
            }
        }
        for &e in &energies {
            if !spec.energies().contains(&e) {
                return Err(TrajectoryError::UnknownEnergy(e));
            }
        }
        let mut batteries = vec![BatteryLevel(spec.capacity())];
        let mut feasible = true;
        let mut b = BatteryLevel(spec.capacity());
        for (&x, &e) in inputs.iter().zip(&energies) {
            match step_battery(b, e, x, spec) {
                Some(next) => {
                    b = next;
                }
                None => {
                    feasible = false;
                    // Continue with the clamped level so the stored sequence
                    // stays well-defined for diagnostics.
                    b = BatteryLevel((b.0 + e).min(spec.capacity()));
                }
            }
            batteries.push(b);
        }
        Ok((
            Trajectory {
                inputs,
                energies,
                batteries,
            },
            feasible,
        ))
    }

    pub fn total_energy(&self) -> u64 {
        self.energies.iter().sum()
    }
}

/// Tests membership of `(x^n, e^n)` in the feasible sets: in `A'_n` iff every
/// step is feasible from a full battery, and in `A_n(gamma)` iff additionally
/// `sum e_t <= n * gamma` (checked exactly in rational arithmetic).
pub fn check_trajectory(
    inputs: &[Symbol],
    energies: &[u64],
    gamma: Frac,
    spec: &ChannelSpec,
) -> Result<Feasibility, TrajectoryError> {
    let (traj, feasible) = Trajectory::replay(inputs.to_vec(), energies.to_vec(), spec)?;
    let n = inputs.len() as i64;
    let within_cost = Frac::from_integer(traj.total_energy() as i64) <= gamma * n;
    Ok(Feasibility {
        in_a_prime: feasible,
        in_a_gamma: feasible && within_cost,
    })
}

/// The ternary example channel: `X = {0,1,2}`, `phi(x) = x`, `E = {0,2}`,
/// `B̄ = 2`. The charger can only release full-battery bursts.
pub fn ternary_spec() -> ChannelSpec {
    ChannelSpec::new(
        vec!["0".into(), "1".into(), "2".into()],
        vec![0, 1, 2],
        vec![0, 2],
        2,
    )
    .expect("ternary example spec is valid")
}

/// Binary precision channel: `X = {0,1}`, `phi(x) = x`, `E = {0,1}`, `B̄ = 1`.
pub fn binary_precision_spec() -> ChannelSpec {
    ChannelSpec::new(
        vec!["0".into(), "1".into()],
        vec![0, 1],
        vec![0, 1],
        1,
    )
    .expect("binary precision spec is valid")
}

/// Ternary precision channel: `X = E = {0,1,2}`, `phi(x) = x`, `B̄ = 2`.
pub fn ternary_precision_spec() -> ChannelSpec {
    ChannelSpec::new(
        vec!["0".into(), "1".into(), "2".into()],
        vec![0, 1, 2],
        vec![0, 1, 2],
        2,
    )
    .expect("ternary precision spec is valid")
}
