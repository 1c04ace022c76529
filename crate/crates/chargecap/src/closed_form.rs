//! Hard-coded analytic references for the ternary example channel
//! (`X = {0,1,2}`, `phi(x) = x`, `E = {0,2}`, `B̄ = 2`) and the precision
//! charger, used as golden values by the verification suite. Branch tests
//! run in exact rational arithmetic so breakpoints like `Γ = 2/3` land on
//! the right branch.

use thiserror::Error;

use crate::channel::{ChannelSpec, Frac, Symbol, Trajectory};
use crate::sweep::{frac_to_f64, max_entropy_under_cost};

pub use crate::channel::{binary_precision_spec, ternary_precision_spec, ternary_spec};

pub const LOG2_3: f64 = 1.584962500721156;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("spec is not a precision charger: some symbol cost is missing from the energy alphabet")]
    NotPrecisionCharger,
    #[error("cubic root finding failed for gamma={0}")]
    RootFindingFailed(f64),
    #[error("codeword violates the declared cost budget")]
    BudgetExceeded,
    #[error("trajectory error: {0}")]
    Trajectory(String),
}

/// Dual mode selector for the closed-form `J(rho)` and `Γ(rho)` formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualMode {
    Generic,
    Adjacent,
    Cognitive,
}

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Generic-charger vertex value at `Γ = 2/l`:
/// `(1/l) log2((l+1)(l+2)/2)`.
fn c0_vertex(l: i64) -> f64 {
    (((l + 1) * (l + 2)) as f64 / 2.0).log2() / l as f64
}

/// Generic-charger capacity of the ternary example: the stated formula at
/// `Γ = 2/l`, linear interpolation between adjacent vertices elsewhere, `0`
/// at `0` and `log2 3` beyond `Γ = 2`.
pub fn c0_closed(gamma: Frac) -> f64 {
    if gamma <= Frac::from_integer(0) {
        return 0.0;
    }
    if gamma > Frac::from_integer(2) {
        return LOG2_3;
    }
    let inv = Frac::from_integer(2) / gamma; // = l when on a vertex
    if inv.is_integer() {
        return c0_vertex(inv.to_integer());
    }
    let l1 = inv.ceil().to_integer();
    let l2 = inv.floor().to_integer();
    let g1 = Frac::new(2, l1);
    let g2 = Frac::new(2, l2);
    let alpha = frac_to_f64((g2 - gamma) / (g2 - g1));
    alpha * c0_vertex(l1) + (1.0 - alpha) * c0_vertex(l2)
}

/// Adjacent-charger capacity of the ternary example, four branches with
/// exact rational branch tests at `2/3`, `1`, `4/3`.
pub fn cx_closed(gamma: Frac) -> f64 {
    if gamma <= Frac::from_integer(0) {
        return 0.0;
    }
    let g = frac_to_f64(gamma);
    if gamma < Frac::new(2, 3) {
        (1.0 + g / 2.0) * ((2.0 + g) / (2.0 * g)).log2()
            - (1.0 - g / 2.0) * ((2.0 - g) / (2.0 * g)).log2()
    } else if gamma < Frac::from_integer(1) {
        g / 2.0 + 1.0
    } else if gamma < Frac::new(4, 3) {
        g / 2.0 + binary_entropy(g / 2.0)
    } else {
        LOG2_3
    }
}

/// Exact rational evaluation of the capacity cubic
/// `Γ ζ^3 + 2(Γ-1) ζ^2 - (3Γ+4) ζ - 10` — zero iff `ζ` is a root.
pub fn cm_cubic_residual(gamma: Frac, zeta: Frac) -> Frac {
    let two = Frac::from_integer(2);
    gamma * zeta * zeta * zeta + two * (gamma - Frac::from_integer(1)) * zeta * zeta
        - (Frac::from_integer(3) * gamma + Frac::from_integer(4)) * zeta
        - Frac::from_integer(10)
}

/// Unique real root `ζ >= 3` of the capacity cubic for `0 < Γ <= 10/9`,
/// found by bracketed bisection plus Newton polish to 1e-12.
pub fn cm_cubic_root(gamma: f64) -> Result<f64, ClosedFormError> {
    if !(0.0..=10.0 / 9.0 + 1e-15).contains(&gamma) || gamma == 0.0 {
        return Err(ClosedFormError::RootFindingFailed(gamma));
    }
    let f = |z: f64| gamma * z.powi(3) + 2.0 * (gamma - 1.0) * z * z - (3.0 * gamma + 4.0) * z - 10.0;
    let df = |z: f64| 3.0 * gamma * z * z + 4.0 * (gamma - 1.0) * z - (3.0 * gamma + 4.0);
    let mut lo = 3.0 - 1e-9;
    let mut hi = 3.0;
    for _ in 0..200 {
        if f(hi) > 0.0 {
            break;
        }
        hi *= 2.0;
    }
    if f(hi) <= 0.0 {
        return Err(ClosedFormError::RootFindingFailed(gamma));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..4 {
        let step = f(z) / df(z);
        if step.is_finite() {
            z -= step;
        }
    }
    Ok(z)
}

/// Fully-cognitive capacity of the ternary example:
/// `log2(ζ^2 + 2ζ - 3) + (Γ-2)/2 log2(ζ^2 - 5) - Γ` with `ζ` the cubic
/// root; `0` at `0` and `log2 3` beyond `Γ = 10/9`.
pub fn cm_closed(gamma: Frac) -> Result<f64, ClosedFormError> {
    if gamma <= Frac::from_integer(0) {
        return Ok(0.0);
    }
    if gamma > Frac::new(10, 9) {
        return Ok(LOG2_3);
    }
    let g = frac_to_f64(gamma);
    let z = cm_cubic_root(g)?;
    Ok((z * z + 2.0 * z - 3.0).log2() + (g - 2.0) / 2.0 * (z * z - 5.0).log2() - g)
}

/// Upper band edge in `rho` for the generic period-`l` pattern.
fn generic_band_hi(l: u64) -> f64 {
    let lf = l as f64;
    0.5 * (((l + 1) * (l + 2)) as f64 / 2.0).log2() - 0.5 * lf * ((lf + 3.0) / (lf + 1.0)).log2()
}

fn generic_band_of(rho: f64) -> u64 {
    let mut l = 1u64;
    while generic_band_hi(l) < rho {
        l += 1;
        if l > 1 << 40 {
            break;
        }
    }
    l
}

/// Closed-form duals `J(rho)` for the ternary example.
pub fn j_closed(mode: DualMode, rho: f64) -> f64 {
    match mode {
        DualMode::Generic => {
            let l = generic_band_of(rho);
            ((((l + 1) * (l + 2)) as f64 / 2.0).log2() - 2.0 * rho) / l as f64
        }
        DualMode::Adjacent => {
            if rho < 0.5 {
                (2.0 + (2.0 * rho).exp2()).log2() - 2.0 * rho
            } else {
                2.0 * (1.0 + (1.0 + (2.0 * rho + 2.0).exp2()).sqrt()).log2() - 2.0 * rho - 2.0
            }
        }
        DualMode::Cognitive => {
            let root = (5.0 + (2.0 * rho + 2.0).exp2()).sqrt();
            (2.0 + (-2.0 * rho).exp2() * (1.0 + root)).log2() - 1.0
        }
    }
}

/// Closed-form stationary average energy `Γ(rho)` for the ternary example.
/// At the adjacent breakpoint `rho = 1/2` the lower (large-`rho`) branch is
/// returned, matching the engines' low-energy tie break.
pub fn gamma_closed(mode: DualMode, rho: f64) -> f64 {
    match mode {
        DualMode::Generic => 2.0 / generic_band_of(rho) as f64,
        DualMode::Adjacent => {
            if rho < 0.5 {
                4.0 / (2.0 + (2.0 * rho).exp2())
            } else {
                2.0 / (1.0 + (2.0 * rho + 2.0).exp2()).sqrt()
            }
        }
        DualMode::Cognitive => {
            // Stationary form: stable at rho = 0 where the compact
            // expression in the dual parameter is 0/0.
            let r = (5.0 + (2.0 * rho + 2.0).exp2()).sqrt();
            let p0_norm = 1.0 + (1.0 + 2.0 * rho).exp2() + r;
            let p0_zero = (1.0 + 2.0 * rho).exp2() / p0_norm;
            let p1_norm = 1.0 + (1.0 - 2.0 * rho).exp2() + r;
            let p1_two = (1.0 - 2.0 * rho).exp2() / p1_norm;
            let pi1 = 0.5 * (1.0 - 1.0 / r);
            (1.0 - pi1) * 2.0 * (1.0 - p0_zero) + pi1 * 2.0 * p1_two
        }
    }
}

/// Capacity of a precision charger (`phi(X) ⊆ E`): the adjacent and
/// cognitive capacities collapse to the average-power upper bound.
pub fn precision_capacity(spec: &ChannelSpec, gamma: Frac) -> Result<f64, ClosedFormError> {
    if !spec.is_precision() {
        return Err(ClosedFormError::NotPrecisionCharger);
    }
    Ok(max_entropy_under_cost(spec, frac_to_f64(gamma)).0)
}

/// One run of the charge-what-was-spent scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionRun {
    pub trajectory: Trajectory,
    pub total_energy: u64,
    pub total_cost: u64,
}

/// Simulates the precision scheme `e_1 = 0`, `e_t = phi(x_{t-1})` on a
/// codeword and verifies the full-battery invariant `B_t + E_t = B̄` at
/// every step.
pub fn simulate_precision_scheme(
    spec: &ChannelSpec,
    inputs: &[Symbol],
) -> Result<PrecisionRun, ClosedFormError> {
    if !spec.is_precision() {
        return Err(ClosedFormError::NotPrecisionCharger);
    }
    let mut energies = Vec::with_capacity(inputs.len());
    let mut prev_cost = 0u64;
    for &x in inputs {
        energies.push(prev_cost);
        prev_cost = spec.cost(x);
    }
    let (trajectory, feasible) = Trajectory::replay(inputs.to_vec(), energies, spec)
        .map_err(|e| ClosedFormError::Trajectory(e.to_string()))?;
    if !feasible {
        return Err(ClosedFormError::Trajectory(
            "precision scheme produced an infeasible step".into(),
        ));
    }
    for (b, e) in trajectory.batteries.iter().zip(&trajectory.energies) {
        if b.0 + e != spec.capacity() {
            return Err(ClosedFormError::Trajectory(format!(
                "battery {} plus arrival {} misses the capacity {}",
                b.0,
                e,
                spec.capacity()
            )));
        }
    }
    let total_cost = inputs.iter().map(|&x| spec.cost(x)).sum();
    let total_energy = trajectory.total_energy();
    debug_assert!(total_energy <= total_cost);
    Ok(PrecisionRun {
        trajectory,
        total_energy,
        total_cost,
    })
}

/// Rho-band midpoint for the generic period-`l` pattern; handy for tests
/// that want an interior multiplier.
pub fn generic_band_mid(l: u64) -> f64 {
    let lf = l as f64;
    let c = 0.5 * (((l + 1) * (l + 2)) as f64 / 2.0).log2();
    let lo = c - 0.5 * lf * ((lf + 2.0) / lf).log2();
    let hi = c - 0.5 * lf * ((lf + 3.0) / (lf + 1.0)).log2();
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn c0_vertices() {
        assert!((c0_closed(Frac::from_integer(2)) - LOG2_3).abs() < 1e-12);
        assert!((c0_closed(Frac::from_integer(1)) - 0.5 * 6f64.log2()).abs() < 1e-12);
        assert!((c0_closed(Frac::new(2, 3)) - 10f64.log2() / 3.0).abs() < 1e-12);
        assert_eq!(c0_closed(Frac::from_integer(0)), 0.0);
        assert_eq!(c0_closed(Frac::from_integer(3)), LOG2_3);
    }

    #[test]
    fn c0_interpolates_between_vertices() {
        // Midpoint of Gamma = 1 and Gamma = 2/3.
        let g = Frac::new(5, 6);
        let expected = 0.5 * c0_closed(Frac::from_integer(1)) + 0.5 * c0_closed(Frac::new(2, 3));
        assert!((c0_closed(g) - expected).abs() < 1e-12);
    }

    #[test]
    fn cx_branch_boundaries_are_continuous() {
        let eps = Frac::new(1, 1_000_000_000);
        for bp in [Frac::new(2, 3), Frac::from_integer(1), Frac::new(4, 3)] {
            let left = cx_closed(bp - eps);
            let right = cx_closed(bp + eps);
            let at = cx_closed(bp);
            assert!((left - at).abs() < 1e-7, "left limit at {bp}");
            assert!((right - at).abs() < 1e-7, "right limit at {bp}");
        }
        assert!((cx_closed(Frac::new(2, 3)) - 4.0 / 3.0).abs() < 1e-12);
        assert!((cx_closed(Frac::from_integer(1)) - 1.5).abs() < 1e-12);
        assert!((cx_closed(Frac::new(4, 3)) - LOG2_3).abs() < 1e-12);
    }

    #[test]
    fn cm_cubic_root_at_saturation_is_three() {
        // Exact rational check of the root at Gamma = 10/9.
        let residual = cm_cubic_residual(Frac::new(10, 9), Frac::from_integer(3));
        assert!(residual.is_zero());
        let z = cm_cubic_root(10.0 / 9.0).unwrap();
        assert!((z - 3.0).abs() < 1e-11);
    }

    #[test]
    fn cm_boundary_and_limits() {
        assert!((cm_closed(Frac::new(10, 9)).unwrap() - LOG2_3).abs() < 1e-10);
        assert_eq!(cm_closed(Frac::from_integer(0)).unwrap(), 0.0);
        assert_eq!(cm_closed(Frac::from_integer(2)).unwrap(), LOG2_3);
        // Gamma -> 0+ drives capacity to zero.
        assert!(cm_closed(Frac::new(1, 10_000)).unwrap() < 2e-3);
    }

    #[test]
    fn cm_continuous_at_saturation() {
        let eps = Frac::new(1, 1_000_000);
        let left = cm_closed(Frac::new(10, 9) - eps).unwrap();
        assert!((left - LOG2_3).abs() < 1e-5);
    }

    #[test]
    fn j_adjacent_branches_agree_at_half() {
        assert!((j_closed(DualMode::Adjacent, 0.0) - LOG2_3).abs() < 1e-12);
        let lo = (2.0 + 1f64.exp2()).log2() - 1.0;
        assert!((j_closed(DualMode::Adjacent, 0.5) - 1.0).abs() < 1e-12);
        assert!((lo - 1.0).abs() < 1e-12);
        let hi = 2.0 * (1.0 + 9f64.sqrt()).log2() - 1.0 - 2.0;
        assert!((hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn j_cognitive_at_zero_is_log3() {
        assert!((j_closed(DualMode::Cognitive, 0.0) - LOG2_3).abs() < 1e-12);
    }

    #[test]
    fn gamma_closed_matches_compact_cognitive_form() {
        // The published compact form in the dual parameter is singular at
        // rho = 0; away from it the stationary form must agree.
        for &rho in &[0.25f64, 0.5, 1.0, 2.0] {
            let r = (5.0 + (2.0 * rho + 2.0).exp2()).sqrt();
            let compact = ((2.0f64.powf(2.0 * rho + 1.0)) * ((2.0 * rho).exp2() + 2.0) / r - 2.0)
                / ((4.0 * rho).exp2() - 1.0);
            let stationary = gamma_closed(DualMode::Cognitive, rho);
            assert!(
                (compact - stationary).abs() < 1e-10,
                "rho={rho}: {compact} vs {stationary}"
            );
        }
        assert!((gamma_closed(DualMode::Cognitive, 0.0) - 10.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn dual_consistency_reproduces_primal() {
        // J(rho) + rho Gamma(rho) must land on the closed-form curve.
        for &rho in &[0.05, 0.2, 0.7, 1.3, 2.5] {
            let g = gamma_closed(DualMode::Adjacent, rho);
            let c = j_closed(DualMode::Adjacent, rho) + rho * g;
            let expected = cx_closed(Frac::approximate_float(g).unwrap());
            assert!((c - expected).abs() < 1e-8, "adjacent rho={rho}");

            let g = gamma_closed(DualMode::Cognitive, rho);
            let c = j_closed(DualMode::Cognitive, rho) + rho * g;
            let expected = cm_closed(Frac::approximate_float(g).unwrap()).unwrap();
            assert!((c - expected).abs() < 1e-8, "cognitive rho={rho}");

            let g = gamma_closed(DualMode::Generic, rho);
            let c = j_closed(DualMode::Generic, rho) + rho * g;
            let expected = c0_closed(Frac::approximate_float(g).unwrap());
            assert!((c - expected).abs() < 1e-8, "generic rho={rho}");
        }
    }

    #[test]
    fn precision_scheme_binary_example() {
        let spec = binary_precision_spec();
        let run = simulate_precision_scheme(&spec, &[1, 0, 1]).unwrap();
        assert_eq!(run.trajectory.energies, vec![0, 1, 0]);
        assert_eq!(run.total_energy, 1);
        assert_eq!(run.total_cost, 2);
    }

    #[test]
    fn precision_scheme_keeps_battery_full() {
        let spec = ternary_precision_spec();
        let run = simulate_precision_scheme(&spec, &[2, 2]).unwrap();
        assert_eq!(run.trajectory.energies, vec![0, 2]);
        for (b, e) in run
            .trajectory
            .batteries
            .iter()
            .zip(&run.trajectory.energies)
        {
            assert_eq!(b.0 + e, spec.capacity());
        }
        let run = simulate_precision_scheme(&spec, &[0, 0, 0]).unwrap();
        assert_eq!(run.total_energy, 0);
    }

    #[test]
    fn precision_requires_precision_spec() {
        let err = simulate_precision_scheme(&ternary_spec(), &[0]).unwrap_err();
        assert_eq!(err, ClosedFormError::NotPrecisionCharger);
        let err = precision_capacity(&ternary_spec(), Frac::new(1, 2)).unwrap_err();
        assert_eq!(err, ClosedFormError::NotPrecisionCharger);
    }

    #[test]
    fn precision_capacity_examples() {
        let spec = binary_precision_spec();
        assert!((precision_capacity(&spec, Frac::new(1, 2)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(precision_capacity(&spec, Frac::from_integer(0)).unwrap(), 0.0);
        let tern = ternary_precision_spec();
        assert!((precision_capacity(&tern, Frac::from_integer(1)).unwrap() - LOG2_3).abs() < 1e-12);
    }
}
