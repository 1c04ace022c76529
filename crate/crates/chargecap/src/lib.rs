//! Capacity of remotely powered, finite-battery noiseless channels.
//!
//! A transmitter with a battery of capacity `B̄` is fed by a charger that
//! emits one energy symbol per slot under an average-cost budget `Γ`. The
//! achievable entropy rate depends on what the charger can see: nothing
//! (generic), the past channel inputs (adjacent), or the whole message
//! (cognitive). This crate computes all three capacity curves plus the
//! average-power upper bound by
//!
//! 1. building per-energy battery-state graphs and their counting
//!    (adjacency) matrices ([`graphs`]),
//! 2. solving the dual problem `J(rho) = sup { entropy rate - rho * average
//!    energy }` with average-reward dynamic programming ([`engines`]),
//! 3. mapping dual solves back to `(Γ, C)` points and closing the curve by
//!    time sharing ([`sweep`]),
//! 4. certifying everything against brute-force enumeration ([`oracle`])
//!    and hard-coded closed forms for the reference channels
//!    ([`closed_form`]), with reporting in [`report`].

pub mod chain;
pub mod channel;
pub mod closed_form;
pub mod engines;
pub mod graphs;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod sweep;

pub use channel::{ChannelSpec, Frac};
