//! Battery-state graphs.
//!
//! For each energy symbol `e` there is a labeled graph `G_e` over battery
//! levels: an edge `b --x--> b'` exists iff symbol `x` is transmittable from
//! level `b` when `e` arrives, with `b' = min(b + e, B̄) - phi(x)`. The
//! adjacency matrix `A_e` counts parallel edges, so for a fixed charging
//! sequence `e^n` the row vector `N_t = N_{t-1} A_{e_t}` counts feasible
//! input sequences per final battery level.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::channel::{step_battery, BatteryLevel, ChannelSpec, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledEdge {
    pub from: u64,
    pub symbol: Symbol,
    pub to: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("energy value {0} is not in the spec's energy alphabet")]
    UnknownEnergy(u64),
}

/// The per-energy graphs `G_e`, their adjacency matrices, and the reachable
/// battery set, for one validated channel spec.
///
/// Battery levels are indexed densely as `0..=B̄`; integrality of all
/// quantities keeps every reachable level in that range.
#[derive(Debug, Clone)]
pub struct BatteryGraphSet {
    spec: ChannelSpec,
    /// All battery levels `0..=B̄` in index order.
    levels: Vec<u64>,
    /// `reachable[b]` iff level `b` occurs on some trajectory from `B̄`.
    reachable: Vec<bool>,
    /// `edges[ei]` lists the labeled edges of `G_e` for `energies()[ei]`.
    edges: Vec<Vec<LabeledEdge>>,
    /// `adjacency[ei][b][b']` = number of symbols moving `b` to `b'` under `e`.
    adjacency: Vec<Vec<Vec<u64>>>,
}

impl BatteryGraphSet {
    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn energies(&self) -> &[u64] {
        self.spec.energies()
    }

    pub fn reachable(&self) -> &[bool] {
        &self.reachable
    }

    pub fn reachable_levels(&self) -> Vec<u64> {
        self.levels
            .iter()
            .copied()
            .filter(|&b| self.reachable[b as usize])
            .collect()
    }

    pub fn edges(&self, energy: u64) -> Result<&[LabeledEdge], GraphError> {
        let ei = self.energy_index(energy)?;
        Ok(&self.edges[ei])
    }

    pub fn adjacency(&self, energy: u64) -> Result<&Vec<Vec<u64>>, GraphError> {
        let ei = self.energy_index(energy)?;
        Ok(&self.adjacency[ei])
    }

    pub fn energy_index(&self, energy: u64) -> Result<usize, GraphError> {
        self.spec
            .energies()
            .iter()
            .position(|&e| e == energy)
            .ok_or(GraphError::UnknownEnergy(energy))
    }

    /// Adjacency matrix by energy index rather than energy value.
    pub fn adjacency_by_index(&self, ei: usize) -> &Vec<Vec<u64>> {
        &self.adjacency[ei]
    }

    /// Feasible symbols from level `b` under arrival `e`, with their
    /// successor levels.
    pub fn moves(&self, b: u64, e: u64) -> impl Iterator<Item = (Symbol, u64)> + '_ {
        let spec = &self.spec;
        (0..spec.num_symbols()).filter_map(move |x| {
            step_battery(BatteryLevel(b), e, x, spec).map(|next| (x, next.0))
        })
    }

    /// Text dump of every graph, one edge per line: `from symbol cost to`.
    pub fn export_edges(&self) -> String {
        let mut out = String::new();
        for (ei, edges) in self.edges.iter().enumerate() {
            let e = self.spec.energies()[ei];
            for edge in edges {
                out.push_str(&format!(
                    "{} {} {} {}\n",
                    edge.from,
                    self.spec.labels()[edge.symbol],
                    e,
                    edge.to
                ));
            }
        }
        out
    }
}

/// Builds the graph set for a validated spec, including the forward closure
/// of reachable levels from the full battery.
pub fn build_graphs(spec: &ChannelSpec) -> BatteryGraphSet {
    let nb = spec.capacity() as usize + 1;
    let levels: Vec<u64> = (0..nb as u64).collect();
    let mut edges = Vec::with_capacity(spec.energies().len());
    let mut adjacency = Vec::with_capacity(spec.energies().len());
    for &e in spec.energies() {
        let mut g = Vec::new();
        let mut a = vec![vec![0u64; nb]; nb];
        for &b in &levels {
            for x in 0..spec.num_symbols() {
                if let Some(next) = step_battery(BatteryLevel(b), e, x, spec) {
                    g.push(LabeledEdge {
                        from: b,
                        symbol: x,
                        to: next.0,
                    });
                    a[b as usize][next.0 as usize] += 1;
                }
            }
        }
        edges.push(g);
        adjacency.push(a);
    }

    let mut reachable = vec![false; nb];
    let mut stack = vec![spec.capacity()];
    reachable[spec.capacity() as usize] = true;
    while let Some(b) = stack.pop() {
        for &e in spec.energies() {
            for x in 0..spec.num_symbols() {
                if let Some(next) = step_battery(BatteryLevel(b), e, x, spec) {
                    if !reachable[next.0 as usize] {
                        reachable[next.0 as usize] = true;
                        stack.push(next.0);
                    }
                }
            }
        }
    }

    BatteryGraphSet {
        spec: spec.clone(),
        levels,
        reachable,
        edges,
        adjacency,
    }
}

/// Exact sequence counting along a fixed charging sequence: starting from
/// `N_0 = indicator(B̄)`, applies `N_t = N_{t-1} A_{e_t}` and returns `N_n`.
/// `N_n[b]` is the number of feasible `x^n` ending with battery `b`; counts
/// grow like `|X|^n`, hence big integers.
pub fn count_sequences(
    graphs: &BatteryGraphSet,
    energies: &[u64],
) -> Result<Vec<BigUint>, GraphError> {
    let nb = graphs.num_levels();
    let mut n = vec![BigUint::zero(); nb];
    n[graphs.spec().capacity() as usize] = BigUint::one();
    for &e in energies {
        let a = graphs.adjacency(e)?;
        let mut next = vec![BigUint::zero(); nb];
        for b in 0..nb {
            if n[b].is_zero() {
                continue;
            }
            for (bp, &mult) in a[b].iter().enumerate() {
                if mult > 0 {
                    next[bp] += &n[b] * mult;
                }
            }
        }
        n = next;
    }
    Ok(n)
}

/// Total count `N_n · 1`.
pub fn count_sequences_total(
    graphs: &BatteryGraphSet,
    energies: &[u64],
) -> Result<BigUint, GraphError> {
    Ok(count_sequences(graphs, energies)?.into_iter().sum())
}

/// A set of cost-tagged labeled graphs over shared states; sequences are
/// generated by walking edges of the per-step chosen graph, paying its cost.
#[derive(Debug, Clone)]
pub struct ControlledConstrainedSystem {
    pub states: Vec<u64>,
    pub cost_alphabet: Vec<u64>,
    pub graphs: Vec<Vec<LabeledEdge>>,
}

/// Identity re-labeling of a battery graph set as a controlled constrained
/// system: states are battery levels, the cost alphabet is the energy
/// alphabet.
pub fn as_controlled_system(graphs: &BatteryGraphSet) -> ControlledConstrainedSystem {
    ControlledConstrainedSystem {
        states: graphs.levels().to_vec(),
        cost_alphabet: graphs.energies().to_vec(),
        graphs: graphs.edges.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ternary_spec, ChannelSpec};

    fn edges_from(graphs: &BatteryGraphSet, e: u64, b: u64) -> Vec<(Symbol, u64)> {
        graphs
            .edges(e)
            .unwrap()
            .iter()
            .filter(|edge| edge.from == b)
            .map(|edge| (edge.symbol, edge.to))
            .collect()
    }

    #[test]
    fn ternary_g0_matches_reference_graph() {
        let graphs = build_graphs(&ternary_spec());
        assert_eq!(edges_from(&graphs, 0, 2), vec![(0, 2), (1, 1), (2, 0)]);
        assert_eq!(edges_from(&graphs, 0, 1), vec![(0, 1), (1, 0)]);
        assert_eq!(edges_from(&graphs, 0, 0), vec![(0, 0)]);
    }

    #[test]
    fn ternary_a0_matrix() {
        let graphs = build_graphs(&ternary_spec());
        let a0 = graphs.adjacency(0).unwrap();
        assert_eq!(
            *a0,
            vec![vec![1, 0, 0], vec![1, 1, 0], vec![1, 1, 1]]
        );
    }

    #[test]
    fn full_recharge_saturates_rows() {
        // With E = {B̄} every row of A_e has |X| edges in total.
        let spec = ChannelSpec::new(
            vec!["0".into(), "1".into(), "2".into()],
            vec![0, 1, 2],
            vec![2],
            2,
        )
        .unwrap();
        let graphs = build_graphs(&spec);
        let a = graphs.adjacency(2).unwrap();
        for row in a {
            assert_eq!(row.iter().sum::<u64>(), 3);
        }
    }

    #[test]
    fn row_sums_count_feasible_symbols() {
        let spec = ternary_spec();
        let graphs = build_graphs(&spec);
        for &e in spec.energies() {
            let a = graphs.adjacency(e).unwrap();
            for &b in graphs.levels() {
                let expected = (0..spec.num_symbols())
                    .filter(|&x| spec.cost(x) <= (b + e).min(spec.capacity()))
                    .count() as u64;
                assert_eq!(a[b as usize].iter().sum::<u64>(), expected);
            }
        }
    }

    #[test]
    fn count_single_full_charge() {
        let graphs = build_graphs(&ternary_spec());
        let n = count_sequences(&graphs, &[2]).unwrap();
        let ints: Vec<u64> = n.iter().map(|v| u64::try_from(v).unwrap()).collect();
        assert_eq!(ints, vec![1, 1, 1]);
    }

    #[test]
    fn count_two_steps_without_charging() {
        let graphs = build_graphs(&ternary_spec());
        let total = count_sequences_total(&graphs, &[0, 0]).unwrap();
        assert_eq!(u64::try_from(&total).unwrap(), 6);
    }

    #[test]
    fn count_rejects_unknown_energy() {
        let graphs = build_graphs(&ternary_spec());
        assert_eq!(
            count_sequences(&graphs, &[1]).unwrap_err(),
            GraphError::UnknownEnergy(1)
        );
    }

    #[test]
    fn singleton_alphabet_counts_one() {
        let spec =
            ChannelSpec::new(vec!["0".into()], vec![0], vec![0, 1], 1).unwrap();
        let graphs = build_graphs(&spec);
        for seq in [&[0u64, 1, 0][..], &[1, 1, 1], &[0, 0, 0]] {
            assert_eq!(
                u64::try_from(&count_sequences_total(&graphs, seq).unwrap()).unwrap(),
                1
            );
        }
    }

    #[test]
    fn controlled_system_round_trip() {
        let graphs = build_graphs(&ternary_spec());
        let sys = as_controlled_system(&graphs);
        assert_eq!(sys.states, vec![0, 1, 2]);
        assert_eq!(sys.cost_alphabet, vec![0, 2]);
        assert_eq!(sys.graphs.len(), 2);
        // Same edge multiset as the original graphs.
        for (ei, g) in sys.graphs.iter().enumerate() {
            let e = sys.cost_alphabet[ei];
            assert_eq!(g.as_slice(), graphs.edges(e).unwrap());
        }
    }

    #[test]
    fn export_edges_is_line_per_edge() {
        let graphs = build_graphs(&ternary_spec());
        let dump = graphs.export_edges();
        let lines: Vec<&str> = dump.lines().collect();
        let total_edges: usize = [0u64, 2]
            .iter()
            .map(|&e| graphs.edges(e).unwrap().len())
            .sum();
        assert_eq!(lines.len(), total_edges);
        assert!(lines.contains(&"2 1 0 1"));
        assert!(lines.contains(&"1 2 2 0"));
    }
}
