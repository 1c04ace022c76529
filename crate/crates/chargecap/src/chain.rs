//! Small finite-Markov-chain helpers: strongly connected components, closed
//! recurrent classes, and stationary distributions via a dense linear solve.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("stationary solve is singular")]
    SingularSystem,
    #[error("stationary residual {0:.3e} above 1e-12")]
    ResidualTooLarge(f64),
}

/// Tarjan's strongly connected components, iterative. Returns components in
/// reverse topological order; node indices refer to `adj`.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comps: Vec<Vec<usize>> = Vec::new();

    // Explicit DFS stack of (node, next child position).
    let mut work: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        work.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut ci)) = work.last_mut() {
            if *ci < adj[v].len() {
                let w = adj[v][*ci];
                *ci += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Components with no edge leaving them: the closed recurrent classes.
pub fn closed_classes(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let comps = strongly_connected_components(adj);
    let mut comp_of = vec![0usize; adj.len()];
    for (ci, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = ci;
        }
    }
    comps
        .iter()
        .enumerate()
        .filter(|(ci, comp)| {
            comp.iter()
                .all(|&v| adj[v].iter().all(|&w| comp_of[w] == *ci))
        })
        .map(|(_, comp)| comp.clone())
        .collect()
}

/// Closed classes reachable from `start`.
pub fn closed_classes_from(adj: &[Vec<usize>], start: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    closed_classes(adj)
        .into_iter()
        .filter(|comp| comp.iter().any(|&v| seen[v]))
        .collect()
}

/// Stationary distribution of an irreducible stochastic matrix `p`
/// (rows sum to 1): solves `pi P = pi`, `sum pi = 1` by Gaussian elimination
/// with partial pivoting. Works for periodic chains too, where the solution
/// is the Cesaro average of the empirical occupation.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>, ChainError> {
    let n = p.len();
    // Unknowns pi_0..pi_{n-1}; equations (P^T - I) pi = 0 with the last
    // equation replaced by sum pi = 1.
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-14 {
            return Err(ChainError::SingularSystem);
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let pi: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();

    let mut residual = 0.0f64;
    for j in 0..n {
        let mut acc = -pi[j];
        for i in 0..n {
            acc += pi[i] * p[i][j];
        }
        residual = residual.max(acc.abs());
    }
    residual = residual.max((pi.iter().sum::<f64>() - 1.0).abs());
    if residual > 1e-12 {
        return Err(ChainError::ResidualTooLarge(residual));
    }
    Ok(pi)
}
