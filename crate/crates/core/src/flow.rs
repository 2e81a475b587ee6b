//! Bipartite max-flow over real capacities (Edmonds-Karp on a dense residual
//! matrix). Used for transportation feasibility: how much mass can move from
//! row supplies to column demands along a given set of admissible cells.

use std::collections::VecDeque;

/// Result of [`bipartite_max_flow`].
#[derive(Clone, Debug)]
pub struct Transport {
    pub value: f64,
    /// Flow on each admissible cell, in the order the cells were given.
    pub cell_flow: Vec<f64>,
}

/// Maximum mass transportable from `supply` (rows) to `demand` (columns) using
/// only `cells`. Cell capacities are unbounded.
pub fn bipartite_max_flow(supply: &[f64], demand: &[f64], cells: &[(usize, usize)]) -> Transport {
    let (r, c) = (supply.len(), demand.len());
    let n = r + c + 2;
    let (s, t) = (r + c, r + c + 1);
    let scale: f64 = supply.iter().sum::<f64>().max(1.0);
    let eps = 1e-15 * scale;
    let unbounded = 2.0 * scale + 1.0;

    let mut cap = vec![0.0; n * n];
    for (i, &w) in supply.iter().enumerate() {
        cap[s * n + i] = w.max(0.0);
    }
    for (j, &w) in demand.iter().enumerate() {
        cap[(r + j) * n + t] = w.max(0.0);
    }
    for &(i, j) in cells {
        cap[i * n + r + j] = unbounded;
    }
    let original = cap.clone();

    let mut value = 0.0;
    let mut parent = vec![usize::MAX; n];
    loop {
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        parent[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for v in 0..n {
                if parent[v] == usize::MAX && cap[u * n + v] > eps {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[t] == usize::MAX {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = t;
        while v != s {
            let u = parent[v];
            bottleneck = bottleneck.min(cap[u * n + v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = parent[v];
            cap[u * n + v] -= bottleneck;
            cap[v * n + u] += bottleneck;
            v = u;
        }
        value += bottleneck;
    }

    let cell_flow = cells
        .iter()
        .map(|&(i, j)| (original[i * n + r + j] - cap[i * n + r + j]).max(0.0))
        .collect();
    Transport { value, cell_flow }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_bipartite_moves_everything() {
        let cells: Vec<_> = (0..2).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
        let t = bipartite_max_flow(&[0.4, 0.6], &[0.2, 0.3, 0.5], &cells);
        assert!((t.value - 1.0).abs() < 1e-12);
        assert!((t.cell_flow.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restricted_cells_limit_flow() {
        // row 0 can only feed column 0
        let t = bipartite_max_flow(&[0.7, 0.3], &[0.5, 0.5], &[(0, 0), (1, 1)]);
        assert!((t.value - 0.8).abs() < 1e-12);
    }

    #[test]
    fn augmenting_path_reroutes() {
        // greedy (0,0) first would block; max flow is 1
        let t = bipartite_max_flow(&[0.5, 0.5], &[0.5, 0.5], &[(0, 0), (0, 1), (1, 0)]);
        assert!((t.value - 1.0).abs() < 1e-12);
        assert!((t.cell_flow[1] - 0.5).abs() < 1e-12);
    }
}
