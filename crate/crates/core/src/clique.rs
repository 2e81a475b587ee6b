//! Clique searches on small compatibility graphs.

/// Undirected graph as a dense adjacency matrix. Self-loops are ignored.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    adj: Vec<bool>,
}

impl Graph {
    pub fn from_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut adj = vec![false; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let e = edge(i, j);
                adj[i * n + j] = e;
                adj[j * n + i] = e;
            }
        }
        Graph { n, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(a, &i)| set[a + 1..].iter().all(|&j| self.adjacent(i, j)))
    }
}

/// Maximum-weight clique by branch and bound. Among cliques of maximal weight
/// (up to a relative tolerance) the lexicographically smallest sorted index
/// list is returned.
pub fn max_weight_clique(g: &Graph, weights: &[f64]) -> (Vec<usize>, f64) {
    let total: f64 = weights.iter().sum();
    let tol = 1e-12 * total.max(1.0);
    let mut best = (Vec::new(), 0.0);
    let cand: Vec<usize> = (0..g.n()).filter(|&v| weights[v] > 0.0).collect();
    let mut cur = Vec::new();
    expand(g, weights, &mut cur, 0.0, &cand, &mut best, tol);
    best
}

fn expand(
    g: &Graph,
    w: &[f64],
    cur: &mut Vec<usize>,
    cur_w: f64,
    cand: &[usize],
    best: &mut (Vec<usize>, f64),
    tol: f64,
) {
    if cur_w > best.1 + tol {
        *best = (cur.clone(), cur_w);
    }
    // suffix sums give the bound for "pick v next, then anything after it"
    let mut suffix = vec![0.0; cand.len() + 1];
    for k in (0..cand.len()).rev() {
        suffix[k] = suffix[k + 1] + w[cand[k]];
    }
    for (k, &v) in cand.iter().enumerate() {
        if cur_w + suffix[k] <= best.1 + tol {
            return;
        }
        let next: Vec<usize> = cand[k + 1..]
            .iter()
            .copied()
            .filter(|&u| g.adjacent(v, u))
            .collect();
        cur.push(v);
        expand(g, w, cur, cur_w + w[v], &next, best, tol);
        cur.pop();
    }
}

/// Greedy peeling: repeatedly drop the vertex carrying the most conflicting
/// mass until the remainder is a clique. Returns a clique whose weight is a
/// lower bound on the optimum.
pub fn greedy_clique(g: &Graph, weights: &[f64]) -> (Vec<usize>, f64) {
    let mut alive: Vec<usize> = (0..g.n()).filter(|&v| weights[v] > 0.0).collect();
    loop {
        let conflict = |v: usize, alive: &[usize]| -> f64 {
            alive
                .iter()
                .filter(|&&u| u != v && !g.adjacent(u, v))
                .map(|&u| weights[u])
                .sum()
        };
        let worst = alive
            .iter()
            .enumerate()
            .map(|(k, &v)| (k, conflict(v, &alive), weights[v]))
            .filter(|&(_, c, _)| c > 0.0)
            .max_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then(b.2.total_cmp(&a.2))
                    .then(a.0.cmp(&b.0))
            });
        match worst {
            Some((k, _, _)) => {
                alive.remove(k);
            }
            None => break,
        }
    }
    let w = alive.iter().map(|&v| weights[v]).sum();
    (alive, w)
}

/// Maximises `eval` over the maximal cliques of `g` (Bron-Kerbosch with
/// pivoting). `bound(r_and_p)` must upper-bound `eval` on every clique inside
/// the given vertex set; branches that cannot beat the incumbent are cut, and
/// the search stops once `target` is reached.
pub fn best_maximal_clique(
    g: &Graph,
    mut bound: impl FnMut(&[usize]) -> f64,
    mut eval: impl FnMut(&[usize]) -> f64,
    target: f64,
    tol: f64,
) -> (Vec<usize>, f64) {
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut r = Vec::new();
    let p: Vec<usize> = (0..g.n()).collect();
    bron_kerbosch(g, &mut r, p, Vec::new(), &mut bound, &mut eval, &mut best, target, tol);
    best
}

#[allow(clippy::too_many_arguments)]
fn bron_kerbosch(
    g: &Graph,
    r: &mut Vec<usize>,
    mut p: Vec<usize>,
    mut x: Vec<usize>,
    bound: &mut impl FnMut(&[usize]) -> f64,
    eval: &mut impl FnMut(&[usize]) -> f64,
    best: &mut (Vec<usize>, f64),
    target: f64,
    tol: f64,
) {
    if best.1 >= target - tol {
        return;
    }
    if p.is_empty() {
        if x.is_empty() {
            let v = eval(r);
            if v > best.1 + tol {
                let mut c = r.clone();
                c.sort_unstable();
                *best = (c, v);
            }
        }
        return;
    }
    let mut rp = r.clone();
    rp.extend_from_slice(&p);
    if bound(&rp) <= best.1 + tol {
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&v| g.adjacent(u, v)).count())
        .expect("p is nonempty");
    let branch: Vec<usize> = p.iter().copied().filter(|&v| !g.adjacent(pivot, v)).collect();
    for v in branch {
        let np = p.iter().copied().filter(|&u| g.adjacent(v, u)).collect();
        let nx = x.iter().copied().filter(|&u| g.adjacent(v, u)).collect();
        r.push(v);
        bron_kerbosch(g, r, np, nx, bound, eval, best, target, tol);
        r.pop();
        p.retain(|&u| u != v);
        x.push(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_cliques_brute(g: &Graph, w: &[f64]) -> f64 {
        let n = g.n();
        (0u32..1 << n)
            .map(|mask| {
                let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                if g.is_clique(&set) {
                    set.iter().map(|&i| w[i]).sum()
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn branch_and_bound_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..9);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let g = Graph::from_fn(n, |_, _| rng.gen_bool(0.5));
            let (c, val) = max_weight_clique(&g, &w);
            assert!(g.is_clique(&c));
            assert!((val - all_cliques_brute(&g, &w)).abs() < 1e-12);
            let (gc, gval) = greedy_clique(&g, &w);
            assert!(g.is_clique(&gc));
            assert!(gval <= val + 1e-12);
        }
    }

    #[test]
    fn tie_break_is_lexicographic() {
        // two disjoint edges with equal weight
        let g = Graph::from_fn(4, |i, j| (i, j) == (0, 3) || (i, j) == (1, 2));
        let (c, _) = max_weight_clique(&g, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(c, vec![0, 3]);
    }

    #[test]
    fn maximal_clique_search_finds_heaviest() {
        let g = Graph::from_fn(5, |i, j| (i + j) % 2 == 1 || (i, j) == (0, 2));
        let w = [0.1, 0.4, 0.2, 0.3, 0.5];
        let sum = |s: &[usize]| s.iter().map(|&i| w[i]).sum::<f64>();
        let (c, v) = best_maximal_clique(&g, sum, sum, f64::INFINITY, 1e-12);
        assert!(g.is_clique(&c));
        assert!((v - max_weight_clique(&g, &w).1).abs() < 1e-12);
    }
}
