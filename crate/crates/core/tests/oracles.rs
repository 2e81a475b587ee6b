//! Solvers checked against slow, independent reference computations.

use mmbox::limits::{domination_search, isometry_group, prokhorov};
use mmbox::lipschitz::{lip1_vertices, me_lambda, FunctionOnSpace};
use mmbox::random::{random_integer_metric, random_pair, random_space, random_weights};
use mmbox::{
    box_distance, box_pair, exact_mu_r, hli_lambda, isomorphism_search, observable_distance, BoxOptions, DistMatrix,
    FiniteMMSpace, HlipOptions, SemiDistancePair,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n).map(move |m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
}

/// Smallest eps over all subsets with `max disc <= eps` and dropped mass
/// `<= lambda * eps`.
fn box_pair_brute(pair: &SemiDistancePair, lambda: f64) -> f64 {
    let n = pair.len();
    let m = pair.total_mass();
    let disc = pair.discrepancy();
    subsets(n)
        .map(|s| {
            let mut worst = 0.0f64;
            for &i in &s {
                for &j in &s {
                    if pair.weights[i] > 0.0 && pair.weights[j] > 0.0 {
                        worst = worst.max(disc[(i, j)]);
                    }
                }
            }
            let dropped = m - s.iter().map(|&i| pair.weights[i]).sum::<f64>();
            if lambda == 0.0 {
                if dropped <= 1e-12 {
                    worst
                } else {
                    f64::INFINITY
                }
            } else {
                worst.max(dropped / lambda)
            }
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn box_pair_matches_subset_enumeration() {
    let mut r = rng(11);
    for _ in 0..300 {
        let n = r.gen_range(1..=7);
        let pair = random_pair(&mut r, n);
        let lambda = [0.0, 0.3, 1.0, 2.5][r.gen_range(0..4)];
        let got = box_pair(&pair, lambda, &BoxOptions::default()).unwrap();
        let want = box_pair_brute(&pair, lambda);
        assert!((got.value - want).abs() < 1e-12, "{} vs {want}", got.value);
        // certificate
        let s = &got.certificate.subset;
        let disc = pair.discrepancy();
        assert!(s.iter().all(|&i| s.iter().all(|&j| disc[(i, j)] <= got.value + 1e-9)));
        let kept: f64 = s.iter().map(|&i| pair.weights[i]).sum();
        assert!(kept >= pair.total_mass() - lambda * got.value - 1e-9);
    }
}

/// Box distance between two-point spaces by scanning the one-parameter
/// coupling family on a fine grid, each coupling solved by subset enumeration.
fn two_by_two_grid(x: &FiniteMMSpace, y: &FiniteMMSpace, lambda: f64, steps: usize) -> f64 {
    let (a0, a1) = (x.weights()[0], x.weights()[1]);
    let (b0, _) = (y.weights()[0], y.weights()[1]);
    let lo = (b0 - a1).max(0.0);
    let hi = a0.min(b0);
    (0..=steps)
        .map(|k| {
            let t = lo + (hi - lo) * k as f64 / steps as f64;
            let cells = [(0, 0, t), (0, 1, a0 - t), (1, 0, b0 - t), (1, 1, a1 - b0 + t)];
            let live: Vec<(usize, usize, f64)> = cells.iter().copied().filter(|c| c.2 > 1e-15).collect();
            let n = live.len();
            let pair = SemiDistancePair::new(
                live.iter().map(|c| c.2).collect(),
                DistMatrix::from_fn(n, |p, q| x.d(live[p].0, live[q].0)),
                DistMatrix::from_fn(n, |p, q| y.d(live[p].1, live[q].1)),
            )
            .unwrap();
            box_pair_brute(&pair, lambda)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn two_point_golden_values() {
    let x = FiniteMMSpace::two_point(1.0, 0.5, 0.5).unwrap();
    let y = FiniteMMSpace::two_point(2.0, 0.5, 0.5).unwrap();
    assert_eq!(two_by_two_grid(&x, &y, 0.0, 1000), 1.0);
    assert_eq!(two_by_two_grid(&x, &y, 1.0, 1000), 0.5);
    let opts = BoxOptions::default();
    assert_eq!(box_distance(&x, &y, 0.0, &opts).unwrap().value, 1.0);
    assert_eq!(box_distance(&x, &y, 1.0, &opts).unwrap().value, 0.5);
}

#[test]
fn two_point_spaces_match_coupling_grid() {
    let mut r = rng(5);
    for _ in 0..60 {
        let w = r.gen_range(0.1..0.9);
        let v = r.gen_range(0.1..0.9);
        let x = FiniteMMSpace::two_point(r.gen_range(0.1..2.0), w, 1.0 - w).unwrap();
        let y = FiniteMMSpace::two_point(r.gen_range(0.1..2.0), v, 1.0 - v).unwrap();
        let lambda = [0.5, 1.0, 2.0][r.gen_range(0..3)];
        let got = box_distance(&x, &y, lambda, &BoxOptions::default()).unwrap().value;
        let steps = 4000;
        let grid = two_by_two_grid(&x, &y, lambda, steps);
        // the objective moves by at most 2 / lambda per unit of coupling parameter
        let slack = 2.0 / lambda / steps as f64;
        assert!(got <= grid + 1e-12, "{got} > grid {grid}");
        assert!(got >= grid - slack - 1e-12, "{got} < grid {grid}");
    }
}

/// `inf {eps : mu(h >= eps) <= lambda eps}` by bisection on the definition.
fn me_bisect(h: &[f64], w: &[f64], lambda: f64) -> f64 {
    let pred = |eps: f64| -> bool {
        let mass: f64 = h.iter().zip(w).filter(|(&x, &m)| m > 0.0 && x >= eps).map(|p| p.1).sum();
        mass <= lambda * eps
    };
    let (mut lo, mut hi) = (0.0f64, 1e3);
    if pred(0.0) {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn me_lambda_matches_bisection() {
    let mut r = rng(2);
    for _ in 0..500 {
        let n = r.gen_range(1..7);
        let mass = r.gen_range(0.5..2.0);
        let w = random_weights(&mut r, n, mass);
        let f: Vec<f64> = (0..n).map(|_| (r.gen_range(-3..=3) as f64) / 2.0).collect();
        let g: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let lambda = [0.5, 1.0, 2.0, 7.0][r.gen_range(0..4)];
        let got = me_lambda(&FunctionOnSpace(f.clone()), &FunctionOnSpace(g.clone()), &w, lambda).unwrap();
        let h: Vec<f64> = f.iter().zip(&g).map(|(a, b)| (a - b).abs()).collect();
        let want = me_bisect(&h, &w, lambda);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

/// Vertices of `{f : |f_i - f_j| <= d_ij, f_0 = 0}` by choosing `n - 1`
/// active constraints and solving the linear system.
fn lp_vertices(d: &DistMatrix) -> Vec<Vec<f64>> {
    let n = d.n();
    if n == 1 {
        return vec![vec![0.0]];
    }
    // constraint rows a . f <= b over variables f_1..f_{n-1}
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut a = vec![0.0; n - 1];
                if i > 0 {
                    a[i - 1] += 1.0;
                }
                if j > 0 {
                    a[j - 1] -= 1.0;
                }
                rows.push((a, d[(i, j)]));
            }
        }
    }
    let k = n - 1;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        if let Some(sol) = solve(&pick.iter().map(|&p| rows[p].clone()).collect::<Vec<_>>()) {
            let feasible = rows
                .iter()
                .all(|(a, b)| a.iter().zip(&sol).map(|(x, y)| x * y).sum::<f64>() <= b + 1e-9);
            let mut full = vec![0.0];
            full.extend(sol);
            if feasible && !out.iter().any(|v| v.iter().zip(&full).all(|(a, b)| (a - b).abs() < 1e-9)) {
                out.push(full);
            }
        }
        // next combination
        let mut i = k;
        while i > 0 && pick[i - 1] == rows.len() - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        pick[i - 1] += 1;
        for j in i..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    out
}

fn solve(rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let k = rows.len();
    let mut m: Vec<Vec<f64>> = rows.iter().map(|(a, b)| a.iter().copied().chain([*b]).collect()).collect();
    for c in 0..k {
        let p = (c..k).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        for r in 0..k {
            if r != c {
                let f = m[r][c] / m[c][c];
                for q in c..=k {
                    m[r][q] -= f * m[c][q];
                }
            }
        }
    }
    Some((0..k).map(|c| m[c][k] / m[c][c]).collect())
}

fn same_sets(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.len() == b.len()
        && a.iter()
            .all(|u| b.iter().any(|v| u.iter().zip(v).all(|(x, y)| (x - y).abs() < 1e-9)))
}

#[test]
fn lip1_vertices_match_lp_enumeration() {
    let tri = DistMatrix::from_fn(3, |i, j| if i == j { 0.0 } else { 1.0 });
    let v: Vec<Vec<f64>> = lip1_vertices(&tri, &[1.0; 3], 6).unwrap().into_iter().map(|f| f.0).collect();
    assert!(same_sets(&v, &lp_vertices(&tri)));
    let mut r = rng(8);
    for _ in 0..60 {
        let n = r.gen_range(1..=5);
        // raw symmetric matrices: the LP sees the original constraints, the
        // solver works with the path closure
        let pair = random_pair(&mut r, n);
        let got: Vec<Vec<f64>> = lip1_vertices(&pair.d1, &vec![1.0; n], 6).unwrap().into_iter().map(|f| f.0).collect();
        assert!(same_sets(&got, &lp_vertices(&pair.d1)), "n = {n}");
    }
}

/// Sup-distance from `v` to `Lip_1(d)` by bisection, feasibility of the
/// difference constraints `v_i - delta <= g_i <= v_i + delta`,
/// `g_i - g_j <= d_ij` checked by Bellman-Ford.
fn sup_distance_bisect(v: &[f64], d: &DistMatrix) -> f64 {
    let n = v.len();
    let feasible = |delta: f64| -> bool {
        // node n is the origin g = 0
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges.push((j, i, d[(i, j)]));
                }
            }
            edges.push((n, i, v[i] + delta));
            edges.push((i, n, -(v[i] - delta)));
        }
        let mut dist = vec![0.0f64; n + 1];
        for _ in 0..=n {
            for &(a, b, w) in &edges {
                if dist[a] + w < dist[b] - 1e-12 {
                    dist[b] = dist[a] + w;
                }
            }
        }
        edges.iter().all(|&(a, b, w)| dist[a] + w >= dist[b] - 1e-12)
    };
    let (mut lo, mut hi) = (0.0f64, 100.0);
    if feasible(0.0) {
        return 0.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn h0_oracle(pair: &SemiDistancePair) -> f64 {
    let directed = |a: &DistMatrix, b: &DistMatrix| {
        lp_vertices(a).iter().map(|v| sup_distance_bisect(v, b)).fold(0.0, f64::max)
    };
    directed(&pair.d1, &pair.d2).max(directed(&pair.d2, &pair.d1))
}

#[test]
fn exact_h0_matches_oracle() {
    let two = |d: f64| DistMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { d });
    let pair = SemiDistancePair::new(vec![0.5, 0.5], two(1.0), two(2.0)).unwrap();
    assert!((h0_oracle(&pair) - 0.5).abs() < 1e-9);
    let mut r = rng(21);
    for _ in 0..60 {
        let n = r.gen_range(1..=4);
        let pair = random_pair(&mut r, n);
        let got = hli_lambda(&pair, 0.0, &HlipOptions::default()).unwrap().value;
        let want = h0_oracle(&pair);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn observable_two_point_matches_coupling_family() {
    // every coupling of the uniform two-point spaces is [[t, .5-t], [.5-t, t]]
    let x = FiniteMMSpace::two_point(1.0, 0.5, 0.5).unwrap();
    let y = FiniteMMSpace::two_point(2.0, 0.5, 0.5).unwrap();
    let mut best = f64::INFINITY;
    for k in 0..=50 {
        let t = 0.5 * k as f64 / 50.0;
        let cells = [(0, 0, t), (0, 1, 0.5 - t), (1, 0, 0.5 - t), (1, 1, t)];
        let live: Vec<_> = cells.iter().copied().filter(|c| c.2 > 0.0).collect();
        let n = live.len();
        let pair = SemiDistancePair::new(
            live.iter().map(|c| c.2).collect(),
            DistMatrix::from_fn(n, |p, q| x.d(live[p].0, live[q].0)),
            DistMatrix::from_fn(n, |p, q| y.d(live[p].1, live[q].1)),
        )
        .unwrap();
        best = best.min(h0_oracle(&pair));
    }
    assert!((best - 0.5).abs() < 1e-9);
    let h = observable_distance(&x, &y, 0.0, &HlipOptions::default()).unwrap();
    assert!((h.value - 0.5).abs() < 1e-12);
}

/// Prokhorov distance by bisection over the definition, all subsets `A`.
fn prokhorov_bisect(d: &DistMatrix, mu: &[f64], nu: &[f64]) -> f64 {
    let n = d.n();
    let pred = |eps: f64| {
        subsets(n).all(|a| {
            let ma: f64 = a.iter().map(|&i| mu[i]).sum();
            let nb: f64 = (0..n).filter(|&j| a.iter().any(|&i| d[(i, j)] <= eps)).map(|j| nu[j]).sum();
            ma <= nb + eps + 1e-12
        })
    };
    let (mut lo, mut hi) = (0.0f64, 10.0);
    if pred(0.0) {
        return 0.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn prokhorov_matches_definition() {
    let mut r = rng(4);
    for _ in 0..100 {
        let n = r.gen_range(1..=5);
        let x = random_space(&mut r, n, 1.0);
        let n = x.len();
        let mu = random_weights(&mut r, n, 1.0);
        let nu = random_weights(&mut r, n, 1.0);
        let got = prokhorov(x.dist(), &mu, &nu).unwrap();
        let want = prokhorov_bisect(x.dist(), &mu, &nu);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn preserves(x: &FiniteMMSpace, y: &FiniteMMSpace, p: &[usize]) -> bool {
    (0..x.len()).all(|i| {
        (x.weights()[i] - y.weights()[p[i]]).abs() < 1e-9 && (0..x.len()).all(|j| (x.d(i, j) - y.d(p[i], p[j])).abs() < 1e-9)
    })
}

#[test]
fn isomorphism_and_isometries_match_permutations() {
    let mut r = rng(13);
    for _ in 0..150 {
        let n = r.gen_range(1..=5);
        let w = if r.gen_bool(0.5) { vec![1.0 / n as f64; n] } else { random_weights(&mut r, n, 1.0) };
        let x = FiniteMMSpace::from_parts(w.clone(), random_integer_metric(&mut r, n, 2)).unwrap();
        let y = if r.gen_bool(0.5) {
            let mut p: Vec<usize> = (0..n).collect();
            p.reverse();
            x.permuted(&p)
        } else {
            FiniteMMSpace::from_parts(w, random_integer_metric(&mut r, n, 2)).unwrap()
        };
        let brute = permutations(n).into_iter().any(|p| preserves(&x, &y, &p));
        assert_eq!(isomorphism_search(&x, &y).is_some(), brute);
        let group = isometry_group(&x, 8).unwrap();
        let count = permutations(n).into_iter().filter(|p| preserves(&x, &x, p)).count();
        assert_eq!(group.len(), count);
    }
}

#[test]
fn domination_matches_map_enumeration() {
    let mut r = rng(17);
    for _ in 0..150 {
        let nx = r.gen_range(1..=4);
        let ny = r.gen_range(1..=3);
        let x = FiniteMMSpace::from_parts(vec![1.0 / nx as f64; nx], random_integer_metric(&mut r, nx, 3)).unwrap();
        let yw: Vec<f64> = if r.gen_bool(0.5) { vec![1.0 / ny as f64; ny] } else { random_weights(&mut r, ny, 1.0) };
        let y = FiniteMMSpace::from_parts(yw, random_integer_metric(&mut r, ny, 3)).unwrap();
        let mut brute = false;
        for code in 0..ny.pow(nx as u32) {
            let p: Vec<usize> = (0..nx).map(|i| code / ny.pow(i as u32) % ny).collect();
            let lip = (0..nx).all(|a| (0..nx).all(|b| y.d(p[a], p[b]) <= x.d(a, b) + 1e-12));
            let mut pushed = vec![0.0; ny];
            for a in 0..nx {
                pushed[p[a]] += x.weights()[a];
            }
            let mass = pushed.iter().zip(y.weights()).all(|(u, v)| (u - v).abs() < 1e-9);
            brute |= lip && mass;
        }
        let found = domination_search(&x, &y, 7).unwrap();
        assert_eq!(found.is_some(), brute);
        if let Some(c) = found {
            assert!(c.verify(&x, &y));
        }
    }
}

#[test]
fn mu_r_masses_sum_to_power_of_mass() {
    let mut r = rng(19);
    for _ in 0..50 {
        let m = r.gen_range(0.5..2.0);
        let n = r.gen_range(1..=4);
        let x = random_space(&mut r, n, m);
        for rr in 1..=3 {
            let mu = exact_mu_r(&x, rr, 1_000_000).unwrap();
            assert!((mu.total_mass() - m.powi(rr as i32)).abs() < 1e-9);
        }
    }
}
