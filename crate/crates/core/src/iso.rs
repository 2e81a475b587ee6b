//! Backtracking search for measure-preserving isometries between supports.

use crate::space::FiniteMMSpace;

/// Tolerance for matching distances and masses.
pub const MATCH_TOL: f64 = 1e-9;

fn profile(s: &FiniteMMSpace, i: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..s.len()).map(|j| s.d(i, j)).collect();
    p.sort_by(f64::total_cmp);
    p
}

fn profiles_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= MATCH_TOL)
}

/// Bijections `map[i] = j` between the points of two quotient spaces (no
/// zero-mass points, no distinct points at distance zero) that preserve
/// masses and distances within [`MATCH_TOL`]. Stops after the first hit
/// unless `all` is set.
pub(crate) fn measure_isometries(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    all: bool,
) -> Vec<Vec<usize>> {
    let n = x.len();
    if n != y.len() {
        return Vec::new();
    }
    let px: Vec<Vec<f64>> = (0..n).map(|i| profile(x, i)).collect();
    let py: Vec<Vec<f64>> = (0..n).map(|j| profile(y, j)).collect();
    let allowed: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    (x.weights()[i] - y.weights()[j]).abs() <= MATCH_TOL
                        && profiles_match(&px[i], &py[j])
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut map = Vec::with_capacity(n);
    let mut used = vec![false; n];
    extend(x, y, &allowed, &mut map, &mut used, all, &mut out);
    out
}

fn extend(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    allowed: &[Vec<usize>],
    map: &mut Vec<usize>,
    used: &mut [bool],
    all: bool,
    out: &mut Vec<Vec<usize>>,
) {
    if !all && !out.is_empty() {
        return;
    }
    let i = map.len();
    if i == allowed.len() {
        out.push(map.clone());
        return;
    }
    for &j in &allowed[i] {
        if used[j] {
            continue;
        }
        let fits = map
            .iter()
            .enumerate()
            .all(|(k, &jk)| (x.d(i, k) - y.d(j, jk)).abs() <= MATCH_TOL);
        if fits {
            used[j] = true;
            map.push(j);
            extend(x, y, allowed, map, used, all, out);
            map.pop();
            used[j] = false;
        }
    }
}
