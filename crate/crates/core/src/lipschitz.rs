//! The `me_lambda` metric on functions, 1-Lipschitz function sets, and the
//! observable distance `H_lambda Li_1`.
//!
//! `Lip_1(d)` is invariant under adding constants, and the sup-distance from a
//! function `f` to `Lip_1(d)` has the closed form
//! `max(0, max_ij (f_i - f_j - d_ij)) / 2` (attained by the inf-convolution of
//! `f` shifted up by half the gap). For `lambda > 0` the same argument applied
//! to a retained set `S` gives
//!
//! ```text
//! inf_{g in Lip_1(d)} me_lambda(f, g) = min_S max(gap_S(f) / 2, (m - mass(S)) / lambda)
//! ```
//!
//! which is the box-style subset problem of [`crate::box_distance`].

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::box_distance::{box_distance, equalise, subset_minmax, BoxOptions, SolveMode};
use crate::coupling::{pullback_pair, Coupling, SemiDistancePair};
use crate::error::{Error, Result};
use crate::space::{DistMatrix, FiniteMMSpace};
use crate::tol;

/// A real function on the points of a space (or the cells of a pair).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionOnSpace(pub Vec<f64>);

impl FunctionOnSpace {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for FunctionOnSpace {
    fn from(v: Vec<f64>) -> Self {
        FunctionOnSpace(v)
    }
}

/// `Lip_1(d)`, normalised at `base` for vertex enumeration.
#[derive(Clone, Debug)]
pub struct LipschitzSet {
    dist: DistMatrix,
    base: usize,
}

impl LipschitzSet {
    /// `base` is the first index with positive weight.
    pub fn new(dist: DistMatrix, weights: &[f64]) -> Result<Self> {
        let base = weights
            .iter()
            .position(|&w| w > 0.0)
            .ok_or_else(|| Error::domain("no point has positive weight"))?;
        Ok(LipschitzSet { dist, base })
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn contains(&self, f: &FunctionOnSpace) -> bool {
        is_lip1(f.values(), &self.dist)
    }
}

/// `|f_i - f_j| <= d_ij` for all pairs, within the metric tolerance.
pub fn is_lip1(f: &[f64], d: &DistMatrix) -> bool {
    let slack = tol::METRIC * d.max_entry().max(1.0);
    (0..f.len()).all(|i| (0..f.len()).all(|j| (f[i] - f[j]).abs() <= d[(i, j)] + slack))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be a finite nonnegative number, got {lambda}")));
    }
    Ok(())
}

/// `inf { eps > 0 : mu(|f - g| >= eps) <= lambda * eps }`.
pub fn me_lambda(
    f: &FunctionOnSpace,
    g: &FunctionOnSpace,
    weights: &[f64],
    lambda: f64,
) -> Result<f64> {
    if f.len() != weights.len() || g.len() != weights.len() {
        return Err(Error::domain("function lengths do not match the weights"));
    }
    check_lambda(lambda)?;
    let h: Vec<f64> = f.0.iter().zip(&g.0).map(|(a, b)| (a - b).abs()).collect();
    Ok(me_of_gaps(&h, weights, lambda))
}

/// `me_lambda` of a nonnegative gap vector against zero.
fn me_of_gaps(h: &[f64], weights: &[f64], lambda: f64) -> f64 {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&x, &w)| (x, w))
        .collect();
    let top = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    if lambda == 0.0 {
        return top;
    }
    // tail mass strictly above c
    let above = |c: f64| -> f64 { pts.iter().filter(|p| p.0 > c).map(|p| p.1).sum() };
    let mut cands: Vec<f64> = vec![0.0];
    for &(x, _) in &pts {
        cands.push(x);
        let tail: f64 = pts.iter().filter(|p| p.0 >= x).map(|p| p.1).sum();
        cands.push(tail / lambda);
    }
    cands.sort_by(f64::total_cmp);
    cands
        .into_iter()
        .find(|&c| above(c) <= lambda * c * (1.0 + 1e-12))
        .unwrap_or(top)
}

/// `me_lambda` between two maps into a metric space, i.e. of the gap vector
/// `x -> d_Y(F(x), G(x))` against zero.
pub fn me_lambda_maps(
    fmap: &[usize],
    gmap: &[usize],
    weights: &[f64],
    dy: &DistMatrix,
    lambda: f64,
) -> Result<f64> {
    if fmap.len() != weights.len() || gmap.len() != weights.len() {
        return Err(Error::domain("map lengths do not match the weights"));
    }
    if fmap.iter().chain(gmap).any(|&y| y >= dy.n()) {
        return Err(Error::domain("map target index out of range"));
    }
    check_lambda(lambda)?;
    let h: Vec<f64> = fmap.iter().zip(gmap).map(|(&a, &b)| dy[(a, b)]).collect();
    Ok(me_of_gaps(&h, weights, lambda))
}

/// Inf-convolution `x -> min_{y in anchor} f(y) + d(x, y)`, taken with the
/// shortest-path closure of `d` so the result is 1-Lipschitz even when `d`
/// violates the triangle inequality.
pub fn project_to_lip1(
    f: &FunctionOnSpace,
    d: &DistMatrix,
    anchor: &[usize],
) -> Result<FunctionOnSpace> {
    if anchor.is_empty() {
        return Err(Error::domain("anchor set is empty"));
    }
    if f.len() != d.n() || anchor.iter().any(|&a| a >= d.n()) {
        return Err(Error::domain("anchor or function does not match the distance matrix"));
    }
    let dc = d.path_closure();
    Ok(inf_convolution(f.values(), &dc, anchor).into())
}

fn inf_convolution(f: &[f64], dc: &DistMatrix, anchor: &[usize]) -> Vec<f64> {
    (0..dc.n())
        .map(|x| {
            anchor
                .iter()
                .map(|&y| f[y] + dc[(x, y)])
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Sup-distance over `support` from `f` to `Lip_1(dc)`; `dc` must satisfy the
/// triangle inequality.
pub fn nearest_lip1_sup(f: &[f64], dc: &DistMatrix, support: &[usize]) -> f64 {
    let mut gap = 0.0f64;
    for &i in support {
        for &j in support {
            gap = gap.max(f[i] - f[j] - dc[(i, j)]);
        }
    }
    gap / 2.0
}

/// Points of `support` grouped by zero closure distance, in support order.
fn zero_classes(dc: &DistMatrix, support: &[usize]) -> Vec<Vec<usize>> {
    let slack = tol::METRIC * dc.max_entry().max(1.0);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &i in support {
        match classes.iter_mut().find(|c| dc[(c[0], i)] <= slack) {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    classes
}

/// Labelled trees on `k` nodes as edge lists (Prufer decoding).
fn labelled_trees(k: usize) -> Vec<Vec<(usize, usize)>> {
    match k {
        0 | 1 => return vec![Vec::new()],
        2 => return vec![vec![(0, 1)]],
        _ => {}
    }
    let len = k - 2;
    let total = k.pow(len as u32);
    let mut out = Vec::with_capacity(total);
    let mut seq = vec![0usize; len];
    for code in 0..total {
        let mut c = code;
        for s in seq.iter_mut() {
            *s = c % k;
            c /= k;
        }
        let mut degree = vec![1usize; k];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut edges = Vec::with_capacity(k - 1);
        for &s in &seq {
            let leaf = (0..k).find(|&v| degree[v] == 1).expect("a leaf exists");
            edges.push((leaf, s));
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..k).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1]));
        out.push(edges);
    }
    out
}

/// Extreme points of `{f : |f_i - f_j| <= d_ij, f_base = 0}` on the support of
/// `weights`, where `base` is the first support point.
///
/// A vertex is fixed by a spanning tree of tight constraints, so the search
/// runs over labelled trees on the zero-distance classes of the support and
/// both signs of every edge. `max_support` bounds the number of classes.
/// Values off the support are filled in by the inf-convolution extension.
pub fn lip1_vertices(
    d: &DistMatrix,
    weights: &[f64],
    max_support: usize,
) -> Result<Vec<FunctionOnSpace>> {
    if weights.len() != d.n() {
        return Err(Error::domain("weights do not match the distance matrix"));
    }
    let support: Vec<usize> = (0..d.n()).filter(|&i| weights[i] > 0.0).collect();
    if support.is_empty() {
        return Err(Error::domain("no point has positive weight"));
    }
    let dc = d.path_closure();
    let classes = zero_classes(&dc, &support);
    let k = classes.len();
    if k > max_support {
        return Err(Error::SizeLimit {
            what: "Lipschitz polytope support classes",
            size: k,
            limit: max_support,
        });
    }
    let reps: Vec<usize> = classes.iter().map(|c| c[0]).collect();
    let dq = dc.restrict(&reps);
    let slack = tol::METRIC * dq.max_entry().max(1.0);

    let mut found: Vec<Vec<f64>> = Vec::new();
    for edges in labelled_trees(k) {
        let mut adj = vec![Vec::new(); k];
        for (e, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        for signs in 0u32..(1 << edges.len()) {
            let mut v = vec![f64::NAN; k];
            v[0] = 0.0;
            let mut queue = VecDeque::from([0usize]);
            while let Some(u) = queue.pop_front() {
                for &(w, e) in &adj[u] {
                    if v[w].is_nan() {
                        let s = if signs >> e & 1 == 1 { 1.0 } else { -1.0 };
                        v[w] = v[u] + s * dq[(u, w)];
                        queue.push_back(w);
                    }
                }
            }
            let feasible =
                (0..k).all(|a| (0..k).all(|b| (v[a] - v[b]).abs() <= dq[(a, b)] + slack));
            if feasible && !found.iter().any(|u| close(u, &v)) {
                found.push(v);
            }
        }
    }
    found.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    Ok(found
        .into_iter()
        .map(|v| {
            let mut on_support = vec![0.0; d.n()];
            for (c, class) in classes.iter().enumerate() {
                for &i in class {
                    on_support[i] = v[c];
                }
            }
            let ext = inf_convolution(&on_support, &dc, &support);
            let mut full = ext;
            for &i in &support {
                full[i] = on_support[i];
            }
            FunctionOnSpace(full)
        })
        .collect())
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol::VERTEX)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HMode {
    /// Vertex enumeration, `lambda = 0` only.
    #[default]
    Exact0,
    /// Sampled functions with exact inner distances; a lower bound.
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundTag {
    Exact,
    LowerBound,
    Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HlipOptions {
    pub mode: HMode,
    pub samples: usize,
    pub seed: u64,
    /// Vertex enumeration limit on zero-distance classes.
    pub max_support: usize,
    /// Exact subset search limit (sampled mode and coupling search).
    pub max_cells: usize,
}

impl Default for HlipOptions {
    fn default() -> Self {
        HlipOptions {
            mode: HMode::Exact0,
            samples: 256,
            seed: 0,
            max_support: 6,
            max_cells: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HResult {
    pub value: f64,
    pub tag: BoundTag,
    /// Directed parts `(d1 -> d2, d2 -> d1)` before symmetrisation, mass gap
    /// excluded.
    pub directed: (f64, f64),
    pub mass_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling>,
}

/// Hausdorff distance in `me_lambda` between `Lip_1(d1)` and `Lip_1(d2)`.
pub fn hli_lambda(pair: &SemiDistancePair, lambda: f64, opts: &HlipOptions) -> Result<HResult> {
    check_lambda(lambda)?;
    let support: Vec<usize> = (0..pair.len()).filter(|&i| pair.weights[i] > 0.0).collect();
    if support.is_empty() {
        return Err(Error::domain("pair has no positive weight"));
    }
    let c1 = pair.d1.path_closure();
    let c2 = pair.d2.path_closure();
    match opts.mode {
        HMode::Exact0 => {
            if lambda != 0.0 {
                return Err(Error::domain("exact0 mode requires lambda = 0"));
            }
            let directed = |from: &DistMatrix, to: &DistMatrix| -> Result<f64> {
                Ok(lip1_vertices(from, &pair.weights, opts.max_support)?
                    .iter()
                    .map(|v| nearest_lip1_sup(v.values(), to, &support))
                    .fold(0.0, f64::max))
            };
            let a = directed(&c1, &c2)?;
            let b = directed(&c2, &c1)?;
            Ok(HResult {
                value: a.max(b),
                tag: BoundTag::Exact,
                directed: (a, b),
                mass_gap: 0.0,
                coupling: None,
            })
        }
        HMode::Sampled => {
            if support.len() > opts.max_cells {
                return Err(Error::SizeLimit {
                    what: "pair cells",
                    size: support.len(),
                    limit: opts.max_cells,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let a = sampled_directed(pair, &c1, &c2, &support, lambda, opts, &mut rng);
            let b = sampled_directed(pair, &c2, &c1, &support, lambda, opts, &mut rng);
            Ok(HResult {
                value: a.max(b),
                tag: BoundTag::LowerBound,
                directed: (a, b),
                mass_gap: 0.0,
                coupling: None,
            })
        }
    }
}

/// `inf_{g in Lip_1(to)} me_lambda(f, g)` computed exactly on the support.
pub fn distance_to_lip1(
    f: &[f64],
    to_closure: &DistMatrix,
    weights: &[f64],
    lambda: f64,
) -> f64 {
    let n = f.len();
    let gap = DistMatrix::from_fn(n, |i, j| {
        (((f[i] - f[j]).abs() - to_closure[(i, j)]).max(0.0)) / 2.0
    });
    subset_minmax(weights, &gap, lambda, true).0
}

fn sampled_directed(
    pair: &SemiDistancePair,
    from: &DistMatrix,
    to: &DistMatrix,
    support: &[usize],
    lambda: f64,
    opts: &HlipOptions,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut best = 0.0f64;
    let mut consider = |f: &[f64]| {
        best = best.max(distance_to_lip1(f, to, &pair.weights, lambda));
    };
    if let Ok(vs) = lip1_vertices(from, &pair.weights, opts.max_support) {
        for v in &vs {
            consider(v.values());
        }
    }
    let diam = from.max_entry();
    for _ in 0..opts.samples {
        consider(&sample_lip1(from, support, diam, rng));
    }
    best
}

/// A random member of `Lip_1(dc)`: a signed convex combination of distance
/// cones at random anchors, perturbed on the anchors and inf-convolved back.
fn sample_lip1(dc: &DistMatrix, support: &[usize], diam: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = dc.n();
    let size = rng.gen_range(1..=support.len());
    let mut anchor: Vec<usize> = support.to_vec();
    anchor.shuffle(rng);
    anchor.truncate(size);
    let coef: Vec<f64> = anchor.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = coef.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let signs: Vec<f64> = anchor
        .iter()
        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let mut f: Vec<f64> = (0..n)
        .map(|x| {
            anchor
                .iter()
                .zip(&coef)
                .zip(&signs)
                .map(|((&a, c), s)| s * c / total * dc[(x, a)])
                .sum()
        })
        .collect();
    for &a in &anchor {
        f[a] += rng.gen_range(-0.5..=0.5) * diam;
    }
    inf_convolution(&f, dc, &anchor)
}

/// Observable distance between finite mm-spaces.
///
/// `Exact0`: for a coupling-induced pair both matrices are pseudometrics, and
/// the vertex computation reduces to half the largest discrepancy, so the
/// optimal coupling is the one of `box_0`. That coupling is found exactly and
/// its pair is evaluated by vertex enumeration.
///
/// `Sampled`: sampled lower bounds on the box-optimal and the product
/// coupling; the minimum is reported as an estimate.
pub fn observable_distance(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    lambda: f64,
    opts: &HlipOptions,
) -> Result<HResult> {
    check_lambda(lambda)?;
    let (xe, ye, gap) = equalise(x, y)?;
    let box_opts = BoxOptions {
        mode: SolveMode::Exact,
        max_cells: opts.max_cells,
        seed: opts.seed,
        ..BoxOptions::default()
    };
    let cells = xe.support().len() * ye.support().len();
    let mut result = match opts.mode {
        HMode::Exact0 => {
            if lambda != 0.0 {
                return Err(Error::domain("exact0 mode requires lambda = 0"));
            }
            let b = box_distance(&xe, &ye, 0.0, &box_opts)?;
            let pi = b.certificate.coupling.expect("exact box returns a coupling");
            let pair = pullback_pair(&xe, &ye, &pi)?;
            let mut h = hli_lambda(&pair, 0.0, opts)?;
            h.coupling = Some(pi);
            h
        }
        HMode::Sampled => {
            let search = if cells <= opts.max_cells {
                box_opts
            } else {
                BoxOptions {
                    mode: SolveMode::Heuristic,
                    ..box_opts
                }
            };
            let b = box_distance(&xe, &ye, lambda, &search)?;
            let mut candidates = vec![Coupling::product(&xe, &ye)?];
            if let Some(pi) = b.certificate.coupling {
                candidates.insert(0, pi);
            }
            let mut best: Option<HResult> = None;
            for pi in candidates {
                let pair = pullback_pair(&xe, &ye, &pi)?;
                let mut h = hli_lambda(&pair, lambda, opts)?;
                h.coupling = Some(pi);
                if best.as_ref().is_none_or(|b| h.value < b.value) {
                    best = Some(h);
                }
            }
            let mut h = best.expect("at least one coupling");
            h.tag = BoundTag::Estimate;
            h
        }
    };
    result.value += gap;
    result.mass_gap = gap;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: &[f64]) -> FunctionOnSpace {
        FunctionOnSpace(v.to_vec())
    }

    fn two(d: f64) -> DistMatrix {
        DistMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { d })
    }

    #[test]
    fn me_lambda_examples() {
        let w = [0.5, 0.5];
        assert_eq!(me_lambda(&f(&[1.0, 2.0]), &f(&[1.0, 2.0]), &w, 1.0).unwrap(), 0.0);
        assert_eq!(me_lambda(&f(&[0.3, 0.0]), &f(&[0.0, 0.0]), &w, 1.0).unwrap(), 0.3);
        assert_eq!(me_lambda(&f(&[0.3, 0.0]), &f(&[0.0, 0.0]), &w, 2.0).unwrap(), 0.25);
        // lambda = 0 is the sup over the support
        assert_eq!(me_lambda(&f(&[0.3, 9.0]), &f(&[0.0, 0.0]), &[1.0, 0.0], 0.0).unwrap(), 0.3);
    }

    #[test]
    fn me_lambda_maps_examples() {
        let dy = two(1.0);
        assert_eq!(me_lambda_maps(&[0, 1], &[0, 1], &[0.5, 0.5], &dy, 1.0).unwrap(), 0.0);
        assert_eq!(me_lambda_maps(&[0], &[1], &[1.0], &dy, 1.0).unwrap(), 1.0);
        let dy5 = two(5.0);
        assert!((me_lambda_maps(&[0, 0], &[0, 1], &[0.8, 0.2], &dy5, 1.0).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let d = two(1.0);
        assert_eq!(project_to_lip1(&f(&[0.0, 5.0]), &d, &[0, 1]).unwrap().0, vec![0.0, 1.0]);
        assert_eq!(project_to_lip1(&f(&[0.0, 0.5]), &d, &[0, 1]).unwrap().0, vec![0.0, 0.5]);
        let d3 = DistMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        assert_eq!(project_to_lip1(&f(&[0.0, 7.0, -3.0]), &d3, &[0]).unwrap().0, vec![0.0, 1.0, 2.0]);
        assert!(matches!(project_to_lip1(&f(&[0.0, 0.0]), &d, &[]), Err(Error::Domain(_))));
    }

    #[test]
    fn vertices_small_cases() {
        let one = lip1_vertices(&DistMatrix::zeros(1), &[1.0], 6).unwrap();
        assert_eq!(one, vec![f(&[0.0])]);
        let v = lip1_vertices(&two(1.0), &[0.5, 0.5], 6).unwrap();
        assert_eq!(v, vec![f(&[0.0, -1.0]), f(&[0.0, 1.0])]);
        let tri = DistMatrix::from_fn(3, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(lip1_vertices(&tri, &[1.0; 3], 6).unwrap().len(), 6);
        let seven = DistMatrix::from_fn(7, |i, j| if i == j { 0.0 } else { 1.0 });
        assert!(matches!(lip1_vertices(&seven, &[1.0; 7], 6), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn hli_examples() {
        let pair = SemiDistancePair::new(vec![0.5, 0.5], two(1.0), two(2.0)).unwrap();
        let h = hli_lambda(&pair, 0.0, &HlipOptions::default()).unwrap();
        assert_eq!(h.value, 0.5);
        // Lip_1(d1) is inside Lip_1(d2) when d1 <= d2
        assert_eq!(h.directed.0, 0.0);
        let same = SemiDistancePair::new(vec![0.5, 0.5], two(1.0), two(1.0)).unwrap();
        assert_eq!(hli_lambda(&same, 0.0, &HlipOptions::default()).unwrap().value, 0.0);
        assert!(matches!(hli_lambda(&pair, 1.0, &HlipOptions::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn observable_two_point() {
        let x = FiniteMMSpace::two_point(1.0, 0.5, 0.5).unwrap();
        let y = FiniteMMSpace::two_point(2.0, 0.5, 0.5).unwrap();
        let h = observable_distance(&x, &y, 0.0, &HlipOptions::default()).unwrap();
        assert_eq!(h.value, 0.5);
        assert_eq!(h.tag, BoundTag::Exact);
        assert_eq!(observable_distance(&x, &x, 0.0, &HlipOptions::default()).unwrap().value, 0.0);
    }

    #[test]
    fn sampled_is_a_lower_bound_of_exact_at_zero() {
        let pair = SemiDistancePair::new(vec![0.5, 0.5], two(1.0), two(2.0)).unwrap();
        let opts = HlipOptions {
            mode: HMode::Sampled,
            samples: 32,
            ..HlipOptions::default()
        };
        let s = hli_lambda(&pair, 0.0, &opts).unwrap();
        assert_eq!(s.tag, BoundTag::LowerBound);
        assert!(s.value <= 0.5 + 1e-12);
    }
}
