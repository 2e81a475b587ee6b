//! Convergence and stability machinery: Prokhorov distance, maps that are
//! Lipschitz up to an additive error, almost-isometry witnesses, empirical
//! convergence runs, Lipschitz domination and homogeneity.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::box_distance::{
    box_distance, box_upper_from_witness, complete_coupling, subset_minmax, BoxOptions,
};
use crate::clique::{greedy_clique, max_weight_clique, Graph};
use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::iso::measure_isometries;
use crate::lipschitz::me_lambda_maps;
use crate::space::{DistMatrix, FiniteMMSpace};
use crate::flow::bipartite_max_flow;
use crate::tol;

/// Prokhorov distance between two weightings of the same finite space, with a
/// coupling that moves at most `eps` of mass farther than `eps`.
///
/// With closed neighbourhoods, `mu(A) <= nu(A^eps) + eps` for all `A` holds
/// iff the transport graph `{d <= eps}` carries at least `m - eps`, so the
/// answer is `min_k max(t_k, m - F(t_k))` over the distance values `t_k`.
pub fn prokhorov_plan(dist: &DistMatrix, mu: &[f64], nu: &[f64]) -> Result<(f64, Coupling)> {
    let n = dist.n();
    if mu.len() != n || nu.len() != n {
        return Err(Error::domain("weightings do not match the space"));
    }
    if mu.iter().chain(nu).any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::domain("weightings must be finite and nonnegative"));
    }
    let (mm, mn): (f64, f64) = (mu.iter().sum(), nu.iter().sum());
    if (mm - mn).abs() > tol::MASS * mm.max(mn).max(1.0) {
        return Err(Error::domain(format!("unequal total masses {mm} and {mn}")));
    }
    let snap = tol::MASS * mm.max(1.0);
    let mut ts: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| dist[(i, j)]).collect();
    ts.push(0.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();

    let mut best: Option<(f64, Vec<(usize, usize)>, Vec<f64>)> = None;
    for &t in &ts {
        if best.as_ref().is_some_and(|b| t >= b.0) {
            break;
        }
        let cells: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| dist[(i, j)] <= t && mu[i] > 0.0 && nu[j] > 0.0)
            .collect();
        let flow = bipartite_max_flow(mu, nu, &cells);
        let short = mm - flow.value;
        let value = t.max(if short <= snap { 0.0 } else { short });
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, cells, flow.cell_flow));
        }
    }
    let (value, cells, flow) = best.expect("at least one threshold");
    let mut pi = Coupling::zeros(n, n);
    for (&(i, j), &f) in cells.iter().zip(&flow) {
        pi.set(i, j, f);
    }
    complete_coupling(&mut pi, mu, nu);
    Ok((value, pi))
}

/// Prokhorov distance between two weightings of the same finite space.
pub fn prokhorov(dist: &DistMatrix, mu: &[f64], nu: &[f64]) -> Result<f64> {
    prokhorov_plan(dist, mu, nu).map(|r| r.0)
}

/// Largest-mass subset on which `d_Y(f x, f x') <= lambda d_X(x, x') + eps`;
/// returned only if the dropped mass is at most `eps`. Exact clique search up
/// to `max_exact` support points, greedy above.
pub fn lipschitz_up_to_check(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    f: &[usize],
    lambda: f64,
    eps: f64,
    max_exact: usize,
) -> Result<Option<Vec<usize>>> {
    if f.len() != x.len() || f.iter().any(|&j| j >= y.len()) {
        return Err(Error::domain("map does not send X into Y"));
    }
    if !(lambda >= 0.0) || !(eps >= 0.0) {
        return Err(Error::domain("lambda and eps must be nonnegative"));
    }
    let support = x.support();
    let slack = tol::METRIC * x.dist().max_entry().max(y.dist().max_entry()).max(1.0);
    let g = Graph::from_fn(support.len(), |a, b| {
        let (i, k) = (support[a], support[b]);
        y.d(f[i], f[k]) <= lambda * x.d(i, k) + eps + slack
    });
    let w: Vec<f64> = support.iter().map(|&i| x.weights()[i]).collect();
    let (clique, mass) = if support.len() <= max_exact {
        max_weight_clique(&g, &w)
    } else {
        greedy_clique(&g, &w)
    };
    if x.total_mass() - mass <= eps + tol::MASS * x.total_mass().max(1.0) {
        Ok(Some(clique.iter().map(|&a| support[a]).collect()))
    } else {
        Ok(None)
    }
}

/// Almost-isometry data: a map `p: Xn -> X`, a retained subset of `Xn`, and
/// the error `eps` it certifies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub p: Vec<usize>,
    pub subset: Vec<usize>,
    pub eps: f64,
}

/// The three error terms of a witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessTerms {
    pub dropped_mass: f64,
    pub distortion: f64,
    /// Prokhorov distance of `p_* mu_Xn`, rescaled to the mass of `X`, to
    /// `mu_X`, plus the total-mass gap.
    pub prokhorov: f64,
}

impl WitnessTerms {
    pub fn max(&self) -> f64 {
        self.dropped_mass.max(self.distortion).max(self.prokhorov)
    }
}

fn pushforward_term(xn: &FiniteMMSpace, x: &FiniteMMSpace, p: &[usize]) -> Result<f64> {
    let (mn, m) = (xn.total_mass(), x.total_mass());
    let mut pushed = vec![0.0; x.len()];
    for (a, &z) in p.iter().enumerate() {
        pushed[z] += xn.weights()[a] * m / mn;
    }
    let gap = (mn - m).abs();
    Ok(prokhorov(x.dist(), &pushed, x.weights())? + if gap <= tol::MASS * m.max(1.0) { 0.0 } else { gap })
}

impl Witness {
    /// Evaluates the terms of this witness.
    pub fn terms(&self, xn: &FiniteMMSpace, x: &FiniteMMSpace) -> Result<WitnessTerms> {
        if self.p.len() != xn.len() || self.p.iter().any(|&z| z >= x.len()) {
            return Err(Error::domain("witness map does not send Xn into X"));
        }
        if self.subset.iter().any(|&a| a >= xn.len()) {
            return Err(Error::domain("witness subset index out of range"));
        }
        let kept: f64 = self.subset.iter().map(|&a| xn.weights()[a]).sum();
        let mut distortion = 0.0f64;
        for &a in &self.subset {
            for &b in &self.subset {
                distortion = distortion.max((xn.d(a, b) - x.d(self.p[a], self.p[b])).abs());
            }
        }
        Ok(WitnessTerms {
            dropped_mass: (xn.total_mass() - kept).max(0.0),
            distortion,
            prokhorov: pushforward_term(xn, x, &self.p)?,
        })
    }

    /// The witness invariants hold for the recorded `eps`.
    pub fn is_valid(&self, xn: &FiniteMMSpace, x: &FiniteMMSpace) -> Result<bool> {
        let t = self.terms(xn, x)?;
        Ok(t.max() <= self.eps + 1e-9)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exact,
    Annealing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessOptions {
    pub mode: SearchMode,
    /// Exact mode refuses supports larger than this on either side.
    pub max_points: usize,
    pub seed: u64,
    pub iterations: usize,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions {
            mode: SearchMode::Exact,
            max_points: 6,
            seed: 0,
            iterations: 2000,
        }
    }
}

/// Best retained subset for a fixed map, and the resulting witness value.
fn evaluate_map(xn: &FiniteMMSpace, x: &FiniteMMSpace, p: &[usize], exact: bool, cutoff: f64) -> Result<Option<Witness>> {
    let prok = pushforward_term(xn, x, p)?;
    if prok >= cutoff {
        return Ok(None);
    }
    let disc = DistMatrix::from_fn(xn.len(), |a, b| (xn.d(a, b) - x.d(p[a], p[b])).abs());
    let (value, subset, _) = subset_minmax(xn.weights(), &disc, 1.0, exact);
    let eps = value.max(prok);
    Ok((eps < cutoff).then(|| Witness {
        p: p.to_vec(),
        subset,
        eps,
    }))
}

/// Minimises `max(distortion, dropped mass, pushforward Prokhorov term)` over
/// maps `Xn -> X` and retained subsets.
pub fn witness_search(xn: &FiniteMMSpace, x: &FiniteMMSpace, opts: &WitnessOptions) -> Result<Witness> {
    let sn = xn.support();
    let sx = x.support();
    let base = sx[0];
    match opts.mode {
        SearchMode::Exact => {
            let size = sn.len().max(sx.len());
            if size > opts.max_points {
                return Err(Error::SizeLimit {
                    what: "witness support",
                    size,
                    limit: opts.max_points,
                });
            }
            let mut best: Option<Witness> = None;
            let mut digits = vec![0usize; sn.len()];
            let total = sx.len().pow(sn.len() as u32);
            for _ in 0..total {
                let mut p = vec![base; xn.len()];
                for (k, &a) in sn.iter().enumerate() {
                    p[a] = sx[digits[k]];
                }
                let cutoff = best.as_ref().map_or(f64::INFINITY, |b| b.eps - tol::VALUE);
                if let Some(w) = evaluate_map(xn, x, &p, true, cutoff)? {
                    best = Some(w);
                }
                for d in digits.iter_mut().rev() {
                    *d += 1;
                    if *d < sx.len() {
                        break;
                    }
                    *d = 0;
                }
            }
            Ok(best.expect("at least one map"))
        }
        SearchMode::Annealing => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let exact = sn.len() <= 64;
            // positional start: k-th support point to k-th support point
            let mut p = vec![base; xn.len()];
            for (k, &a) in sn.iter().enumerate() {
                p[a] = sx[k % sx.len()];
            }
            let mut cur = evaluate_map(xn, x, &p, exact, f64::INFINITY)?.expect("finite");
            let mut best = cur.clone();
            let t0 = x.dist().max_entry().max(1e-3);
            for it in 0..opts.iterations {
                let temp = t0 * (1.0 - it as f64 / opts.iterations as f64).max(1e-3) * 0.1;
                let mut cand = cur.p.clone();
                let a = sn[rng.gen_range(0..sn.len())];
                cand[a] = sx[rng.gen_range(0..sx.len())];
                let w = evaluate_map(xn, x, &cand, exact, f64::INFINITY)?.expect("finite");
                let accept = w.eps <= cur.eps || rng.gen_bool(((cur.eps - w.eps) / temp).exp().min(1.0));
                if accept {
                    cur = w;
                    if cur.eps < best.eps - tol::VALUE {
                        best = cur.clone();
                    }
                }
            }
            Ok(best)
        }
    }
}

/// Empirical space of `n` i.i.d. draws from `x`: sampled points keep their
/// multiplicity as weight, scaled to the mass of `x`.
pub fn empirical_space<R: Rng>(x: &FiniteMMSpace, n: usize, rng: &mut R) -> Result<FiniteMMSpace> {
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    let dist = WeightedIndex::new(x.weights()).map_err(|e| Error::domain(format!("cannot sample weights: {e}")))?;
    let mut counts = vec![0usize; x.len()];
    for _ in 0..n {
        counts[dist.sample(rng)] += 1;
    }
    let m = x.total_mass();
    x.reweighted(counts.iter().map(|&c| c as f64 / n as f64 * m).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Mean over seeds.
    pub value: f64,
    pub mode: String,
    pub per_seed: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub non_monotone: bool,
    /// Last mean value strictly below the first one.
    pub final_below_first: bool,
}

/// `box_1` between `x` and empirical spaces of the given sizes, averaged over
/// the seeds. Exact when the cell count allows it, otherwise the witness
/// bound with the natural sample-to-point map.
pub fn empirical_convergence_experiment(
    x: &FiniteMMSpace,
    sizes: &[usize],
    seeds: &[u64],
    max_cells: usize,
) -> Result<ConvergenceReport> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut per_seed = Vec::with_capacity(seeds.len());
        let mut mode = "exact";
        for &seed in seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let emp = empirical_space(x, n, &mut rng)?;
            let cells = emp.support().len() * x.support().len();
            let value = if cells <= max_cells {
                let opts = BoxOptions {
                    max_cells,
                    ..BoxOptions::default()
                };
                box_distance(&emp, x, 1.0, &opts)?.value
            } else {
                mode = "witness-upper-bound";
                let w = Witness {
                    p: (0..x.len()).collect(),
                    subset: emp.support(),
                    eps: 0.0,
                };
                box_upper_from_witness(&emp, x, &w, max_cells)?
            };
            per_seed.push(value);
        }
        let value = if per_seed.is_empty() {
            0.0
        } else {
            per_seed.iter().sum::<f64>() / per_seed.len() as f64
        };
        rows.push(ConvergenceRow {
            n,
            value,
            mode: mode.to_string(),
            per_seed,
        });
    }
    let non_monotone = rows.windows(2).any(|w| w[1].value > w[0].value);
    let final_below_first = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() > 1 => b.value < a.value,
        _ => false,
    };
    Ok(ConvergenceReport {
        rows,
        non_monotone,
        final_below_first,
    })
}

/// A 1-Lipschitz map between supports pushing `mu_X` to `c mu_Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationCertificate {
    /// Image of every point of `X`; entries off the support are unused.
    pub p: Vec<usize>,
    pub c: f64,
}

impl DominationCertificate {
    pub fn verify(&self, x: &FiniteMMSpace, y: &FiniteMMSpace) -> bool {
        if self.p.len() != x.len() || self.p.iter().any(|&j| j >= y.len()) || self.c < 1.0 - 1e-12 {
            return false;
        }
        let sx = x.support();
        let slack = tol::METRIC * x.dist().max_entry().max(y.dist().max_entry()).max(1.0);
        let lip = sx
            .iter()
            .all(|&a| sx.iter().all(|&b| y.d(self.p[a], self.p[b]) <= x.d(a, b) + slack));
        if !lip || sx.iter().any(|&a| y.weights()[self.p[a]] <= 0.0) {
            return false;
        }
        let mut pushed = vec![0.0; y.len()];
        for &a in &sx {
            pushed[self.p[a]] += x.weights()[a];
        }
        pushed
            .iter()
            .zip(y.weights())
            .all(|(p, w)| (p - self.c * w).abs() <= 1e-9 * self.c.max(1.0))
    }

    /// `X > Y` and `Y > Z` give `X > Z` with the composed map.
    pub fn compose(&self, next: &DominationCertificate) -> DominationCertificate {
        DominationCertificate {
            p: self.p.iter().map(|&j| next.p[j]).collect(),
            c: self.c * next.c,
        }
    }
}

/// Backtracking over maps `supp X -> supp Y` with 1-Lipschitz and mass
/// pruning.
pub fn domination_search(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    max_points: usize,
) -> Result<Option<DominationCertificate>> {
    let sx = x.support();
    let sy = y.support();
    let size = sx.len().max(sy.len());
    if size > max_points {
        return Err(Error::SizeLimit {
            what: "domination support",
            size,
            limit: max_points,
        });
    }
    let c = x.total_mass() / y.total_mass();
    if c < 1.0 - 1e-12 {
        return Ok(None);
    }
    let slack = tol::METRIC * x.dist().max_entry().max(y.dist().max_entry()).max(1.0);
    let mtol = 1e-9 * c.max(1.0);
    let target: Vec<f64> = sy.iter().map(|&j| c * y.weights()[j]).collect();
    // heavy points first prunes mass overflow early
    let mut order = sx.clone();
    order.sort_by(|&a, &b| x.weights()[b].total_cmp(&x.weights()[a]).then(a.cmp(&b)));

    struct Search<'a> {
        x: &'a FiniteMMSpace,
        y: &'a FiniteMMSpace,
        sy: &'a [usize],
        order: &'a [usize],
        target: &'a [f64],
        slack: f64,
        mtol: f64,
    }
    impl Search<'_> {
        fn go(&self, k: usize, assign: &mut Vec<usize>, load: &mut [f64]) -> bool {
            if k == self.order.len() {
                return load.iter().zip(self.target).all(|(l, t)| (l - t).abs() <= self.mtol);
            }
            let a = self.order[k];
            for (jj, &j) in self.sy.iter().enumerate() {
                let w = self.x.weights()[a];
                if load[jj] + w > self.target[jj] + self.mtol {
                    continue;
                }
                let lip = (0..k).all(|q| {
                    let b = self.order[q];
                    self.y.d(j, self.sy[assign[q]]) <= self.x.d(a, b) + self.slack
                });
                if !lip {
                    continue;
                }
                assign.push(jj);
                load[jj] += w;
                if self.go(k + 1, assign, load) {
                    return true;
                }
                load[jj] -= w;
                assign.pop();
            }
            false
        }
    }
    let s = Search {
        x,
        y,
        sy: &sy,
        order: &order,
        target: &target,
        slack,
        mtol,
    };
    let mut assign = Vec::with_capacity(order.len());
    let mut load = vec![0.0; sy.len()];
    if !s.go(0, &mut assign, &mut load) {
        return Ok(None);
    }
    let mut p = vec![sy[assign[0]]; x.len()];
    for (k, &a) in order.iter().enumerate() {
        p[a] = sy[assign[k]];
    }
    Ok(Some(DominationCertificate { p, c }))
}

fn check_group_size(n: usize, max_points: usize) -> Result<()> {
    if n > max_points {
        return Err(Error::SizeLimit {
            what: "isometry group support",
            size: n,
            limit: max_points,
        });
    }
    Ok(())
}

/// Measure-preserving isometries of the support, as maps on point indices
/// (points off the support are fixed).
pub fn isometry_group(x: &FiniteMMSpace, max_points: usize) -> Result<Vec<Vec<usize>>> {
    let support = x.support();
    check_group_size(support.len(), max_points)?;
    let sub = x.permuted(&support);
    Ok(measure_isometries(&sub, &sub, true)
        .into_iter()
        .map(|g| {
            let mut full: Vec<usize> = (0..x.len()).collect();
            for (k, &j) in g.iter().enumerate() {
                full[support[k]] = support[j];
            }
            full
        })
        .collect())
}

/// The isometry group of the support quotient acts transitively.
pub fn is_homogeneous(x: &FiniteMMSpace, max_points: usize) -> Result<bool> {
    let (q, _) = x.support_quotient();
    check_group_size(q.len(), max_points)?;
    let group = measure_isometries(&q, &q, true);
    let mut orbit = vec![false; q.len()];
    for g in &group {
        orbit[g[0]] = true;
    }
    Ok(orbit.iter().all(|&b| b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub eps: f64,
    /// Greedy subsequence with all pairwise distances at most `eps`.
    pub chain: Vec<usize>,
    /// Number of greedy leader clusters at radius `eps`.
    pub clusters: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsequenceReport {
    pub pairwise: Vec<Vec<f64>>,
    pub rows: Vec<ChainRow>,
}

/// Pairwise `me_1` distances of maps `X -> Y` and greedy `eps`-Cauchy
/// subsequences for each `eps` in the grid.
pub fn me1_subsequence_diagnostic(
    maps: &[Vec<usize>],
    weights: &[f64],
    dy: &DistMatrix,
    grid: &[f64],
) -> Result<SubsequenceReport> {
    if maps.is_empty() {
        return Ok(SubsequenceReport::default());
    }
    let k = maps.len();
    let mut pairwise = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = me_lambda_maps(&maps[i], &maps[j], weights, dy, 1.0)?;
            pairwise[i][j] = v;
            pairwise[j][i] = v;
        }
    }
    let rows = grid
        .iter()
        .map(|&eps| {
            let mut chain = vec![0];
            for j in 1..k {
                if chain.iter().all(|&c| pairwise[c][j] <= eps) {
                    chain.push(j);
                }
            }
            let mut leaders: Vec<usize> = Vec::new();
            for j in 0..k {
                if !leaders.iter().any(|&l| pairwise[l][j] <= eps) {
                    leaders.push(j);
                }
            }
            ChainRow {
                eps,
                chain,
                clusters: leaders.len(),
            }
        })
        .collect();
    Ok(SubsequenceReport { pairwise, rows })
}
