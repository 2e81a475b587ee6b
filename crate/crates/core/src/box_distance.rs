//! Gromov's box distance.
//!
//! For a semi-distance pair `(d1, d2)` on a weighted finite set, `box_pair`
//! returns the smallest `eps` for which some subset `T` of mass at least
//! `m - lambda * eps` has `|d1 - d2| <= eps` on all of `T x T`. For a fixed
//! threshold `t` the best `T` is a maximum-weight clique of the graph
//! `{|d1 - d2| <= t}`, and that clique only changes at the finitely many
//! discrepancy values, so the optimum is
//!
//! ```text
//! min_k max(t_k, (m - W(t_k)) / lambda)
//! ```
//!
//! over the sorted discrepancy values `t_k`, where `W` is the clique weight.
//!
//! Between spaces the same scan runs over the `n_X * n_Y` joint cells; the mass
//! available at threshold `t` is the largest sub-coupling supported on a
//! pairwise compatible set of cells, i.e. the best max-flow over the maximal
//! cliques of the cell compatibility graph. Any sub-coupling extends to a full
//! coupling by spreading the leftover row and column mass as a product.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clique::{best_maximal_clique, greedy_clique, max_weight_clique, Graph};
use crate::coupling::{pullback_pair, Coupling, SemiDistancePair};
use crate::error::{Error, Result};
use crate::flow::bipartite_max_flow;
use crate::limits::{prokhorov_plan, Witness};
use crate::space::{DistMatrix, FiniteMMSpace};
use crate::tol;

/// How to solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    #[default]
    Exact,
    Heuristic,
}

/// What the returned value is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxMode {
    Exact,
    HeuristicUpperBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxOptions {
    pub mode: SolveMode,
    /// Exact mode refuses problems with more cells than this.
    pub max_cells: usize,
    pub seed: u64,
    /// Local-search steps in heuristic mode.
    pub iterations: usize,
}

impl Default for BoxOptions {
    fn default() -> Self {
        BoxOptions {
            mode: SolveMode::Exact,
            max_cells: 64,
            seed: 0,
            iterations: 200,
        }
    }
}

impl BoxOptions {
    pub fn heuristic(seed: u64) -> Self {
        BoxOptions {
            mode: SolveMode::Heuristic,
            seed,
            ..Self::default()
        }
    }
}

/// Retained set `T` and, between spaces, the coupling it lives on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCertificate {
    /// Indices into the pair's index set (pair level) or into the pulled-back
    /// pair of `coupling` (space level).
    pub subset: Vec<usize>,
    /// Space level only: retained `(x, y)` cells.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<(usize, usize)>,
    pub retained_mass: f64,
    /// Space level only: the coupling of the mass-equalised spaces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxResult {
    pub value: f64,
    pub mode: BoxMode,
    /// Additive mass-gap term `|m' - m|` already included in `value`.
    pub mass_gap: f64,
    pub certificate: BoxCertificate,
}

struct Choice<S> {
    value: f64,
    cert: S,
    mass: f64,
}

/// Scans thresholds `ts` (ascending, starting at 0) for
/// `min max(t, (m - mass(t)) / lambda)`. With `monotone` the mass oracle is
/// assumed nondecreasing in `t` and a binary search is used.
fn minimise_over_thresholds<S: Clone>(
    ts: &[f64],
    m: f64,
    lambda: f64,
    monotone: bool,
    mut mass_at: impl FnMut(f64) -> (S, f64),
) -> Choice<S> {
    let tol = tol::MASS * m.max(1.0);
    let mut cache: BTreeMap<usize, (S, f64)> = BTreeMap::new();
    let mut eval = |k: usize| -> (S, f64) {
        cache
            .entry(k)
            .or_insert_with(|| mass_at(ts[k]))
            .clone()
    };
    let objective = |t: f64, mass: f64| -> f64 {
        if lambda == 0.0 {
            if mass >= m - tol {
                t
            } else {
                f64::INFINITY
            }
        } else {
            t.max(((m - mass) / lambda).max(0.0))
        }
    };
    let settled = |t: f64, mass: f64| -> bool {
        if lambda == 0.0 {
            mass >= m - tol
        } else {
            t >= (m - mass) / lambda
        }
    };

    let last = ts.len() - 1;
    let candidates: Vec<usize> = if monotone {
        let (mut lo, mut hi) = (0usize, last);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let (_, mass) = eval(mid);
            if settled(ts[mid], mass) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo > 0 {
            vec![lo - 1, lo]
        } else {
            vec![lo]
        }
    } else {
        (0..=last).collect()
    };

    let mut best: Option<Choice<S>> = None;
    for k in candidates {
        let (cert, mass) = eval(k);
        let value = objective(ts[k], mass);
        let better = match &best {
            None => true,
            Some(b) => {
                value < b.value - tol::VALUE * b.value.abs().max(1.0)
                    || (value <= b.value + tol::VALUE * b.value.abs().max(1.0) && mass > b.mass)
            }
        };
        if better {
            best = Some(Choice { value, cert, mass });
        }
    }
    let mut best = best.expect("at least one threshold");
    if lambda > 0.0 && m / lambda < best.value {
        // empty retained set
        let (cert, _) = eval(0);
        best = Choice {
            value: m / lambda,
            cert,
            mass: 0.0,
        };
    }
    best
}

fn sorted_thresholds(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut ts: Vec<f64> = values.into_iter().chain([0.0]).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Generic core shared with the Lipschitz module: minimise
/// `max(max_{i,j in S} disc_ij, (m - mass(S)) / lambda)` over subsets `S` of
/// the positive-weight indices.
pub(crate) fn subset_minmax(
    weights: &[f64],
    disc: &DistMatrix,
    lambda: f64,
    exact: bool,
) -> (f64, Vec<usize>, f64) {
    let support: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let m: f64 = support.iter().map(|&i| weights[i]).sum();
    if lambda == 0.0 {
        let value = support
            .iter()
            .flat_map(|&i| support.iter().map(move |&j| (i, j)))
            .map(|(i, j)| disc[(i, j)])
            .fold(0.0, f64::max);
        return (value, support, m);
    }
    let sub = disc.restrict(&support);
    let w: Vec<f64> = support.iter().map(|&i| weights[i]).collect();
    let n = support.len();
    let ts = sorted_thresholds((0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| sub[(i, j)]));
    let choice = minimise_over_thresholds(&ts, m, lambda, exact, |t| {
        let g = Graph::from_fn(n, |i, j| sub[(i, j)] <= t);
        if exact {
            max_weight_clique(&g, &w)
        } else {
            greedy_clique(&g, &w)
        }
    });
    let subset = if choice.mass == 0.0 {
        Vec::new()
    } else {
        choice.cert.iter().map(|&k| support[k]).collect()
    };
    (choice.value, subset, choice.mass)
}

/// The box distance between two semi-distance functions on the same finite
/// measure space.
pub fn box_pair(pair: &SemiDistancePair, lambda: f64, opts: &BoxOptions) -> Result<BoxResult> {
    check_lambda(lambda)?;
    let support = pair.weights.iter().filter(|&&w| w > 0.0).count();
    let exact = match opts.mode {
        SolveMode::Exact => {
            if support > opts.max_cells {
                return Err(Error::SizeLimit {
                    what: "pair cells",
                    size: support,
                    limit: opts.max_cells,
                });
            }
            true
        }
        SolveMode::Heuristic => false,
    };
    let (value, subset, retained_mass) =
        subset_minmax(&pair.weights, &pair.discrepancy(), lambda, exact);
    Ok(BoxResult {
        value,
        mode: if exact {
            BoxMode::Exact
        } else {
            BoxMode::HeuristicUpperBound
        },
        mass_gap: 0.0,
        certificate: BoxCertificate {
            subset,
            cells: Vec::new(),
            retained_mass,
            coupling: None,
        },
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be a finite nonnegative number, got {lambda}")));
    }
    Ok(())
}

/// Brings two spaces to a common total mass per the unequal-mass rule: the
/// heavier one is rescaled down to the lighter one's mass. Returns the pair
/// and the mass gap to add.
pub(crate) fn equalise(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
) -> Result<(FiniteMMSpace, FiniteMMSpace, f64)> {
    let (mx, my) = (x.total_mass(), y.total_mass());
    if (mx - my).abs() <= tol::MASS * mx.max(my).max(1.0) {
        Ok((x.clone(), y.clone(), 0.0))
    } else if mx < my {
        Ok((x.clone(), y.scale_measure(mx / my)?, my - mx))
    } else {
        Ok((x.scale_measure(my / mx)?, y.clone(), mx - my))
    }
}

/// Gromov's box distance between finite mm-spaces.
pub fn box_distance(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    lambda: f64,
    opts: &BoxOptions,
) -> Result<BoxResult> {
    check_lambda(lambda)?;
    for s in [x, y] {
        let report = s.validate();
        if !report.is_valid() {
            return Err(Error::Invalid(report));
        }
    }
    let (xe, ye, gap) = equalise(x, y)?;
    let mut result = match opts.mode {
        SolveMode::Exact => {
            let cells = xe.support().len() * ye.support().len();
            if cells > opts.max_cells {
                return Err(Error::SizeLimit {
                    what: "coupling cells",
                    size: cells,
                    limit: opts.max_cells,
                });
            }
            exact_equal_mass(&xe, &ye, lambda)?
        }
        SolveMode::Heuristic => heuristic_equal_mass(&xe, &ye, lambda, opts)?,
    };
    result.value += gap;
    result.mass_gap = gap;
    Ok(result)
}

fn exact_equal_mass(x: &FiniteMMSpace, y: &FiniteMMSpace, lambda: f64) -> Result<BoxResult> {
    let sx = x.support();
    let sy = y.support();
    let cells: Vec<(usize, usize)> = sx
        .iter()
        .flat_map(|&i| sy.iter().map(move |&j| (i, j)))
        .collect();
    let nc = cells.len();
    let disc = DistMatrix::from_fn(nc, |a, b| {
        let ((i, j), (k, l)) = (cells[a], cells[b]);
        (x.d(i, k) - y.d(j, l)).abs()
    });
    let m = x.total_mass();
    let supply = x.weights();
    let demand = y.weights();
    let ts = sorted_thresholds((0..nc).flat_map(|a| ((a + 1)..nc).map(move |b| (a, b))).map(|(a, b)| disc[(a, b)]));

    let choice = minimise_over_thresholds(&ts, m, lambda, true, |t| {
        let g = Graph::from_fn(nc, |a, b| disc[(a, b)] <= t);
        let bound = |set: &[usize]| {
            let mut rows: Vec<usize> = set.iter().map(|&a| cells[a].0).collect();
            let mut cols: Vec<usize> = set.iter().map(|&a| cells[a].1).collect();
            rows.sort_unstable();
            rows.dedup();
            cols.sort_unstable();
            cols.dedup();
            let r: f64 = rows.iter().map(|&i| supply[i]).sum();
            let c: f64 = cols.iter().map(|&j| demand[j]).sum();
            r.min(c)
        };
        let flow_of = |set: &[usize]| {
            let cs: Vec<(usize, usize)> = set.iter().map(|&a| cells[a]).collect();
            bipartite_max_flow(supply, demand, &cs).value
        };
        let (clique, mass) = best_maximal_clique(&g, bound, flow_of, m, tol::MASS * m.max(1.0));
        (clique, mass.max(0.0))
    });

    // rebuild the sub-coupling on the chosen clique and complete it
    let chosen: Vec<(usize, usize)> = choice.cert.iter().map(|&a| cells[a]).collect();
    let transport = bipartite_max_flow(supply, demand, &chosen);
    let mut pi = Coupling::zeros(x.len(), y.len());
    for (&(i, j), &f) in chosen.iter().zip(&transport.cell_flow) {
        pi.set(i, j, f);
    }
    complete_coupling(&mut pi, supply, demand);

    let retained: Vec<(usize, usize)> = if choice.mass == 0.0 {
        Vec::new()
    } else {
        chosen.iter().copied().filter(|&(i, j)| pi.get(i, j) > 0.0).collect()
    };
    let pair_cells = pi.support_cells();
    let subset: Vec<usize> = retained
        .iter()
        .filter_map(|c| pair_cells.iter().position(|p| p == c))
        .collect();
    let retained_mass = retained.iter().map(|&(i, j)| pi.get(i, j)).sum();
    Ok(BoxResult {
        value: choice.value,
        mode: BoxMode::Exact,
        mass_gap: 0.0,
        certificate: BoxCertificate {
            subset,
            cells: retained,
            retained_mass,
            coupling: Some(pi),
        },
    })
}

/// Spreads the unmatched row and column mass of a sub-coupling as a product.
pub(crate) fn complete_coupling(pi: &mut Coupling, supply: &[f64], demand: &[f64]) {
    let rows = pi.row_sums();
    let cols = pi.col_sums();
    let rr: Vec<f64> = supply.iter().zip(&rows).map(|(w, s)| (w - s).max(0.0)).collect();
    let cr: Vec<f64> = demand.iter().zip(&cols).map(|(w, s)| (w - s).max(0.0)).collect();
    let residual: f64 = rr.iter().sum();
    if residual <= 0.0 {
        return;
    }
    for (i, a) in rr.iter().enumerate() {
        for (j, b) in cr.iter().enumerate() {
            if a * b > 0.0 {
                pi.set(i, j, pi.get(i, j) + a * b / residual);
            }
        }
    }
}

fn evaluate_coupling(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    pi: &Coupling,
    lambda: f64,
    max_cells: usize,
) -> Result<BoxResult> {
    let pair = pullback_pair(x, y, pi)?;
    let exact = pair.len() <= max_cells;
    let (value, subset, retained_mass) =
        subset_minmax(&pair.weights, &pair.discrepancy(), lambda, exact);
    Ok(BoxResult {
        value,
        mode: BoxMode::HeuristicUpperBound,
        mass_gap: 0.0,
        certificate: BoxCertificate {
            cells: subset.iter().map(|&k| pair.cells[k]).collect(),
            subset,
            retained_mass,
            coupling: Some(pi.clone()),
        },
    })
}

/// Local search over north-west-corner vertices of the transportation
/// polytope; moves transpose two entries of the row or column order.
fn heuristic_equal_mass(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    lambda: f64,
    opts: &BoxOptions,
) -> Result<BoxResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (wx, wy) = (x.weights(), y.weights());
    let better = |a: &BoxResult, b: &BoxResult| a.value < b.value - tol::VALUE * b.value.max(1.0);

    let mut best = evaluate_coupling(x, y, &Coupling::product(x, y)?, lambda, opts.max_cells)?;

    // starting orders: identity, and points sorted by weighted eccentricity
    let ecc = |s: &FiniteMMSpace| -> Vec<usize> {
        let e: Vec<f64> = (0..s.len())
            .map(|i| (0..s.len()).map(|j| s.weights()[j] * s.d(i, j)).sum())
            .collect();
        let mut o: Vec<usize> = (0..s.len()).collect();
        o.sort_by(|&a, &b| e[a].total_cmp(&e[b]).then(a.cmp(&b)));
        o
    };
    let mut starts = vec![
        ((0..x.len()).collect::<Vec<_>>(), (0..y.len()).collect::<Vec<_>>()),
        (ecc(x), ecc(y)),
    ];
    for _ in 0..2 {
        let mut ro: Vec<usize> = (0..x.len()).collect();
        let mut co: Vec<usize> = (0..y.len()).collect();
        ro.shuffle(&mut rng);
        co.shuffle(&mut rng);
        starts.push((ro, co));
    }

    let per_start = (opts.iterations / starts.len()).max(1);
    for (mut ro, mut co) in starts {
        let mut cur = evaluate_coupling(
            x,
            y,
            &Coupling::northwest_corner(wx, wy, &ro, &co),
            lambda,
            opts.max_cells,
        )?;
        for _ in 0..per_start {
            let (mut nro, mut nco) = (ro.clone(), co.clone());
            let swap_rows = co.len() < 2 || (ro.len() >= 2 && rng.gen_bool(0.5));
            let order = if swap_rows { &mut nro } else { &mut nco };
            if order.len() < 2 {
                break;
            }
            let a = rng.gen_range(0..order.len());
            let b = rng.gen_range(0..order.len());
            order.swap(a, b);
            let cand = evaluate_coupling(
                x,
                y,
                &Coupling::northwest_corner(wx, wy, &nro, &nco),
                lambda,
                opts.max_cells,
            )?;
            if !better(&cur, &cand) {
                cur = cand;
                ro = nro;
                co = nco;
            }
        }
        if better(&cur, &best) {
            best = cur;
        }
    }
    Ok(best)
}

/// Upper bound on `box_1(Xn, X)` from an almost-isometry witness.
///
/// The coupling glues `(id, p)_* mu_Xn` with a Prokhorov-optimal coupling of
/// `p_* mu_Xn` and `mu_X`; the bound is `box_pair` at `lambda = 1` of its
/// pullback, plus the mass gap when totals differ. `box_pair` picks its own
/// retained set, which does at least as well as the witness subset.
pub fn box_upper_from_witness(
    xn: &FiniteMMSpace,
    x: &FiniteMMSpace,
    w: &Witness,
    max_cells: usize,
) -> Result<f64> {
    if w.p.len() != xn.len() || w.p.iter().any(|&j| j >= x.len()) {
        return Err(Error::domain("witness map does not send Xn into X"));
    }
    let (xn_e, x_e, gap) = equalise(xn, x)?;
    let mut pushed = vec![0.0; x.len()];
    for (a, &z) in w.p.iter().enumerate() {
        pushed[z] += xn_e.weights()[a];
    }
    let (_, plan) = prokhorov_plan(x_e.dist(), &pushed, x_e.weights())?;
    let mut pi = Coupling::zeros(xn.len(), x.len());
    for (a, &z) in w.p.iter().enumerate() {
        let wa = xn_e.weights()[a];
        if wa <= 0.0 || pushed[z] <= 0.0 {
            continue;
        }
        for j in 0..x.len() {
            let g = plan.get(z, j);
            if g > 0.0 {
                pi.set(a, j, pi.get(a, j) + wa * g / pushed[z]);
            }
        }
    }
    let r = evaluate_coupling(&xn_e, &x_e, &pi, 1.0, max_cells)?;
    Ok(r.value + gap)
}
