//! Seeded property battery over random small instances. Reports are plain
//! data so two runs with the same seed serialise identically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::box_distance::{box_distance, box_pair, box_upper_from_witness, BoxOptions};
use crate::coupling::{pullback_pair, Coupling};
use crate::error::Result;
use crate::limits::{domination_search, empirical_convergence_experiment, prokhorov, witness_search, WitnessOptions};
use crate::lipschitz::{hli_lambda, is_lip1, me_lambda, observable_distance, project_to_lip1, FunctionOnSpace, HlipOptions};
use crate::matrix_dist::{parameter_invariance_check, reconstruction_check, CellDecomposition, DEFAULT_TUPLE_LIMIT};
use crate::random::{random_pair, random_space, random_weights};
use crate::space::FiniteMMSpace;

/// Names accepted by [`run_suite`].
pub const PROPERTIES: &[&str] = &[
    "validation",
    "symmetry",
    "triangle",
    "sandwich",
    "monotone",
    "heuristic-upper",
    "coupling-upper",
    "me-metric",
    "projection",
    "h-below-box",
    "h-box-sandwich",
    "cell-splitting",
    "reconstruction",
    "prokhorov-metric",
    "witness-bound",
    "domination-compose",
    "convergence-trend",
];

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

struct Check {
    checked: usize,
    failures: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            checked: 0,
            failures: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.failures.len() < 10 {
            self.failures.push(what());
        }
    }
}

fn space<R: Rng>(rng: &mut R, max_n: usize, mixed_mass: bool) -> FiniteMMSpace {
    let n = rng.gen_range(1..=max_n);
    let mass = if mixed_mass { [0.5, 1.0, 1.5][rng.gen_range(0..3)] } else { 1.0 };
    random_space(rng, n, mass)
}

fn exact() -> BoxOptions {
    BoxOptions::default()
}

fn run_one(name: &str, rng: &mut ChaCha8Rng, c: &mut Check) -> Result<()> {
    match name {
        "validation" => {
            let x = space(rng, 4, false);
            c.expect(x.validate().is_valid(), || "random space fails validation".into());
            if x.len() >= 2 {
                let mut d = x.dist().clone();
                d[(0, 1)] += 0.5;
                let bad = FiniteMMSpace::new_unchecked(x.labels().to_vec(), x.weights().to_vec(), d);
                c.expect(!bad.validate().is_valid(), || "asymmetric perturbation not reported".into());
            }
        }
        "symmetry" => {
            for _ in 0..10 {
                let (x, y) = (space(rng, 3, true), space(rng, 3, true));
                let l = [0.0, 0.5, 1.0, 2.0][rng.gen_range(0..4)];
                let a = box_distance(&x, &y, l, &exact())?.value;
                let b = box_distance(&y, &x, l, &exact())?.value;
                c.expect((a - b).abs() <= TOL, || format!("box({l}) asymmetric: {a} vs {b}"));
                let perm: Vec<usize> = (0..x.len()).rev().collect();
                let z = box_distance(&x, &x.permuted(&perm), l, &exact())?.value;
                c.expect(z <= TOL, || format!("relabelled space at distance {z}"));
            }
        }
        "triangle" => {
            for _ in 0..10 {
                let (x, y, z) = (space(rng, 3, true), space(rng, 3, true), space(rng, 3, true));
                let l = [0.0, 0.5, 1.0, 2.0][rng.gen_range(0..4)];
                let xz = box_distance(&x, &z, l, &exact())?.value;
                let xy = box_distance(&x, &y, l, &exact())?.value;
                let yz = box_distance(&y, &z, l, &exact())?.value;
                c.expect(xz <= xy + yz + TOL, || format!("triangle fails at lambda {l}: {xz} > {xy} + {yz}"));
            }
        }
        "sandwich" => {
            for _ in 0..10 {
                let (x, y) = (space(rng, 3, false), space(rng, 3, false));
                let l = rng.gen_range(0.0..2.0);
                let a: f64 = rng.gen_range(0.1..=1.0);
                let full = box_distance(&x, &y, l, &exact())?.value;
                let scaled = box_distance(&x.scale_measure(a)?, &y.scale_measure(a)?, l, &exact())?.value;
                c.expect(a * full <= scaled + TOL && scaled <= full + TOL, || {
                    format!("sandwich fails: {a} * {full} vs {scaled}")
                });
            }
        }
        "monotone" => {
            for _ in 0..10 {
                let (x, y) = (space(rng, 3, true), space(rng, 3, true));
                let l = rng.gen_range(0.0..2.0);
                let l2 = l + rng.gen_range(0.0..2.0);
                let a = box_distance(&x, &y, l, &exact())?.value;
                let b = box_distance(&x, &y, l2, &exact())?.value;
                c.expect(b <= a + TOL, || format!("box({l2}) = {b} > box({l}) = {a}"));
            }
        }
        "heuristic-upper" => {
            for _ in 0..5 {
                let (x, y) = (space(rng, 4, false), space(rng, 4, false));
                let l = rng.gen_range(0.0..2.0);
                let e = box_distance(&x, &y, l, &exact())?.value;
                let h = box_distance(&x, &y, l, &BoxOptions::heuristic(rng.gen()))?.value;
                c.expect(h >= e - TOL, || format!("heuristic {h} below exact {e}"));
            }
        }
        "coupling-upper" => {
            for _ in 0..5 {
                let (x, y) = (space(rng, 3, false), space(rng, 3, false));
                let l = rng.gen_range(0.0..2.0);
                let e = box_distance(&x, &y, l, &exact())?.value;
                let pi = Coupling::random(&x, &y, rng)?;
                let v = box_pair(&pullback_pair(&x, &y, &pi)?, l, &exact())?.value;
                c.expect(v >= e - TOL, || format!("coupling value {v} below optimum {e}"));
            }
        }
        "me-metric" => {
            for _ in 0..20 {
                let n = rng.gen_range(1..6);
                let w = random_weights(rng, n, 1.0);
                let mut f = || FunctionOnSpace((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
                let (a, b, g) = (f(), f(), f());
                let l = [0.0, 0.5, 1.0, 3.0][rng.gen_range(0..4)];
                let ab = me_lambda(&a, &b, &w, l)?;
                let ba = me_lambda(&b, &a, &w, l)?;
                let ag = me_lambda(&a, &g, &w, l)?;
                let gb = me_lambda(&g, &b, &w, l)?;
                c.expect(ab == ba, || "me_lambda asymmetric".into());
                c.expect(ab <= ag + gb + TOL, || format!("me_lambda triangle: {ab} > {ag} + {gb}"));
                c.expect(me_lambda(&a, &a, &w, l)? == 0.0, || "me_lambda(f, f) != 0".into());
                c.expect(me_lambda(&a, &b, &w, l + 1.0)? <= ab + TOL, || "me_lambda increases in lambda".into());
            }
        }
        "projection" => {
            for _ in 0..10 {
                let x = space(rng, 5, false);
                let n = x.len();
                let f = FunctionOnSpace((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
                let k = rng.gen_range(1..=n);
                let anchor: Vec<usize> = (0..k).collect();
                let g = project_to_lip1(&f, x.dist(), &anchor)?;
                c.expect(is_lip1(g.values(), x.dist()), || "projection is not 1-Lipschitz".into());
                let all: Vec<usize> = (0..n).collect();
                let again = project_to_lip1(&g, x.dist(), &all)?;
                c.expect(
                    again.values().iter().zip(g.values()).all(|(a, b)| (a - b).abs() <= TOL),
                    || "projection of a 1-Lipschitz function moved it".into(),
                );
            }
        }
        "h-below-box" => {
            for _ in 0..10 {
                let n = rng.gen_range(1..=4);
                let pair = random_pair(rng, n);
                let h = hli_lambda(&pair, 0.0, &HlipOptions::default())?.value;
                let b = box_pair(&pair, 0.0, &exact())?.value;
                c.expect(h <= b + TOL, || format!("H_0 = {h} above box_0 = {b}"));
            }
        }
        "h-box-sandwich" => {
            for _ in 0..10 {
                let (x, y) = (space(rng, 3, false), space(rng, 3, false));
                let h = observable_distance(&x, &y, 0.0, &HlipOptions::default())?.value;
                let b = box_distance(&x, &y, 0.0, &exact())?.value;
                c.expect(h <= b + TOL && b <= 2.0 * h + TOL, || format!("sandwich fails: H_0 = {h}, box_0 = {b}"));
            }
        }
        "cell-splitting" => {
            for _ in 0..5 {
                let x = space(rng, 3, false);
                let y = space(rng, 3, false);
                let pi = Coupling::random(&x, &y, rng)?;
                let cells = CellDecomposition::from_coupling(&pi);
                let ok = parameter_invariance_check(&x, &cells, 3, DEFAULT_TUPLE_LIMIT)?;
                c.expect(ok, || "cell splitting changed mu_r".into());
            }
        }
        "reconstruction" => {
            for _ in 0..10 {
                let x = space(rng, 4, false);
                let y = if rng.gen_bool(0.5) {
                    let mut perm: Vec<usize> = (0..x.len()).collect();
                    perm.rotate_left(1);
                    x.permuted(&perm)
                } else {
                    space(rng, 4, false)
                };
                let v = reconstruction_check(&x, &y, Some(4), DEFAULT_TUPLE_LIMIT)?;
                c.expect(v.consistent, || format!("reconstruction disagrees with isomorphism search: {v:?}"));
            }
        }
        "prokhorov-metric" => {
            for _ in 0..10 {
                let x = space(rng, 4, false);
                let n = x.len();
                let (a, b, g) = (random_weights(rng, n, 1.0), random_weights(rng, n, 1.0), random_weights(rng, n, 1.0));
                let ab = prokhorov(x.dist(), &a, &b)?;
                let ba = prokhorov(x.dist(), &b, &a)?;
                let ag = prokhorov(x.dist(), &a, &g)?;
                let gb = prokhorov(x.dist(), &g, &b)?;
                c.expect((ab - ba).abs() <= TOL, || "prokhorov asymmetric".into());
                c.expect(ab <= ag + gb + TOL, || format!("prokhorov triangle: {ab} > {ag} + {gb}"));
                c.expect(prokhorov(x.dist(), &a, &a)? == 0.0, || "prokhorov(mu, mu) != 0".into());
            }
        }
        "witness-bound" => {
            for _ in 0..5 {
                let (xn, x) = (space(rng, 3, false), space(rng, 3, false));
                let w = witness_search(&xn, &x, &WitnessOptions::default())?;
                let bound = box_upper_from_witness(&xn, &x, &w, 64)?;
                let e = box_distance(&xn, &x, 1.0, &exact())?.value;
                c.expect(bound >= e - TOL, || format!("witness bound {bound} below exact {e}"));
            }
        }
        "domination-compose" => {
            for _ in 0..5 {
                let x = space(rng, 4, false);
                let y = x.permuted(&(0..x.len()).collect::<Vec<_>>());
                let z = FiniteMMSpace::point(1.0)?;
                if let (Some(a), Some(b)) = (domination_search(&x, &y, 7)?, domination_search(&y, &z, 7)?) {
                    c.expect(a.compose(&b).verify(&x, &z), || "composed certificate invalid".into());
                } else {
                    c.expect(false, || "expected dominations not found".into());
                }
            }
        }
        "convergence-trend" => {
            let x = space(rng, 3, false);
            let r = empirical_convergence_experiment(&x, &[10, 1000], &[0, 1, 2], 64)?;
            c.expect(r.final_below_first || r.rows[0].value == 0.0, || format!("no trend: {:?}", r.rows));
        }
        other => c.expect(false, || format!("unknown property {other}")),
    }
    Ok(())
}

/// Runs the named properties (all when `only` is empty). Each property gets
/// its own generator derived from `seed` and its name.
pub fn run_suite(seed: u64, only: &[String]) -> SuiteReport {
    let names: Vec<String> = if only.is_empty() {
        PROPERTIES.iter().map(|s| s.to_string()).collect()
    } else {
        only.to_vec()
    };
    let properties: Vec<PropertyResult> = names
        .iter()
        .map(|name| {
            let salt = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt);
            let mut c = Check::new();
            if let Err(e) = run_one(name, &mut rng, &mut c) {
                c.checked += 1;
                c.failures.push(format!("error: {e}"));
            }
            PropertyResult {
                name: name.clone(),
                passed: c.failures.is_empty(),
                checked: c.checked,
                failures: c.failures,
            }
        })
        .collect();
    SuiteReport {
        seed,
        passed: properties.iter().all(|p| p.passed),
        properties,
    }
}
