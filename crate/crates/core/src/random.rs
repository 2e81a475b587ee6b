//! Seeded generators of small test instances.

use rand::Rng;

use crate::coupling::SemiDistancePair;
use crate::space::{DistMatrix, FiniteMMSpace};

/// Weights drawn from `[0.1, 1)`, scaled to total mass `mass`.
pub fn random_weights<R: Rng>(rng: &mut R, n: usize, mass: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s * mass).collect()
}

/// Euclidean distances of `n` uniform points in the unit square.
pub fn random_euclidean<R: Rng>(rng: &mut R, n: usize) -> DistMatrix {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))).collect();
    DistMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()
        }
    })
}

/// Shortest-path metric of a complete graph with integer edge lengths in
/// `1..=max_len`. Many ties, which stresses isomorphism tests.
pub fn random_integer_metric<R: Rng>(rng: &mut R, n: usize, max_len: u32) -> DistMatrix {
    let mut d = DistMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(1..=max_len) as f64;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d.path_closure()
}

/// A random space with `n` points and total mass `mass`: Euclidean or
/// integer metric with equal odds.
pub fn random_space<R: Rng>(rng: &mut R, n: usize, mass: f64) -> FiniteMMSpace {
    let d = if rng.gen_bool(0.5) {
        random_euclidean(rng, n)
    } else {
        random_integer_metric(rng, n, 3)
    };
    FiniteMMSpace::from_parts(random_weights(rng, n, mass), d).expect("generated spaces are valid")
}

/// Symmetric nonnegative matrices with zero diagonal; no triangle inequality.
pub fn random_pair<R: Rng>(rng: &mut R, n: usize) -> SemiDistancePair {
    let sym = |rng: &mut R| {
        let mut d = DistMatrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.gen_range(0.0..2.0);
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        d
    };
    let d1 = sym(rng);
    let d2 = sym(rng);
    SemiDistancePair::new(random_weights(rng, n, 1.0), d1, d2).expect("generated pairs are valid")
}

/// Multiplies every off-diagonal distance by a factor in `[1, 1 + scale]`,
/// keeping the triangle inequality by taking the path closure.
pub fn perturb_metric<R: Rng>(rng: &mut R, x: &FiniteMMSpace, scale: f64) -> FiniteMMSpace {
    let n = x.len();
    let mut d = x.dist().clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = x.d(i, j) * (1.0 + rng.gen_range(0.0..=scale));
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    FiniteMMSpace::new(x.labels().to_vec(), x.weights().to_vec(), d.path_closure()).expect("perturbation keeps validity")
}
