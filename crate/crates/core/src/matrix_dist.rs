//! Matrix distributions `mu_r`, reconstruction-based isomorphism testing, and
//! exact isomorphism search.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::iso::measure_isometries;
use crate::space::{DistMatrix, FiniteMMSpace};

/// Grid used to canonicalise matrix entries before comparison.
pub const ROUNDING: f64 = 1e-12;

/// Default cap on the number of enumerated tuples.
pub const DEFAULT_TUPLE_LIMIT: usize = 10_000_000;

/// Relative tolerance on masses when comparing two distributions.
pub const MASS_TOL: f64 = 1e-9;

type Key = Vec<i64>;

fn key_of(m: &DistMatrix) -> Key {
    m.rows()
        .iter()
        .flatten()
        .map(|&v| (v / ROUNDING).round() as i64)
        .collect()
}

fn matrix_of(r: usize, key: &Key) -> Vec<Vec<f64>> {
    key.chunks(r.max(1))
        .take(r)
        .map(|row| row.iter().map(|&k| k as f64 * ROUNDING).collect())
        .collect()
}

/// A finitely supported measure on `r x r` distance matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDistribution {
    pub r: usize,
    /// `(matrix, mass)`, sorted by the canonical matrix.
    pub entries: Vec<(Vec<Vec<f64>>, f64)>,
    /// Matrices are rounded to [`ROUNDING`] and sorted.
    pub canonical: bool,
}

impl MatrixDistribution {
    fn from_map(r: usize, map: BTreeMap<Key, f64>) -> Self {
        MatrixDistribution {
            r,
            entries: map.iter().map(|(k, &w)| (matrix_of(r, k), w)).collect(),
            canonical: true,
        }
    }

    fn as_map(&self) -> BTreeMap<Key, f64> {
        let mut map = BTreeMap::new();
        for (m, w) in &self.entries {
            let dm = DistMatrix::from_rows(m).expect("square by construction");
            *map.entry(key_of(&dm)).or_insert(0.0) += w;
        }
        map
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Same support, masses summing to one.
    pub fn normalized(&self) -> Self {
        let t = self.total_mass();
        MatrixDistribution {
            r: self.r,
            entries: self
                .entries
                .iter()
                .map(|(m, w)| (m.clone(), if t > 0.0 { w / t } else { 0.0 }))
                .collect(),
            canonical: self.canonical,
        }
    }

    /// Equal supports and masses within `MASS_TOL` relative to the larger total.
    pub fn approx_eq(&self, other: &Self) -> bool {
        if self.r != other.r {
            return false;
        }
        let scale = MASS_TOL * self.total_mass().max(other.total_mass()).max(1.0);
        let (a, b) = (self.as_map(), other.as_map());
        a.keys()
            .chain(b.keys())
            .all(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs() <= scale)
    }

    /// Total variation between the normalised distributions.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let (a, b) = (self.normalized().as_map(), other.normalized().as_map());
        let mut keys: Vec<&Key> = a.keys().chain(b.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
            .sum::<f64>()
            / 2.0
    }
}

/// `K_r(x_1, ..., x_r) = (d(x_i, x_j))_ij`.
pub fn k_r(space: &FiniteMMSpace, tuple: &[usize]) -> Result<DistMatrix> {
    if tuple.iter().any(|&i| i >= space.len()) {
        return Err(Error::domain("tuple index out of range"));
    }
    Ok(space.dist().restrict(tuple))
}

/// `(K_r)_* (mu^r)` by enumerating all support tuples.
pub fn exact_mu_r(space: &FiniteMMSpace, r: usize, limit: usize) -> Result<MatrixDistribution> {
    let support = space.support();
    let n = support.len();
    let count = (n as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    if count > limit as u128 {
        return Err(Error::SizeLimit {
            what: "matrix distribution tuples",
            size: usize::try_from(count).unwrap_or(usize::MAX),
            limit,
        });
    }
    let mut map: BTreeMap<Key, f64> = BTreeMap::new();
    let mut digits = vec![0usize; r];
    for _ in 0..count {
        let tuple: Vec<usize> = digits.iter().map(|&k| support[k]).collect();
        let w: f64 = tuple.iter().map(|&i| space.weights()[i]).product();
        *map.entry(key_of(&space.dist().restrict(&tuple))).or_insert(0.0) += w;
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    Ok(MatrixDistribution::from_map(r, map))
}

/// Empirical `mu_r` from `count` i.i.d. tuples drawn by weight; masses are
/// frequencies.
pub fn sample_mu_r(space: &FiniteMMSpace, r: usize, count: usize, seed: u64) -> Result<MatrixDistribution> {
    let mut map: BTreeMap<Key, f64> = BTreeMap::new();
    if count > 0 {
        let dist = WeightedIndex::new(space.weights())
            .map_err(|e| Error::domain(format!("cannot sample weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = 1.0 / count as f64;
        for _ in 0..count {
            let tuple: Vec<usize> = (0..r).map(|_| dist.sample(&mut rng)).collect();
            *map.entry(key_of(&space.dist().restrict(&tuple))).or_insert(0.0) += unit;
        }
    }
    Ok(MatrixDistribution::from_map(r, map))
}

/// A measure-preserving isometry between the supports, as `(x, y)` index
/// pairs over the zero-distance classes (one representative each). `None`
/// means the search was exhausted.
pub fn isomorphism_search(x: &FiniteMMSpace, y: &FiniteMMSpace) -> Option<Vec<(usize, usize)>> {
    let (qx, cx) = x.support_quotient();
    let (qy, cy) = y.support_quotient();
    measure_isometries(&qx, &qy, false)
        .into_iter()
        .next()
        .map(|map| map.iter().enumerate().map(|(a, &b)| (cx[a][0], cy[b][0])).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Distinguished,
    IndistinguishableUpToR,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionVerdict {
    pub verdict: Verdict,
    pub distinguishing_r: Option<usize>,
    pub max_r: usize,
    pub bijection: Option<Vec<(usize, usize)>>,
    /// The verdict agrees with the isomorphism search.
    pub consistent: bool,
}

/// Compares `mu_r` of both spaces for `r = 1..=max_r` (default: the larger
/// support size) and cross-checks against [`isomorphism_search`].
///
/// Masses are compared unnormalised, so `r = 1` separates different total
/// masses.
pub fn reconstruction_check(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    max_r: Option<usize>,
    limit: usize,
) -> Result<ReconstructionVerdict> {
    let max_r = max_r.unwrap_or_else(|| x.support().len().max(y.support().len()));
    let mut distinguishing_r = None;
    for r in 1..=max_r {
        if !exact_mu_r(x, r, limit)?.approx_eq(&exact_mu_r(y, r, limit)?) {
            distinguishing_r = Some(r);
            break;
        }
    }
    let bijection = isomorphism_search(x, y);
    let verdict = if distinguishing_r.is_some() {
        Verdict::Distinguished
    } else {
        Verdict::IndistinguishableUpToR
    };
    Ok(ReconstructionVerdict {
        consistent: (verdict == Verdict::IndistinguishableUpToR) == bijection.is_some(),
        verdict,
        distinguishing_r,
        max_r,
        bijection,
    })
}

/// A decomposition of a space into cells, each sitting over one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellDecomposition {
    pub cell_point: Vec<usize>,
    pub cell_mass: Vec<f64>,
}

impl CellDecomposition {
    /// One cell per point.
    pub fn trivial(x: &FiniteMMSpace) -> Self {
        CellDecomposition {
            cell_point: (0..x.len()).collect(),
            cell_mass: x.weights().to_vec(),
        }
    }

    /// The positive cells `(i, j)` of a coupling, each over its row point.
    pub fn from_coupling(pi: &Coupling) -> Self {
        let cells = pi.support_cells();
        CellDecomposition {
            cell_point: cells.iter().map(|c| c.0).collect(),
            cell_mass: cells.iter().map(|&(i, j)| pi.get(i, j)).collect(),
        }
    }

    /// The cell space: distances inherited through the cell map.
    pub fn cell_space(&self, x: &FiniteMMSpace) -> Result<FiniteMMSpace> {
        if self.cell_point.len() != self.cell_mass.len() || self.cell_point.iter().any(|&p| p >= x.len()) {
            return Err(Error::domain("cell decomposition does not fit the space"));
        }
        let n = self.cell_point.len();
        FiniteMMSpace::new(
            (0..n).map(|a| format!("c{a}")).collect(),
            self.cell_mass.clone(),
            DistMatrix::from_fn(n, |a, b| x.d(self.cell_point[a], self.cell_point[b])),
        )
    }
}

/// `mu_r` of the cell space equals `mu_r` of `x` for every `r <= max_r`.
pub fn parameter_invariance_check(
    x: &FiniteMMSpace,
    cells: &CellDecomposition,
    max_r: usize,
    limit: usize,
) -> Result<bool> {
    let s = cells.cell_space(x)?;
    for r in 1..=max_r {
        if !exact_mu_r(&s, r, limit)?.approx_eq(&exact_mu_r(x, r, limit)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(d: f64, a: f64, b: f64) -> FiniteMMSpace {
        FiniteMMSpace::two_point(d, a, b).unwrap()
    }

    #[test]
    fn k_r_examples() {
        let x = two(1.0, 0.5, 0.5);
        assert_eq!(k_r(&x, &[0]).unwrap().rows(), vec![vec![0.0]]);
        assert_eq!(k_r(&x, &[0, 1]).unwrap().rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(k_r(&x, &[0, 0]).unwrap().rows(), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn exact_mu_two_point() {
        let mu = exact_mu_r(&two(1.0, 0.5, 0.5), 2, DEFAULT_TUPLE_LIMIT).unwrap();
        assert_eq!(
            mu.entries,
            vec![
                (vec![vec![0.0, 0.0], vec![0.0, 0.0]], 0.5),
                (vec![vec![0.0, 1.0], vec![1.0, 0.0]], 0.5)
            ]
        );
        let p = FiniteMMSpace::point(3.0).unwrap();
        let mu1 = exact_mu_r(&p, 4, DEFAULT_TUPLE_LIMIT).unwrap();
        assert_eq!(mu1.entries.len(), 1);
        assert_eq!(mu1.entries[0].1, 81.0);
        assert_eq!(exact_mu_r(&two(1.0, 0.2, 0.3), 1, DEFAULT_TUPLE_LIMIT).unwrap().entries, vec![(vec![vec![0.0]], 0.5)]);
    }

    #[test]
    fn tuple_limit() {
        let x = two(1.0, 0.5, 0.5);
        assert!(matches!(exact_mu_r(&x, 4, 15), Err(Error::SizeLimit { size: 16, .. })));
    }

    #[test]
    fn sampling_examples() {
        let x = two(1.0, 0.5, 0.5);
        assert!(sample_mu_r(&x, 2, 0, 1).unwrap().is_empty());
        let p = FiniteMMSpace::point(1.0).unwrap();
        assert_eq!(sample_mu_r(&p, 3, 10, 1).unwrap().entries.len(), 1);
        let emp = sample_mu_r(&x, 2, 100_000, 9).unwrap();
        let exact = exact_mu_r(&x, 2, DEFAULT_TUPLE_LIMIT).unwrap();
        assert!(emp.total_variation(&exact) < 0.01);
    }

    #[test]
    fn isomorphism_examples() {
        let x = FiniteMMSpace::from_parts(
            vec![0.2, 0.3, 0.5],
            DistMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]]).unwrap(),
        )
        .unwrap();
        let y = x.permuted(&[2, 0, 1]);
        let b = isomorphism_search(&x, &y).unwrap();
        assert_eq!(b, vec![(0, 1), (1, 2), (2, 0)]);
        assert!(isomorphism_search(&two(1.0, 0.5, 0.5), &two(2.0, 0.5, 0.5)).is_none());
        assert_eq!(
            isomorphism_search(&two(1.0, 0.3, 0.7), &two(1.0, 0.7, 0.3)).unwrap(),
            vec![(0, 1), (1, 0)]
        );
    }

    #[test]
    fn reconstruction_examples() {
        let v = reconstruction_check(&two(1.0, 0.5, 0.5), &two(2.0, 0.5, 0.5), None, DEFAULT_TUPLE_LIMIT).unwrap();
        assert_eq!(v.distinguishing_r, Some(2));
        assert!(v.consistent);
        let w = reconstruction_check(&two(1.0, 0.3, 0.7), &two(1.0, 0.5, 0.5), None, DEFAULT_TUPLE_LIMIT).unwrap();
        assert_eq!(w.verdict, Verdict::Distinguished);
        let same = reconstruction_check(&two(1.0, 0.3, 0.7), &two(1.0, 0.7, 0.3), None, DEFAULT_TUPLE_LIMIT).unwrap();
        assert_eq!(same.verdict, Verdict::IndistinguishableUpToR);
        assert!(same.consistent);
    }

    #[test]
    fn cell_splittings() {
        let x = two(1.0, 0.5, 0.5);
        assert!(parameter_invariance_check(&x, &CellDecomposition::trivial(&x), 3, DEFAULT_TUPLE_LIMIT).unwrap());
        let split = CellDecomposition {
            cell_point: vec![0, 0, 1],
            cell_mass: vec![0.2, 0.3, 0.5],
        };
        assert!(parameter_invariance_check(&x, &split, 3, DEFAULT_TUPLE_LIMIT).unwrap());
        let merged = CellDecomposition {
            cell_point: vec![0, 0],
            cell_mass: vec![0.5, 0.5],
        };
        assert!(!parameter_invariance_check(&x, &merged, 3, DEFAULT_TUPLE_LIMIT).unwrap());
    }
}
