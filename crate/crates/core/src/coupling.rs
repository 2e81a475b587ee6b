//! Couplings between finite mm-spaces and the pulled-back semi-distance pairs
//! they induce.
//!
//! A pair of parameters `[0, m] -> X`, `[0, m] -> Y` of atomic spaces is, up to
//! measure-preserving rearrangement of `[0, m]`, the same thing as the joint cell
//! masses `pi(x, y)`. Everything the box distance sees of the parameters is the
//! pair of pulled-back distance matrices on those cells.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{DistMatrix, FiniteMMSpace};
use crate::tol;

/// Nonnegative `n_x x n_y` matrix with prescribed marginals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    pi: Vec<f64>,
}

impl Coupling {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Coupling {
            rows,
            cols,
            pi: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::domain("coupling rows have unequal lengths"));
        }
        if rows.iter().flatten().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::domain("coupling entries must be finite and nonnegative"));
        }
        Ok(Coupling {
            rows: r,
            cols: c,
            pi: rows.iter().flatten().copied().collect(),
        })
    }

    /// Independent coupling `mu_X (x) mu_Y / m`. Requires equal total masses.
    pub fn product(x: &FiniteMMSpace, y: &FiniteMMSpace) -> Result<Self> {
        let m = check_equal_mass(x, y)?;
        let mut c = Coupling::zeros(x.len(), y.len());
        for i in 0..x.len() {
            for j in 0..y.len() {
                c.pi[i * y.len() + j] = x.weights()[i] * y.weights()[j] / m;
            }
        }
        Ok(c)
    }

    /// Coupling concentrated on the graph of a bijection `j = map[i]`. The
    /// masses of matched points must agree.
    pub fn from_matching(x: &FiniteMMSpace, y: &FiniteMMSpace, map: &[usize]) -> Result<Self> {
        if map.len() != x.len() || map.iter().any(|&j| j >= y.len()) {
            return Err(Error::domain("matching does not map X into Y"));
        }
        let mut c = Coupling::zeros(x.len(), y.len());
        for (i, &j) in map.iter().enumerate() {
            c.pi[i * y.len() + j] += x.weights()[i];
        }
        c.check_marginals(x.weights(), y.weights())?;
        Ok(c)
    }

    /// Diagonal self-coupling of `x`.
    pub fn diagonal(x: &FiniteMMSpace) -> Self {
        let n = x.len();
        let mut c = Coupling::zeros(n, n);
        for i in 0..n {
            c.pi[i * n + i] = x.weights()[i];
        }
        c
    }

    /// North-west corner rule after reordering rows and columns. Every result is
    /// a vertex of the transportation polytope.
    pub fn northwest_corner(
        row_w: &[f64],
        col_w: &[f64],
        row_order: &[usize],
        col_order: &[usize],
    ) -> Self {
        let mut c = Coupling::zeros(row_w.len(), col_w.len());
        let mut rr: Vec<f64> = row_order.iter().map(|&i| row_w[i]).collect();
        let mut cr: Vec<f64> = col_order.iter().map(|&j| col_w[j]).collect();
        let (mut a, mut b) = (0, 0);
        while a < rr.len() && b < cr.len() {
            let t = rr[a].min(cr[b]);
            c.pi[row_order[a] * col_w.len() + col_order[b]] += t;
            rr[a] -= t;
            cr[b] -= t;
            // advance whichever side is exhausted, preferring rows on ties
            if rr[a] <= cr[b] {
                a += 1;
            } else {
                b += 1;
            }
        }
        c
    }

    /// A random coupling: north-west corner on random orders, mixed with the
    /// product coupling by a random convex weight.
    pub fn random<R: Rng>(x: &FiniteMMSpace, y: &FiniteMMSpace, rng: &mut R) -> Result<Self> {
        let prod = Self::product(x, y)?;
        let mut ro: Vec<usize> = (0..x.len()).collect();
        let mut co: Vec<usize> = (0..y.len()).collect();
        ro.shuffle(rng);
        co.shuffle(rng);
        let nw = Self::northwest_corner(x.weights(), y.weights(), &ro, &co);
        let t: f64 = rng.gen_range(0.0..1.0);
        let mut c = nw;
        for (a, b) in c.pi.iter_mut().zip(&prod.pi) {
            *a = t * *a + (1.0 - t) * b;
        }
        Ok(c)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pi[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.pi[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.pi[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.pi.iter().sum()
    }

    /// Cells with positive mass, row-major.
    pub fn support_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) > 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn check_marginals(&self, row_w: &[f64], col_w: &[f64]) -> Result<()> {
        if row_w.len() != self.rows || col_w.len() != self.cols {
            return Err(Error::domain("coupling shape does not match the spaces"));
        }
        let scale = tol::MASS * row_w.iter().sum::<f64>().max(1.0);
        for (i, (s, w)) in self.row_sums().iter().zip(row_w).enumerate() {
            if (s - w).abs() > scale {
                return Err(Error::domain(format!(
                    "row {i} of coupling sums to {s}, expected {w}"
                )));
            }
        }
        for (j, (s, w)) in self.col_sums().iter().zip(col_w).enumerate() {
            if (s - w).abs() > scale {
                return Err(Error::domain(format!(
                    "column {j} of coupling sums to {s}, expected {w}"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_equal_mass(x: &FiniteMMSpace, y: &FiniteMMSpace) -> Result<f64> {
    let (mx, my) = (x.total_mass(), y.total_mass());
    if (mx - my).abs() > tol::MASS * mx.max(my).max(1.0) {
        return Err(Error::domain(format!(
            "total masses differ ({mx} vs {my}); rescale first"
        )));
    }
    Ok(mx)
}

/// Two semi-distance functions on a common finite measure space. The triangle
/// inequality is not required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiDistancePair {
    pub weights: Vec<f64>,
    pub d1: DistMatrix,
    pub d2: DistMatrix,
    /// Provenance when built from a coupling: cell `k` is `(x, y)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<(usize, usize)>,
}

impl SemiDistancePair {
    pub fn new(weights: Vec<f64>, d1: DistMatrix, d2: DistMatrix) -> Result<Self> {
        let pair = SemiDistancePair {
            weights,
            d1,
            d2,
            cells: Vec::new(),
        };
        pair.check()?;
        Ok(pair)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `|d1 - d2|` entrywise.
    pub fn discrepancy(&self) -> DistMatrix {
        DistMatrix::from_fn(self.len(), |i, j| (self.d1[(i, j)] - self.d2[(i, j)]).abs())
    }

    pub fn swapped(&self) -> Self {
        SemiDistancePair {
            weights: self.weights.clone(),
            d1: self.d2.clone(),
            d2: self.d1.clone(),
            cells: self.cells.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.weights.len();
        if self.d1.n() != n || self.d2.n() != n {
            return Err(Error::domain("pair matrices do not match the weight vector"));
        }
        if self.weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::domain("pair weights must be finite and nonnegative"));
        }
        for d in [&self.d1, &self.d2] {
            let scale = tol::METRIC * d.max_entry().max(1.0);
            for i in 0..n {
                if d[(i, i)].abs() > scale {
                    return Err(Error::domain("pair matrix has a nonzero diagonal"));
                }
                for j in 0..n {
                    if d[(i, j)] < -scale || (d[(i, j)] - d[(j, i)]).abs() > scale {
                        return Err(Error::domain("pair matrix is not a symmetric semi-distance"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Pulls `d_X` and `d_Y` back to the positive-mass cells of `pi`.
pub fn pullback_pair(
    x: &FiniteMMSpace,
    y: &FiniteMMSpace,
    pi: &Coupling,
) -> Result<SemiDistancePair> {
    check_equal_mass(x, y)?;
    pi.check_marginals(x.weights(), y.weights())?;
    let cells = pi.support_cells();
    let n = cells.len();
    Ok(SemiDistancePair {
        weights: cells.iter().map(|&(i, j)| pi.get(i, j)).collect(),
        d1: DistMatrix::from_fn(n, |a, b| x.d(cells[a].0, cells[b].0)),
        d2: DistMatrix::from_fn(n, |a, b| y.d(cells[a].1, cells[b].1)),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(d: f64) -> FiniteMMSpace {
        FiniteMMSpace::two_point(d, 0.5, 0.5).unwrap()
    }

    #[test]
    fn diagonal_pullback_has_equal_matrices() {
        let x = two_point(1.0);
        let pair = pullback_pair(&x, &x, &Coupling::diagonal(&x)).unwrap();
        assert_eq!(pair.d1, pair.d2);
        assert_eq!(pair.len(), 2);
    }

    #[test]
    fn product_coupling_of_two_point_spaces() {
        let (x, y) = (two_point(1.0), two_point(2.0));
        let pair = pullback_pair(&x, &y, &Coupling::product(&x, &y).unwrap()).unwrap();
        assert_eq!(pair.len(), 4);
        assert!(pair.weights.iter().all(|&w| (w - 0.25).abs() < 1e-15));
        // cells (0,0),(0,1),(1,0),(1,1): d1 between (0,0) and (1,1) is 1, d2 is 2
        assert_eq!(pair.d1[(0, 3)], 1.0);
        assert_eq!(pair.d2[(0, 3)], 2.0);
        assert_eq!(pair.d1[(0, 1)], 0.0);
        assert_eq!(pair.d2[(0, 1)], 2.0);
    }

    #[test]
    fn zero_cells_are_dropped() {
        let (x, y) = (two_point(1.0), two_point(2.0));
        let pi = Coupling::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let pair = pullback_pair(&x, &y, &pi).unwrap();
        assert_eq!(pair.cells, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn marginal_mismatch_is_rejected() {
        let (x, y) = (two_point(1.0), two_point(2.0));
        let pi = Coupling::from_rows(&[vec![0.5, 0.1], vec![0.0, 0.4]]).unwrap();
        assert!(matches!(pullback_pair(&x, &y, &pi), Err(Error::Domain(_))));
    }

    #[test]
    fn northwest_corner_reproduces_marginals() {
        let r = [0.2, 0.5, 0.3];
        let c = [0.6, 0.4];
        let pi = Coupling::northwest_corner(&r, &c, &[2, 0, 1], &[1, 0]);
        pi.check_marginals(&r, &c).unwrap();
        assert!(pi.support_cells().len() <= r.len() + c.len() - 1);
    }
}
