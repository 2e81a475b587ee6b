//! Finite metric-measure spaces.
//!
//! A [`FiniteMMSpace`] is a list of labelled atoms with nonnegative masses and a
//! semimetric matrix. Zero-mass atoms are kept in storage but are not part of the
//! support; distinct atoms at distance zero are allowed (pseudometric).

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

/// Dense square matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistMatrix {
    pub fn zeros(n: usize) -> Self {
        DistMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "dist row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(DistMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Restriction to the given index list (in that order).
    pub fn restrict(&self, idx: &[usize]) -> DistMatrix {
        DistMatrix::from_fn(idx.len(), |a, b| self[(idx[a], idx[b])])
    }

    /// Shortest-path closure (Floyd-Warshall). Equals `self` when the triangle
    /// inequality already holds.
    pub fn path_closure(&self) -> DistMatrix {
        let n = self.n;
        let mut d = self.clone();
        for k in 0..n {
            for i in 0..n {
                let dik = d[(i, k)];
                for j in 0..n {
                    let via = dik + d[(k, j)];
                    if via < d[(i, j)] {
                        d[(i, j)] = via;
                    }
                }
            }
        }
        d
    }
}

impl Index<(usize, usize)> for DistMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for DistMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// A single invariant violation found by [`FiniteMMSpace::validate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    ShapeMismatch { labels: usize, weights: usize, dist: usize },
    DuplicateLabel { label: String },
    NonFinite { what: String },
    NegativeWeight { index: usize, weight: f64 },
    ZeroTotalMass,
    NegativeDistance { i: usize, j: usize, value: f64 },
    NonzeroDiagonal { i: usize, value: f64 },
    Asymmetry { i: usize, j: usize, dij: f64, dji: f64 },
    TriangleInequality { i: usize, j: usize, k: usize, excess: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "space has no points"),
            Violation::ShapeMismatch { labels, weights, dist } => write!(
                f,
                "shape mismatch: {labels} labels, {weights} weights, {dist}x{dist} dist"
            ),
            Violation::DuplicateLabel { label } => write!(f, "duplicate label {label:?}"),
            Violation::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Violation::NegativeWeight { index, weight } => {
                write!(f, "weight {index} is negative ({weight})")
            }
            Violation::ZeroTotalMass => write!(f, "total mass is zero"),
            Violation::NegativeDistance { i, j, value } => {
                write!(f, "dist[{i}][{j}] = {value} is negative")
            }
            Violation::NonzeroDiagonal { i, value } => write!(f, "dist[{i}][{i}] = {value} != 0"),
            Violation::Asymmetry { i, j, dij, dji } => {
                write!(f, "asymmetry: dist[{i}][{j}] = {dij}, dist[{j}][{i}] = {dji}")
            }
            Violation::TriangleInequality { i, j, k, excess } => write!(
                f,
                "triangle inequality fails for ({i},{j}) via {k} by {excess}"
            ),
        }
    }
}

/// Outcome of validation; empty iff the space is a valid finite mm-space.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// A finite metric-measure space `(X, d_X, mu_X)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMMSpace {
    labels: Vec<String>,
    weights: Vec<f64>,
    dist: DistMatrix,
}

impl FiniteMMSpace {
    /// Constructs and validates.
    pub fn new(labels: Vec<String>, weights: Vec<f64>, dist: DistMatrix) -> Result<Self> {
        let space = Self::new_unchecked(labels, weights, dist);
        let report = space.validate();
        if report.is_valid() {
            Ok(space)
        } else {
            Err(Error::Invalid(report))
        }
    }

    /// Constructs without validation. Use [`validate`](Self::validate) afterwards.
    pub fn new_unchecked(labels: Vec<String>, weights: Vec<f64>, dist: DistMatrix) -> Self {
        FiniteMMSpace {
            labels,
            weights,
            dist,
        }
    }

    /// Labels `x0, x1, ...`.
    pub fn from_parts(weights: Vec<f64>, dist: DistMatrix) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| format!("x{i}")).collect();
        Self::new(labels, weights, dist)
    }

    /// One point of the given mass.
    pub fn point(mass: f64) -> Result<Self> {
        Self::from_parts(vec![mass], DistMatrix::zeros(1))
    }

    /// Two points at distance `d` with the given masses.
    pub fn two_point(d: f64, w0: f64, w1: f64) -> Result<Self> {
        Self::from_parts(
            vec![w0, w1],
            DistMatrix::from_fn(2, |i, j| if i == j { 0.0 } else { d }),
        )
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dist(&self) -> &DistMatrix {
        &self.dist
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
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

    /// Indices of atoms with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let n = self.weights.len();
        if n == 0 {
            v.push(Violation::Empty);
        }
        if self.labels.len() != n || self.dist.n() != n {
            v.push(Violation::ShapeMismatch {
                labels: self.labels.len(),
                weights: n,
                dist: self.dist.n(),
            });
            return ValidationReport { violations: v };
        }
        let mut seen = BTreeSet::new();
        for l in &self.labels {
            if !seen.insert(l.as_str()) {
                v.push(Violation::DuplicateLabel { label: l.clone() });
            }
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            v.push(Violation::NonFinite {
                what: "weights".into(),
            });
        }
        if self.dist.data.iter().any(|x| !x.is_finite()) {
            v.push(Violation::NonFinite { what: "dist".into() });
            return ValidationReport { violations: v };
        }
        for (index, &weight) in self.weights.iter().enumerate() {
            if weight < 0.0 {
                v.push(Violation::NegativeWeight { index, weight });
            }
        }
        if n > 0 && self.total_mass() <= 0.0 {
            v.push(Violation::ZeroTotalMass);
        }
        let scale = tol::METRIC * self.dist.max_entry().max(1.0);
        for i in 0..n {
            if self.dist[(i, i)].abs() > scale {
                v.push(Violation::NonzeroDiagonal {
                    i,
                    value: self.dist[(i, i)],
                });
            }
            for j in 0..n {
                let dij = self.dist[(i, j)];
                if dij < -scale {
                    v.push(Violation::NegativeDistance { i, j, value: dij });
                }
                let dji = self.dist[(j, i)];
                if i < j && (dij - dji).abs() > scale {
                    v.push(Violation::Asymmetry { i, j, dij, dji });
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let excess = self.dist[(i, j)] - self.dist[(i, k)] - self.dist[(k, j)];
                    if excess > scale {
                        v.push(Violation::TriangleInequality { i, j, k, excess });
                    }
                }
            }
        }
        ValidationReport { violations: v }
    }

    /// `(X, d_X, alpha * mu_X)`.
    pub fn scale_measure(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!(
                "measure scale factor must be positive, got {alpha}"
            )));
        }
        Ok(FiniteMMSpace {
            labels: self.labels.clone(),
            weights: self.weights.iter().map(|w| w * alpha).collect(),
            dist: self.dist.clone(),
        })
    }

    /// Rescaled to total mass `m`.
    pub fn with_total_mass(&self, m: f64) -> Result<Self> {
        self.scale_measure(m / self.total_mass())
    }

    /// Same metric, new weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.labels.clone(), weights, self.dist.clone())
    }

    /// Reorders points: point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        FiniteMMSpace {
            labels: perm.iter().map(|&i| self.labels[i].clone()).collect(),
            weights: perm.iter().map(|&i| self.weights[i]).collect(),
            dist: self.dist.restrict(perm),
        }
    }

    /// Metric quotient of the support: zero-mass atoms are dropped and atoms at
    /// distance zero are merged, summing their masses. Returns the quotient and,
    /// for each class, the original indices it contains.
    pub fn support_quotient(&self) -> (FiniteMMSpace, Vec<Vec<usize>>) {
        let scale = tol::METRIC * self.dist.max_entry().max(1.0);
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in self.support() {
            match classes
                .iter_mut()
                .find(|c| self.dist[(c[0], i)] <= scale)
            {
                Some(c) => c.push(i),
                None => classes.push(vec![i]),
            }
        }
        let reps: Vec<usize> = classes.iter().map(|c| c[0]).collect();
        let q = FiniteMMSpace {
            labels: reps.iter().map(|&i| self.labels[i].clone()).collect(),
            weights: classes
                .iter()
                .map(|c| c.iter().map(|&i| self.weights[i]).sum())
                .collect(),
            dist: self.dist.restrict(&reps),
        };
        (q, classes)
    }
}
