//! Exact algebra of finitely supported measures on the integer lattice.
//!
//! Two value types live here: [`LatticePmf`], a probability mass function on
//! `Z^d` with finitely many atoms, and [`SignedLatticeMeasure`], a finite
//! signed measure on `Z^d \ {0}`. Both keep their atoms in a `BTreeMap` keyed
//! by the lattice point, so iteration (and therefore serialization) follows
//! lexicographic order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point of `Z^d`.
pub type Point = Vec<i64>;

/// Masses of a [`LatticePmf`] must sum to one within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-12;

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn dot(a: &[i64], n: &[i64]) -> i64 {
    a.iter().zip(n).map(|(x, y)| x * y).sum()
}

/// Finitely supported probability mass function on `Z^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePmf {
    dim: usize,
    atoms: BTreeMap<Point, f64>,
}

impl LatticePmf {
    /// Builds a pmf from `(point, mass)` pairs.
    ///
    /// Every mass must be finite and strictly positive, every point must have
    /// length `dim`, points must be distinct and the masses must sum to one
    /// within [`NORMALIZATION_TOL`].
    pub fn new<I>(dim: usize, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, f64)>,
    {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut map = BTreeMap::new();
        for (n, p) in atoms {
            check_dim(dim, n.len())?;
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidMass { point: n, mass: p });
            }
            if map.insert(n.clone(), p).is_some() {
                return Err(Error::DuplicateAtom(n));
            }
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { dim, atoms: map })
    }

    /// Builds a pmf from nonnegative weights, dropping zero weights and
    /// rescaling the rest to total mass one.
    pub fn from_weights<I>(dim: usize, weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, f64)>,
    {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut map: BTreeMap<Point, f64> = BTreeMap::new();
        for (n, w) in weights {
            check_dim(dim, n.len())?;
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidMass { point: n, mass: w });
            }
            if w > 0.0 {
                *map.entry(n).or_insert(0.0) += w;
            }
        }
        let total: f64 = map.values().sum();
        if !(total > 0.0) {
            return Err(Error::NotNormalized(total));
        }
        map.values_mut().for_each(|w| *w /= total);
        Ok(Self { dim, atoms: map })
    }

    /// Point mass at `n`.
    pub fn dirac(n: Point) -> Self {
        assert!(!n.is_empty(), "dirac needs a point of positive dimension");
        let dim = n.len();
        Self { dim, atoms: BTreeMap::from([(n, 1.0)]) }
    }

    /// `(1 - p) δ_0 + p δ_1` in dimension one.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("bernoulli p = {p} outside [0, 1]")));
        }
        Self::from_weights(1, [(vec![0], 1.0 - p), (vec![1], p)])
    }

    /// Internal constructor for results of mass-preserving operations.
    fn from_map(dim: usize, mut atoms: BTreeMap<Point, f64>) -> Self {
        atoms.retain(|_, p| *p > 0.0);
        Self { dim, atoms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &BTreeMap<Point, f64> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mass at `n` (zero off the support).
    pub fn mass(&self, n: &[i64]) -> f64 {
        self.atoms.get(n).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.atoms.iter().map(|(n, p)| (n, *p))
    }

    /// Componentwise minimum and maximum of the support.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for n in self.atoms.keys() {
            for i in 0..self.dim {
                lo[i] = lo[i].min(n[i]);
                hi[i] = hi[i].max(n[i]);
            }
        }
        (lo, hi)
    }

    /// Distribution of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &LatticePmf) -> Result<LatticePmf> {
        check_dim(self.dim, other.dim)?;
        let mut out: BTreeMap<Point, f64> = BTreeMap::new();
        for (n, p) in &self.atoms {
            for (m, q) in &other.atoms {
                let key: Point = n.iter().zip(m).map(|(a, b)| a + b).collect();
                *out.entry(key).or_insert(0.0) += p * q;
            }
        }
        Ok(Self::from_map(self.dim, out))
    }

    /// Distribution of `a^T X`, computed with exact integer inner products.
    pub fn project(&self, a: &[i64]) -> Result<LatticePmf> {
        check_dim(self.dim, a.len())?;
        let mut out: BTreeMap<Point, f64> = BTreeMap::new();
        for (n, p) in &self.atoms {
            *out.entry(vec![dot(a, n)]).or_insert(0.0) += p;
        }
        Ok(Self::from_map(1, out))
    }

    /// Distribution of `X + m`.
    pub fn shift(&self, m: &[i64]) -> Result<LatticePmf> {
        check_dim(self.dim, m.len())?;
        let atoms = self
            .atoms
            .iter()
            .map(|(n, p)| (n.iter().zip(m).map(|(a, b)| a + b).collect(), *p))
            .collect();
        Ok(Self { dim: self.dim, atoms })
    }

    /// Law of `(X, Y)` for independent `X ~ self`, `Y ~ other`.
    pub fn product(&self, other: &LatticePmf) -> LatticePmf {
        let mut atoms = BTreeMap::new();
        for (n, p) in &self.atoms {
            for (m, q) in &other.atoms {
                let mut key = n.clone();
                key.extend_from_slice(m);
                atoms.insert(key, p * q);
            }
        }
        Self::from_map(self.dim + other.dim, atoms)
    }

    /// Law of `A X + v` for an integer matrix `A` (row-major, `d x d`) with
    /// nonzero determinant.
    pub fn affine(&self, matrix: &[Vec<i64>], v: &[i64]) -> Result<LatticePmf> {
        check_dim(self.dim, v.len())?;
        check_dim(self.dim, matrix.len())?;
        for row in matrix {
            check_dim(self.dim, row.len())?;
        }
        if determinant(matrix) == 0 {
            return Err(Error::SingularMatrix);
        }
        let atoms = self
            .atoms
            .iter()
            .map(|(n, p)| {
                let image = matrix.iter().zip(v).map(|(row, vi)| dot(row, n) + vi).collect();
                (image, *p)
            })
            .collect();
        Ok(Self { dim: self.dim, atoms })
    }
}

/// Exact determinant of a square integer matrix (fraction-free Bareiss
/// elimination in `i128`).
pub fn determinant(matrix: &[Vec<i64>]) -> i128 {
    let n = matrix.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> =
        matrix.iter().map(|row| row.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Finite signed measure on `Z^d \ {0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedLatticeMeasure {
    dim: usize,
    atoms: BTreeMap<Point, f64>,
}

impl SignedLatticeMeasure {
    pub fn zero(dim: usize) -> Self {
        Self { dim, atoms: BTreeMap::new() }
    }

    /// Builds a measure from `(point, mass)` pairs. Repeated points add up,
    /// exact zeros are dropped and an atom at the origin is rejected.
    pub fn new<I>(dim: usize, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, f64)>,
    {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut map: BTreeMap<Point, f64> = BTreeMap::new();
        for (n, c) in atoms {
            check_dim(dim, n.len())?;
            if !c.is_finite() {
                return Err(Error::InvalidMass { point: n, mass: c });
            }
            if n.iter().all(|&x| x == 0) {
                return Err(Error::AtomAtOrigin);
            }
            *map.entry(n).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Ok(Self { dim, atoms: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &BTreeMap<Point, f64> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass(&self, n: &[i64]) -> f64 {
        self.atoms.get(n).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.atoms.iter().map(|(n, c)| (n, *c))
    }

    /// `ν(Z^d)`.
    pub fn total_mass(&self) -> f64 {
        self.atoms.values().sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.values().map(|c| c.abs()).sum()
    }

    /// Atom with the smallest mass, if any.
    pub fn min_atom(&self) -> Option<(&Point, f64)> {
        self.iter().min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Largest absolute atom-wise difference, treating missing atoms as zero.
    pub fn max_abs_diff(&self, other: &SignedLatticeMeasure) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, c) in &self.atoms {
            worst = worst.max((c - other.mass(n)).abs());
        }
        for (n, c) in &other.atoms {
            if !self.atoms.contains_key(n) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }

    /// `alpha * self + beta * other`.
    pub fn linear_combination(
        &self,
        alpha: f64,
        other: &SignedLatticeMeasure,
        beta: f64,
    ) -> Result<SignedLatticeMeasure> {
        check_dim(self.dim, other.dim)?;
        let mut map = BTreeMap::new();
        for (n, c) in &self.atoms {
            *map.entry(n.clone()).or_insert(0.0) += alpha * c;
        }
        for (n, c) in &other.atoms {
            *map.entry(n.clone()).or_insert(0.0) += beta * c;
        }
        map.retain(|_, c: &mut f64| *c != 0.0);
        Ok(Self { dim: self.dim, atoms: map })
    }

    /// Drops every atom with `|mass| < threshold`.
    pub fn pruned(&self, threshold: f64) -> SignedLatticeMeasure {
        let atoms = self
            .atoms
            .iter()
            .filter(|(_, c)| c.abs() >= threshold)
            .map(|(n, c)| (n.clone(), *c))
            .collect();
        Self { dim: self.dim, atoms }
    }

    /// Image of the measure under `x -> a^T x`, with any mass landing on the
    /// origin removed.
    pub fn pushforward(&self, a: &[i64]) -> Result<SignedLatticeMeasure> {
        check_dim(self.dim, a.len())?;
        let mut map: BTreeMap<Point, f64> = BTreeMap::new();
        for (n, c) in &self.atoms {
            let m = dot(a, n);
            if m != 0 {
                *map.entry(vec![m]).or_insert(0.0) += c;
            }
        }
        map.retain(|_, c| *c != 0.0);
        Ok(Self { dim: 1, atoms: map })
    }
}

#[derive(Serialize, Deserialize)]
struct PmfAtomWire {
    n: Point,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct PmfWire {
    dim: usize,
    atoms: Vec<PmfAtomWire>,
}

#[derive(Serialize, Deserialize)]
struct SignedAtomWire {
    n: Point,
    c: f64,
}

#[derive(Serialize, Deserialize)]
struct SignedWire {
    dim: usize,
    atoms: Vec<SignedAtomWire>,
}

impl Serialize for LatticePmf {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PmfWire {
            dim: self.dim,
            atoms: self.iter().map(|(n, p)| PmfAtomWire { n: n.clone(), p }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticePmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = PmfWire::deserialize(d)?;
        LatticePmf::new(wire.dim, wire.atoms.into_iter().map(|a| (a.n, a.p)))
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for SignedLatticeMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SignedWire {
            dim: self.dim,
            atoms: self.iter().map(|(n, c)| SignedAtomWire { n: n.clone(), c }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SignedLatticeMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = SignedWire::deserialize(d)?;
        SignedLatticeMeasure::new(wire.dim, wire.atoms.into_iter().map(|a| (a.n, a.c)))
            .map_err(serde::de::Error::custom)
    }
}
