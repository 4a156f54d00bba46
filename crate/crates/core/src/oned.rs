//! Power-series criteria for laws on `N_0` and `N_0^d`.
//!
//! For a law with probability generating function `P(s) = Σ p_n s^n` and
//! `p_0 > 0`, write `log P(s) = log p_0 + Σ_{n≥1} q_n s^n`. Differentiating
//! gives `n p_n = Σ_{k=1}^{n} k q_k p_{n-k}`, which determines the `q_n` one at
//! a time. The law is infinitely divisible iff every `q_n` is nonnegative, and
//! when `φ` has no zeros and zero winding the `q_n` are exactly the atoms of
//! the quasi-Lévy measure.

use crate::measures::{LatticePmf, Point, SignedLatticeMeasure};
use crate::{Error, Result};

/// Recursions dividing by `p_0` are refused below this mass.
pub const MIN_ORIGIN_MASS: f64 = 1e-8;

/// Upper cap for [`default_degree`].
pub const MAX_DEFAULT_DEGREE: usize = 512;

const AXIS_CONSISTENCY_TOL: f64 = 1e-10;

/// Coefficients `q_1, ..., q_D` of `log P`.
#[derive(Debug, Clone, PartialEq)]
pub struct KattiSequence {
    q: Vec<f64>,
    first_negative: Option<usize>,
}

impl KattiSequence {
    /// `q_n` for `1 <= n <= degree`.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.q.get(i)).copied()
    }

    /// Coefficients starting at `q_1`.
    pub fn coefficients(&self) -> &[f64] {
        &self.q
    }

    pub fn degree(&self) -> usize {
        self.q.len()
    }

    /// Index of the first strictly negative coefficient.
    pub fn first_negative(&self) -> Option<usize> {
        self.first_negative
    }

    /// First index whose coefficient is below `-threshold` (or not finite).
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.q.iter().position(|q| !(*q >= -threshold)).map(|i| i + 1)
    }

    /// The coefficients as a measure on `{1, ..., D}`.
    pub fn to_measure(&self) -> SignedLatticeMeasure {
        let atoms = self
            .q
            .iter()
            .enumerate()
            .filter(|(_, q)| q.is_finite())
            .map(|(i, q)| (vec![i as i64 + 1], *q));
        SignedLatticeMeasure::new(1, atoms).expect("indices start at one")
    }
}

fn one_dimensional_masses(p: &LatticePmf) -> Result<Vec<f64>> {
    if p.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    let (lo, hi) = p.bounding_box();
    if lo[0] < 0 {
        return Err(Error::NotNonnegative);
    }
    let mut masses = vec![0.0; hi[0] as usize + 1];
    for (n, mass) in p.iter() {
        masses[n[0] as usize] = mass;
    }
    Ok(masses)
}

/// `4 × (max support point)`, at least one and at most 512.
pub fn default_degree(p: &LatticePmf) -> usize {
    let (_, hi) = p.bounding_box();
    (4 * hi[0].max(0) as usize).clamp(1, MAX_DEFAULT_DEGREE)
}

/// Runs the log-pgf recursion up to `degree`.
pub fn katti(p: &LatticePmf, degree: usize) -> Result<KattiSequence> {
    if degree == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    let masses = one_dimensional_masses(p)?;
    let p0 = masses[0];
    if p0 < MIN_ORIGIN_MASS {
        return Err(Error::IllConditioned(p0));
    }
    let at = |n: usize| masses.get(n).copied().unwrap_or(0.0);
    let mut q: Vec<f64> = Vec::with_capacity(degree);
    for n in 1..=degree {
        let mut acc = n as f64 * at(n);
        for k in 1..n {
            acc -= k as f64 * q[k - 1] * at(n - k);
        }
        q.push(acc / (n as f64 * p0));
    }
    let first_negative = q.iter().position(|&x| x < 0.0).map(|i| i + 1);
    Ok(KattiSequence { q, first_negative })
}

/// Outcome of the log-convexity check.
#[derive(Debug, Clone, PartialEq)]
pub enum LogConvexity {
    /// `p_{n-1} p_{n+1} >= p_n^2` on the whole support; `vacuous` when the
    /// support has no interior point.
    LogConvex { vacuous: bool },
    /// The inequality fails at `n`.
    NotLogConvex { at: usize },
    NotApplicable(&'static str),
}

impl LogConvexity {
    pub fn holds(&self) -> bool {
        matches!(self, LogConvexity::LogConvex { .. })
    }
}

/// Log-convexity of the counting density, a sufficient condition for
/// infinite divisibility of laws on `{0, ..., N}`.
pub fn log_convex(p: &LatticePmf) -> LogConvexity {
    let masses = match one_dimensional_masses(p) {
        Ok(m) => m,
        Err(Error::NotOneDimensional) => return LogConvexity::NotApplicable("not one-dimensional"),
        Err(_) => return LogConvexity::NotApplicable("support not in N_0"),
    };
    if masses.iter().any(|&m| m <= 0.0) {
        return LogConvexity::NotApplicable("support is not a contiguous block starting at 0");
    }
    let interior = masses.len().saturating_sub(2);
    for n in 1..=interior {
        if masses[n - 1] * masses[n + 1] < masses[n] * masses[n] {
            return LogConvexity::NotLogConvex { at: n };
        }
    }
    LogConvexity::LogConvex { vacuous: interior == 0 }
}

/// Formal logarithm of a multivariate pgf, truncated to a degree box.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalLog {
    /// Coefficients `q_n` for `n` in the box minus the origin.
    pub nu: SignedLatticeMeasure,
    /// Largest disagreement between the per-axis estimates of any `q_n`.
    pub axis_residual: f64,
}

/// Coefficients of `log P` for a pmf on `N_0^d` with `p(0) > 0`, on the box
/// `{0..=box[0]} × ... × {0..=box[d-1]}`.
///
/// For each axis `j`, `R_j = (s_j ∂_j P) / P` is obtained by power series
/// division and `q_n = R_j[n] / n_j` for every `n` with `n_j > 0`. Indices with
/// several nonzero coordinates get one estimate per such axis; they must agree.
pub fn formal_log_series(p: &LatticePmf, degree_box: &[usize]) -> Result<FormalLog> {
    let dim = p.dim();
    if degree_box.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: degree_box.len() });
    }
    let (lo, hi) = p.bounding_box();
    if lo.iter().any(|&x| x < 0) {
        return Err(Error::NotNonnegative);
    }
    if hi.iter().zip(degree_box).any(|(&h, &b)| h as usize > b) {
        return Err(Error::BoxTooSmall(degree_box.to_vec()));
    }
    let p0 = p.mass(&vec![0; dim]);
    if p0 < MIN_ORIGIN_MASS {
        return Err(Error::IllConditioned(p0));
    }

    let extents: Vec<usize> = degree_box.iter().map(|b| b + 1).collect();
    let strides: Vec<usize> = (0..dim).map(|a| extents[a + 1..].iter().product()).collect();
    let total: usize = extents.iter().product();
    let flat = |n: &[usize]| n.iter().zip(&strides).map(|(x, s)| x * s).sum::<usize>();
    let unflat = |mut f: usize| -> Vec<usize> {
        strides
            .iter()
            .map(|s| {
                let x = f / s;
                f %= s;
                x
            })
            .collect()
    };

    let mut dense = vec![0.0; total];
    let support: Vec<(Vec<usize>, f64)> = p
        .iter()
        .map(|(n, mass)| (n.iter().map(|&x| x as usize).collect::<Vec<_>>(), mass))
        .collect();
    for (n, mass) in &support {
        dense[flat(n)] = *mass;
    }
    let nonzero: Vec<&(Vec<usize>, f64)> = support.iter().filter(|(n, _)| n.iter().any(|&x| x > 0)).collect();

    let mut estimates: Vec<Option<f64>> = vec![None; total];
    let mut residual: f64 = 0.0;
    let mut ratio = vec![0.0; total];
    for axis in 0..dim {
        // Row-major order visits every m <= n (componentwise) before n.
        for f in 0..total {
            let n = unflat(f);
            let mut acc = n[axis] as f64 * dense[f];
            for (s, mass) in &nonzero {
                if s.iter().zip(&n).all(|(a, b)| a <= b) {
                    let m: Vec<usize> = n.iter().zip(s).map(|(a, b)| a - b).collect();
                    acc -= mass * ratio[flat(&m)];
                }
            }
            ratio[f] = acc / p0;
            if n[axis] > 0 {
                let q = ratio[f] / n[axis] as f64;
                match estimates[f] {
                    None => estimates[f] = Some(q),
                    Some(first) => residual = residual.max((first - q).abs()),
                }
            }
        }
    }
    if residual > AXIS_CONSISTENCY_TOL {
        return Err(Error::AxisInconsistency(residual));
    }
    let atoms = estimates
        .into_iter()
        .enumerate()
        .filter_map(|(f, q)| q.map(|q| (unflat(f).into_iter().map(|x| x as i64).collect::<Point>(), q)));
    Ok(FormalLog { nu: SignedLatticeMeasure::new(dim, atoms)?, axis_residual: residual })
}
