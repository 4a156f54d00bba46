//! Infinite divisibility through one-dimensional integer projections.
//!
//! A `Z^d`-valued law is infinitely divisible iff every projection `a^T X`
//! with `a ∈ N_0^d` is. [`cw_test`] checks a finite family of such directions
//! and sets the outcome next to the direct lattice verdict: a failing
//! projection proves the law is not infinitely divisible, while passing every
//! direction up to a bound is only evidence and is reported as consistent or
//! not with the direct test.

use serde::Serialize;

use crate::measures::{LatticePmf, Point};
use crate::oned::{default_degree, katti};
use crate::qid::{classify, Verdict, VerdictKind, QidConfig};
use crate::{Error, Result};

/// Primitive integer directions with sup-norm at most `bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectionFamily {
    pub dim: usize,
    pub bound: u32,
    pub directions: Vec<Point>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn is_primitive(a: &[i64]) -> bool {
    a.iter().fold(0, |g, &x| gcd(g, x)) == 1
}

/// Nonzero vectors of `{0..=bound}^d` whose entries have gcd one, sorted
/// lexicographically.
pub fn enumerate_directions(dim: usize, bound: u32) -> DirectionFamily {
    enumerate_with_range(dim, bound, 0)
}

/// Like [`enumerate_directions`] but over `{-bound..=bound}^d`, keeping one
/// of each pair `±a` (the one whose first nonzero entry is positive). This
/// goes beyond the nonnegative family and is meant for exploration.
pub fn enumerate_signed_directions(dim: usize, bound: u32) -> DirectionFamily {
    enumerate_with_range(dim, bound, -(bound as i64))
}

fn enumerate_with_range(dim: usize, bound: u32, low: i64) -> DirectionFamily {
    assert!(dim >= 1 && bound >= 1, "dimension and bound must be positive");
    let high = bound as i64;
    let mut directions = Vec::new();
    let mut current = vec![low; dim];
    loop {
        let leading_positive = current.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0);
        if leading_positive && is_primitive(&current) {
            directions.push(current.clone());
        }
        let mut axis = dim;
        loop {
            if axis == 0 {
                directions.sort();
                return DirectionFamily { dim, bound, directions };
            }
            axis -= 1;
            if current[axis] < high {
                current[axis] += 1;
                break;
            }
            current[axis] = low;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KattiVerdict {
    /// No coefficient below `-neg_tol` up to the degree bound.
    Pass,
    /// First coefficient below `-neg_tol`.
    Fail { n: usize },
    /// The recursion was refused (mass at the minimum below `1e-8`).
    Refused,
}

/// Evidence for a failing direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionWitness {
    /// Katti coefficient `q_n < -neg_tol` of the projection shifted to start at 0.
    KattiCoefficient { n: usize, q: f64 },
    /// Negative atom of the one-dimensional quasi-Lévy measure.
    NegativeAtom { n: i64, mass: f64 },
    /// The projection's characteristic function vanishes at `u`.
    VanishingPoint { u: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionRecord {
    pub direction: Point,
    pub support_size: usize,
    pub katti: KattiVerdict,
    pub quasi_levy: VerdictKind,
    pub witness: Option<DirectionWitness>,
    /// `|a^T k - k_a| == 0` and the largest atom gap between the projected
    /// measure and the pushforward of the lattice `ν`; present when both
    /// triplets exist.
    pub drift_matches: Option<bool>,
    pub nu_discrepancy: Option<f64>,
}

impl DirectionRecord {
    pub fn fails(&self) -> bool {
        matches!(self.katti, KattiVerdict::Fail { .. })
            || matches!(self.quasi_levy, VerdictKind::QuasiOnly | VerdictKind::NotQuasi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Aggregate {
    AllPass,
    FailAt(Point),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CWReport {
    pub records: Vec<DirectionRecord>,
    pub aggregate: Aggregate,
    pub direct: Verdict,
    pub consistent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwOptions {
    pub bound: u32,
    /// Use [`enumerate_signed_directions`] instead of the `N_0^d` family.
    pub signed: bool,
}

impl Default for CwOptions {
    fn default() -> Self {
        Self { bound: 4, signed: false }
    }
}

/// Tests every direction of the family and compares with the direct verdict.
///
/// Returns [`Error::Inconclusive`] when the direct test or some projection
/// cannot be decided within the grid budget.
pub fn cw_test(p: &LatticePmf, options: &CwOptions, config: &QidConfig) -> Result<CWReport> {
    let family = if options.signed {
        enumerate_signed_directions(p.dim(), options.bound)
    } else {
        enumerate_directions(p.dim(), options.bound)
    };
    let direct = classify(p, config).map_err(inconclusive)?;

    let mut records = Vec::with_capacity(family.directions.len());
    for a in family.directions {
        let projected = p.project(&a)?;
        let (lo, _) = projected.bounding_box();
        let based = projected.shift(&[-lo[0]])?;

        let mut witness = None;
        let katti_verdict = match katti(&based, default_degree(&based)) {
            Ok(seq) => match seq.first_below(config.neg_tol) {
                Some(n) => {
                    witness = Some(DirectionWitness::KattiCoefficient { n, q: seq.get(n).unwrap_or(f64::NAN) });
                    KattiVerdict::Fail { n }
                }
                None => KattiVerdict::Pass,
            },
            Err(Error::IllConditioned(_)) => KattiVerdict::Refused,
            Err(e) => return Err(e),
        };

        let verdict = classify(&projected, config).map_err(inconclusive)?;
        if witness.is_none() {
            witness = match &verdict.witness {
                Some(crate::qid::Witness::NegativeAtom { n, mass }) => {
                    Some(DirectionWitness::NegativeAtom { n: n[0], mass: *mass })
                }
                Some(crate::qid::Witness::VanishingPoint { z, .. }) => {
                    Some(DirectionWitness::VanishingPoint { u: z[0] })
                }
                None => None,
            };
        }

        let (drift_matches, nu_discrepancy) = match (&direct.triplet, &verdict.triplet) {
            (Some(full), Some(line)) => {
                let expected: i64 = a.iter().zip(&full.drift).map(|(x, k)| x * k).sum();
                let pushed = full.nu.pushforward(&a)?;
                (Some(line.drift[0] == expected), Some(line.nu.max_abs_diff(&pushed)))
            }
            _ => (None, None),
        };

        records.push(DirectionRecord {
            direction: a,
            support_size: projected.len(),
            katti: katti_verdict,
            quasi_levy: verdict.kind,
            witness,
            drift_matches,
            nu_discrepancy,
        });
    }

    let aggregate = match records.iter().find(|r| r.fails()) {
        Some(r) => Aggregate::FailAt(r.direction.clone()),
        None => Aggregate::AllPass,
    };
    let direct_id = direct.kind == VerdictKind::InfinitelyDivisible;
    let consistent = match aggregate {
        Aggregate::AllPass => direct_id,
        Aggregate::FailAt(_) => !direct_id,
    };
    Ok(CWReport { records, aggregate, direct, consistent })
}

fn inconclusive(e: Error) -> Error {
    match e {
        Error::NonConvergence { grid_size, .. } => Error::Inconclusive { grid_size },
        other => other,
    }
}
