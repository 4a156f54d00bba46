//! Quasi-Lévy triplets, divisibility verdicts and compound Poisson quotients.
//!
//! [`quasi_levy`] turns a zero-free lattice law into its drift `k` and signed
//! measure `ν`: sample `φ` on a torus grid, take the distinguished logarithm,
//! read off the winding vector, remove the linear part and transform back.
//! The grid doubles until the coefficients have decayed and the rebuilt
//! characteristic function matches `φ` to the requested tolerance.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::Serialize;

use crate::charfn::{
    certify_grid, check_budget, closure_residual, detrended_log, distinguished_log, fft_nd,
    sample_grid, sample_series, winding_vector, Certification, DEFAULT_MAX_GRID_POINTS,
};
use crate::measures::{LatticePmf, Point, SignedLatticeMeasure};
use crate::{Error, Result};

/// Atoms at or above `-NEG_TOL` count as nonnegative.
pub const DEFAULT_NEG_TOL: f64 = 1e-9;

/// Default accuracy target for [`quasi_levy`].
pub const DEFAULT_TOL: f64 = 1e-10;

const CLOSURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QidConfig {
    /// Accuracy target in `(0, 1e-6]`.
    pub tol: f64,
    pub neg_tol: f64,
    /// Atoms with `|mass|` below this may be dropped after verification,
    /// smallest first and at most `tol / 20` in total; `None` means `tol / 10`.
    pub prune: Option<f64>,
    pub max_grid_points: usize,
    /// First grid size tried; `None` picks one from the support.
    pub start_grid: Option<usize>,
}

impl Default for QidConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            neg_tol: DEFAULT_NEG_TOL,
            prune: None,
            max_grid_points: DEFAULT_MAX_GRID_POINTS,
            start_grid: None,
        }
    }
}

impl QidConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn prune_threshold(&self) -> f64 {
        self.prune.unwrap_or(self.tol / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(Error::InvalidParameter(format!("tol = {} outside (0, 1e-6]", self.tol)));
        }
        if !(self.neg_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("neg_tol = {}", self.neg_tol)));
        }
        Ok(())
    }

    fn initial_grid(&self, p: &LatticePmf) -> usize {
        if let Some(start) = self.start_grid {
            return start;
        }
        let (lo, hi) = p.bounding_box();
        let spread = lo.iter().zip(&hi).map(|(a, b)| (b - a) as usize).max().unwrap_or(0);
        let mut size = (2 * spread + 2).next_power_of_two().max(8);
        // Wide supports of thin-tailed laws rarely need the full spread.
        while size > 8 && check_budget(p.dim(), size, self.max_grid_points).is_err() {
            size /= 2;
        }
        size
    }
}

/// Drift `k`, signed measure `ν` and the diagnostics of the grid they came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QLTriplet {
    pub drift: Point,
    pub nu: SignedLatticeMeasure,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub reconstruction_error: f64,
    pub max_imag_residual: f64,
    pub tail_mass: f64,
    pub grid_size: usize,
}

impl QLTriplet {
    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    /// `exp{i<k, z> + Σ ν({n}) (e^{i<n, z>} - 1)}` at one point.
    pub fn charfn(&self, z: &[f64]) -> Complex64 {
        let linear: f64 = self.drift.iter().zip(z).map(|(&k, &x)| k as f64 * x).sum();
        let jumps: Complex64 = self
            .nu
            .iter()
            .map(|(n, c)| {
                let phase: f64 = n.iter().zip(z).map(|(&a, &x)| a as f64 * x).sum();
                c * (Complex64::from_polar(1.0, phase) - 1.0)
            })
            .sum();
        (Complex64::new(0.0, linear) + jumps).exp()
    }
}

/// Lattice point of the aliased box `[-M/2, M/2)^d` stored at `flat`.
fn aliased_point(flat: usize, size: usize, out: &mut [i64]) {
    let half = size / 2;
    let mut rest = flat;
    for slot in out.iter_mut().rev() {
        let j = rest % size;
        *slot = if j < half { j as i64 } else { j as i64 - size as i64 };
        rest /= size;
    }
}

/// Rebuilds `exp{i<k, z> + Σ c_n (e^{i<n, z>} - 1)}` on the grid shifted by
/// `offset` cells and returns the largest deviation from `phi`, the samples
/// of `φ_p` there. `c` holds `c_n` at the slot of its aliased index; slot 0
/// is ignored.
fn representation_error(phi: &[Complex64], drift: &[i64], c: &[f64], size: usize, offset: f64) -> f64 {
    let dim = drift.len();
    let h = 2.0 * std::f64::consts::PI / size as f64;
    let mut n = vec![0i64; dim];
    let mut series: Vec<Complex64> = c
        .iter()
        .enumerate()
        .map(|(flat, &v)| {
            if flat == 0 || v == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if offset == 0.0 {
                return Complex64::new(v, 0.0);
            }
            aliased_point(flat, size, &mut n);
            Complex64::from_polar(v, h * offset * n.iter().sum::<i64>() as f64)
        })
        .collect();
    fft_nd(&mut series, dim, size, FftDirection::Inverse);
    let total: f64 = c[1..].iter().sum();
    let mut worst: f64 = 0.0;
    let mut multi = vec![0usize; dim];
    for (flat, (target, s)) in phi.iter().zip(&series).enumerate() {
        let mut rest = flat;
        for slot in multi.iter_mut().rev() {
            *slot = rest % size;
            rest /= size;
        }
        let linear: f64 = multi.iter().zip(drift).map(|(&j, &k)| k as f64 * (j as f64 + offset) * h).sum();
        let rebuilt = (s - total + Complex64::new(0.0, linear)).exp();
        worst = worst.max((rebuilt - target).norm());
    }
    worst
}

/// Computes the quasi-Lévy triplet `(k, ν)` of a zero-free lattice law.
///
/// Fails with [`Error::ZeroFound`] when `φ` vanishes at a grid point and with
/// [`Error::NonConvergence`] when the grid budget runs out first (this
/// includes the case where zero-freeness could never be certified).
pub fn quasi_levy(p: &LatticePmf, config: &QidConfig) -> Result<QLTriplet> {
    config.validate()?;
    let dim = p.dim();
    let mut size = config.initial_grid(p);
    let mut reason = String::from("grid budget too small for the first grid");
    let mut last_size = size;
    while check_budget(dim, size, config.max_grid_points).is_ok() {
        last_size = size;
        let grid = sample_grid(p, size, config.max_grid_points)?;
        let certificate = match certify_grid(p, &grid) {
            Certification::Certified(c) => c,
            Certification::ZeroFound { z, modulus } => return Err(Error::ZeroFound { z, modulus }),
            Certification::Inconclusive { certificate, .. } => {
                reason = format!("zero-freeness inconclusive (margin {:e})", certificate.margin);
                size *= 2;
                continue;
            }
        };
        let psi = match distinguished_log(&grid, &certificate) {
            Ok(psi) => psi,
            Err(e @ Error::UnwrapAmbiguity { .. }) => {
                reason = e.to_string();
                size *= 2;
                continue;
            }
            Err(e) => return Err(e),
        };
        let drift = match winding_vector(&psi, p) {
            Ok(k) => k,
            Err(e @ (Error::UnwrapAmbiguity { .. } | Error::WindingMismatch { .. })) => {
                reason = e.to_string();
                size *= 2;
                continue;
            }
            Err(e) => return Err(e),
        };
        let closure = closure_residual(&psi, &drift);
        if closure > CLOSURE_TOL {
            reason = format!("periodic closure residual {closure:e}");
            size *= 2;
            continue;
        }

        let mut coefficients = detrended_log(&psi, &drift)?.into_values();
        fft_nd(&mut coefficients, dim, size, FftDirection::Forward);
        let scale = 1.0 / coefficients.len() as f64;
        let shell = (size / 4) as i64;
        let mut tail_mass = 0.0;
        let mut max_imag: f64 = 0.0;
        let mut others = Complex64::new(0.0, 0.0);
        let mut n = vec![0i64; dim];
        let mut reals = vec![0.0; coefficients.len()];
        for (flat, c) in coefficients.iter().enumerate() {
            let c = c * scale;
            aliased_point(flat, size, &mut n);
            if n.iter().any(|x| x.abs() >= shell) {
                tail_mass += c.norm();
            }
            if flat > 0 {
                others += c;
                max_imag = max_imag.max(c.im.abs());
                reals[flat] = c.re;
            }
        }
        let c0 = coefficients[0] * scale;
        if tail_mass >= config.tol {
            reason = format!("coefficient tail {tail_mass:e} at grid size {size}");
            size *= 2;
            continue;
        }
        if (c0 + others).norm() > config.tol {
            return Err(Error::NumericalFault(format!(
                "c_0 = {c0} differs from -Σ c_n = {}",
                -others
            )));
        }
        let staggered =
            sample_series(dim, size, 0.5, p.iter().map(|(n, m)| (n.as_slice(), Complex64::new(m, 0.0))));
        let check = |c: &[f64]| {
            representation_error(grid.values(), &drift, c, size, 0.0)
                .max(representation_error(&staggered, &drift, c, size, 0.5))
        };
        // Pruning happens before verification so the reported ν is the one
        // checked; the unpruned coefficients are the fallback.
        let kept = prune_within_budget(&reals, config.prune_threshold(), config.tol / 20.0);
        let kept_error = check(&kept);
        let (reals, reconstruction_error) = if kept_error < config.tol {
            (kept, kept_error)
        } else {
            let full_error = check(&reals);
            if full_error >= config.tol {
                reason = format!("reconstruction error {full_error:e} at grid size {size}");
                size *= 2;
                continue;
            }
            (reals, full_error)
        };
        if max_imag > config.tol {
            return Err(Error::ImaginaryResidual(max_imag));
        }
        let atoms: Vec<(Point, f64)> = reals
            .iter()
            .enumerate()
            .filter(|&(flat, &v)| flat > 0 && v != 0.0)
            .map(|(flat, &v)| {
                aliased_point(flat, size, &mut n);
                (n.clone(), v)
            })
            .collect();
        return Ok(QLTriplet {
            drift,
            nu: SignedLatticeMeasure::new(dim, atoms)?,
            diagnostics: Diagnostics {
                reconstruction_error,
                max_imag_residual: max_imag,
                tail_mass,
                grid_size: size,
            },
        });
    }
    Err(Error::NonConvergence { grid_size: last_size, reason })
}

/// Zeroes entries below `threshold`, smallest first, while the dropped total
/// variation stays within `budget`.
fn prune_within_budget(c: &[f64], threshold: f64, budget: f64) -> Vec<f64> {
    let mut small: Vec<(f64, usize)> =
        c.iter().enumerate().filter(|(_, v)| **v != 0.0 && v.abs() < threshold).map(|(i, v)| (v.abs(), i)).collect();
    small.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut kept = c.to_vec();
    let mut dropped = 0.0;
    for (magnitude, i) in small {
        dropped += magnitude;
        if dropped > budget {
            break;
        }
        kept[i] = 0.0;
    }
    kept
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    InfinitelyDivisible,
    QuasiOnly,
    NotQuasi,
}

impl VerdictKind {
    /// CLI exit code: 0 for ID, 1 for quasi-only, 2 for not quasi-ID.
    pub fn exit_code(self) -> i32 {
        match self {
            VerdictKind::InfinitelyDivisible => 0,
            VerdictKind::QuasiOnly => 1,
            VerdictKind::NotQuasi => 2,
        }
    }
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            VerdictKind::InfinitelyDivisible => "InfinitelyDivisible",
            VerdictKind::QuasiOnly => "QuasiOnly",
            VerdictKind::NotQuasi => "NotQuasi",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Grid point where `|φ|` vanishes.
    VanishingPoint { z: Vec<f64>, modulus: f64 },
    /// Atom of `ν` with negative mass (the most negative one).
    NegativeAtom { n: Point, mass: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub triplet: Option<QLTriplet>,
    pub witness: Option<Witness>,
    /// Atoms in `[-neg_tol, 0)`, accepted as nonnegative but worth reporting.
    pub marginal: Vec<Point>,
}

#[derive(Serialize)]
struct VerdictWire<'a> {
    kind: VerdictKind,
    drift: Option<&'a Point>,
    nu: Option<&'a SignedLatticeMeasure>,
    diagnostics: Option<&'a Diagnostics>,
    witness: Option<&'a Witness>,
    marginal: &'a [Point],
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VerdictWire {
            kind: self.kind,
            drift: self.triplet.as_ref().map(|t| &t.drift),
            nu: self.triplet.as_ref().map(|t| &t.nu),
            diagnostics: self.triplet.as_ref().map(|t| &t.diagnostics),
            witness: self.witness.as_ref(),
            marginal: &self.marginal,
        }
        .serialize(s)
    }
}

/// Three-way classification: not quasi-ID (φ has a zero), quasi-ID only
/// (some atom of `ν` below `-neg_tol`) or infinitely divisible.
pub fn classify(p: &LatticePmf, config: &QidConfig) -> Result<Verdict> {
    let triplet = match quasi_levy(p, config) {
        Ok(t) => t,
        Err(Error::ZeroFound { z, modulus }) => {
            return Ok(Verdict {
                kind: VerdictKind::NotQuasi,
                triplet: None,
                witness: Some(Witness::VanishingPoint { z, modulus }),
                marginal: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    Ok(verdict_from_triplet(triplet, config.neg_tol))
}

/// Verdict for a law already known to be quasi-ID with triplet `triplet`.
pub fn verdict_from_triplet(triplet: QLTriplet, neg_tol: f64) -> Verdict {
    let marginal = triplet
        .nu
        .iter()
        .filter(|(_, c)| *c < 0.0 && *c >= -neg_tol)
        .map(|(n, _)| n.clone())
        .collect();
    let (kind, witness) = match triplet.nu.min_atom() {
        Some((n, mass)) if mass < -neg_tol => {
            (VerdictKind::QuasiOnly, Some(Witness::NegativeAtom { n: n.clone(), mass }))
        }
        _ => (VerdictKind::InfinitelyDivisible, None),
    };
    Verdict { kind, triplet: Some(triplet), witness, marginal }
}

/// Positive and negative parts: `v = plus - minus` with disjoint supports.
pub fn hahn_jordan(v: &SignedLatticeMeasure) -> (SignedLatticeMeasure, SignedLatticeMeasure) {
    let plus = v.iter().filter(|(_, c)| *c > 0.0).map(|(n, c)| (n.clone(), c));
    let minus = v.iter().filter(|(_, c)| *c < 0.0).map(|(n, c)| (n.clone(), -c));
    (
        SignedLatticeMeasure::new(v.dim(), plus).expect("subset of a valid measure"),
        SignedLatticeMeasure::new(v.dim(), minus).expect("subset of a valid measure"),
    )
}

/// Compound Poisson law with jump rate `rate` and jump distribution `jump_law`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonFactor {
    rate: f64,
    jump_law: LatticePmf,
}

impl CompoundPoissonFactor {
    pub fn new(rate: f64, jump_law: LatticePmf) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!("jump rate {rate} must be positive")));
        }
        if jump_law.mass(&vec![0; jump_law.dim()]) > 0.0 {
            return Err(Error::InvalidParameter("jump law has an atom at the origin".into()));
        }
        Ok(Self { rate, jump_law })
    }

    /// Rate `ν(Z^d)` and jump law `ν / ν(Z^d)` of a nonnegative, nonzero `ν`.
    pub fn from_levy_measure(nu: &SignedLatticeMeasure) -> Result<Self> {
        if nu.iter().any(|(_, c)| c < 0.0) || nu.is_empty() {
            return Err(Error::InvalidParameter("Lévy measure must be nonnegative and nonzero".into()));
        }
        let rate = nu.total_mass();
        Self::new(rate, LatticePmf::from_weights(nu.dim(), nu.iter().map(|(n, c)| (n.clone(), c)))?)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn jump_law(&self) -> &LatticePmf {
        &self.jump_law
    }
}

/// A compound Poisson pmf cut after `max_jumps` jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedCompoundPoisson {
    pub pmf: LatticePmf,
    pub max_jumps: usize,
    /// Mass removed before renormalization (Poisson tail plus pruned atoms).
    pub discarded_mass: f64,
}

/// Smallest `m` with `P(N > m) < tail` for `N ~ Poisson(rate)`.
pub fn poisson_cutoff(rate: f64, tail: f64) -> usize {
    // Sum the upper tail from far out downwards so it is accurate below 1e-16.
    let limit = (rate + 40.0 * rate.sqrt() + 60.0).ceil() as usize;
    let mut log_terms = Vec::with_capacity(limit + 1);
    let mut log_term = -rate;
    for n in 0..=limit {
        if n > 0 {
            log_term += rate.ln() - (n as f64).ln();
        }
        log_terms.push(log_term);
    }
    let mut upper = 0.0;
    let mut cutoff = limit;
    for m in (0..=limit).rev() {
        // upper = P(N > m)
        if upper >= tail {
            break;
        }
        cutoff = m;
        upper += log_terms[m].exp();
    }
    cutoff
}

/// `e^{-λ} Σ_{m=0}^{m*} λ^m σ^{*m} / m!`, renormalized.
///
/// `m*` is [`poisson_cutoff`] of `tail`; atoms of the convolution powers
/// smaller than `1e-3 · tail / |support|` are pruned as they appear.
pub fn compound_poisson_pmf(factor: &CompoundPoissonFactor, tail: f64) -> Result<TruncatedCompoundPoisson> {
    if !(tail > 0.0 && tail <= 1e-6) {
        return Err(Error::InvalidParameter(format!("tail = {tail} outside (0, 1e-6]")));
    }
    let dim = factor.jump_law.dim();
    let max_jumps = poisson_cutoff(factor.rate, tail);
    let mut power: BTreeMap<Point, f64> = BTreeMap::from([(vec![0; dim], 1.0)]);
    let mut total: BTreeMap<Point, f64> = BTreeMap::new();
    let mut weight = (-factor.rate).exp();
    for m in 0..=max_jumps {
        if m > 0 {
            weight *= factor.rate / m as f64;
            let mut next: BTreeMap<Point, f64> = BTreeMap::new();
            for (n, a) in &power {
                for (s, b) in factor.jump_law.iter() {
                    let key: Point = n.iter().zip(s).map(|(x, y)| x + y).collect();
                    *next.entry(key).or_insert(0.0) += a * b;
                }
            }
            let floor = 1e-3 * tail / next.len() as f64;
            next.retain(|_, a| *a >= floor);
            power = next;
        }
        for (n, a) in &power {
            *total.entry(n.clone()).or_insert(0.0) += weight * a;
        }
    }
    let kept: f64 = total.values().sum();
    Ok(TruncatedCompoundPoisson {
        pmf: LatticePmf::from_weights(dim, total)?,
        max_jumps,
        discarded_mass: (1.0 - kept).max(0.0),
    })
}

/// `φ_p(z) = e^{i<k, z>} φ_{mu1}(z) / φ_{mu2}(z)` with compound Poisson laws
/// `mu1`, `mu2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub drift: Point,
    pub plus: SignedLatticeMeasure,
    pub minus: SignedLatticeMeasure,
    pub factor1: CompoundPoissonFactor,
    pub factor2: CompoundPoissonFactor,
    pub mu1: TruncatedCompoundPoisson,
    pub mu2: TruncatedCompoundPoisson,
    /// `max |φ_p φ_{mu2} - e^{i<k,z>} φ_{mu1}|` over the verification grid.
    pub max_residual: f64,
    pub grid_size: usize,
}

/// Writes a quasi-ID law as a shifted quotient of two compound Poisson laws.
///
/// Both `ν⁺` and `ν⁻` get an extra unit atom at `e_1`, so both rates are
/// positive even when one part vanishes.
pub fn factorize(p: &LatticePmf, config: &QidConfig) -> Result<Factorization> {
    let triplet = quasi_levy(p, config)?;
    let dim = p.dim();
    let (plus, minus) = hahn_jordan(&triplet.nu);
    let mut e1 = vec![0i64; dim];
    e1[0] = 1;
    let pad = SignedLatticeMeasure::new(dim, [(e1, 1.0)])?;
    let factor1 = CompoundPoissonFactor::from_levy_measure(&plus.linear_combination(1.0, &pad, 1.0)?)?;
    let factor2 = CompoundPoissonFactor::from_levy_measure(&minus.linear_combination(1.0, &pad, 1.0)?)?;
    let tail = (config.tol * 1e-3).min(1e-6);
    let mu1 = compound_poisson_pmf(&factor1, tail)?;
    let mu2 = compound_poisson_pmf(&factor2, tail)?;

    let size = triplet.diagnostics.grid_size;
    let phi = sample_grid(p, size, config.max_grid_points)?;
    let phi1 = sample_grid(&mu1.pmf, size, config.max_grid_points)?;
    let phi2 = sample_grid(&mu2.pmf, size, config.max_grid_points)?;
    let mut max_residual: f64 = 0.0;
    for flat in 0..phi.values().len() {
        let z = phi.point(flat);
        let linear: f64 = triplet.drift.iter().zip(&z).map(|(&k, x)| k as f64 * x).sum();
        let lhs = phi.values()[flat] * phi2.values()[flat];
        let rhs = Complex64::from_polar(1.0, linear) * phi1.values()[flat];
        max_residual = max_residual.max((lhs - rhs).norm());
    }
    if max_residual >= 10.0 * config.tol {
        return Err(Error::NumericalFault(format!(
            "factorization residual {max_residual:e} exceeds 10 tol"
        )));
    }
    Ok(Factorization {
        drift: triplet.drift,
        plus,
        minus,
        factor1,
        factor2,
        mu1,
        mu2,
        max_residual,
        grid_size: size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mercator(n: i64) -> f64 {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sign * (3.0f64 / 7.0).powi(n as i32) / n as f64
    }

    fn poisson(rate: f64) -> LatticePmf {
        let factor = CompoundPoissonFactor::new(rate, LatticePmf::dirac(vec![1])).unwrap();
        compound_poisson_pmf(&factor, 1e-12).unwrap().pmf
    }

    #[test]
    fn dirac_has_pure_drift() {
        for m in [vec![0], vec![4], vec![-3, 2], vec![1, 0, -1]] {
            let t = quasi_levy(&LatticePmf::dirac(m.clone()), &QidConfig::default()).unwrap();
            assert_eq!(t.drift, m);
            assert!(t.nu.is_empty(), "{:?}", t.nu);
        }
    }

    #[test]
    fn bernoulli_matches_mercator() {
        let t = quasi_levy(&LatticePmf::bernoulli(0.3).unwrap(), &QidConfig::default()).unwrap();
        assert_eq!(t.drift, vec![0]);
        for n in 1..=20 {
            assert!((t.nu.mass(&[n]) - mercator(n)).abs() < 1e-8, "n = {n}");
        }
        assert!(t.nu.iter().all(|(n, _)| n[0] > 0));
        assert!(t.diagnostics.reconstruction_error < 1e-10);
        assert!(t.diagnostics.max_imag_residual < 1e-10);
        assert!(t.diagnostics.tail_mass < 1e-10);
    }

    #[test]
    fn poisson_is_a_single_jump() {
        let t = quasi_levy(&poisson(1.0), &QidConfig::default()).unwrap();
        assert_eq!(t.drift, vec![0]);
        assert!((t.nu.mass(&[1]) - 1.0).abs() < 1e-8);
        assert!(t.nu.iter().filter(|(n, _)| n[0] != 1).all(|(_, c)| c.abs() < 1e-8));
    }

    #[test]
    fn zero_and_budget_errors() {
        let err = quasi_levy(&LatticePmf::bernoulli(0.5).unwrap(), &QidConfig::default()).unwrap_err();
        assert!(matches!(err, Error::ZeroFound { .. }));
        let tight = QidConfig { max_grid_points: 16, ..QidConfig::default() };
        let err = quasi_levy(&LatticePmf::bernoulli(0.45).unwrap(), &tight).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
        let bad = QidConfig::with_tol(1e-3);
        assert!(matches!(quasi_levy(&LatticePmf::dirac(vec![0]), &bad), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn classify_examples() {
        let v = classify(&LatticePmf::bernoulli(0.5).unwrap(), &QidConfig::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::NotQuasi);
        assert!(v.triplet.is_none());
        match v.witness {
            Some(Witness::VanishingPoint { z, .. }) => assert!((z[0] - PI).abs() < 1e-10),
            other => panic!("{other:?}"),
        }

        let v = classify(&LatticePmf::bernoulli(0.3).unwrap(), &QidConfig::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::QuasiOnly);
        match v.witness {
            Some(Witness::NegativeAtom { n, mass }) => {
                assert_eq!(n, vec![2]);
                assert!((mass - mercator(2)).abs() < 1e-10);
                assert!((mass + 0.0918367).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }

        let p = poisson(1.0).product(&poisson(2.0));
        let v = classify(&p, &QidConfig::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::InfinitelyDivisible);
        let nu = &v.triplet.unwrap().nu;
        let expected = SignedLatticeMeasure::new(2, [(vec![1, 0], 1.0), (vec![0, 1], 2.0)]).unwrap();
        assert!(nu.max_abs_diff(&expected) < 1e-8);
    }

    #[test]
    fn marginal_atoms_are_reported() {
        let nu = SignedLatticeMeasure::new(1, [(vec![1], 0.5), (vec![2], -5e-10), (vec![3], -2e-9)]).unwrap();
        let triplet = QLTriplet {
            drift: vec![0],
            nu: nu.clone(),
            diagnostics: Diagnostics { reconstruction_error: 0.0, max_imag_residual: 0.0, tail_mass: 0.0, grid_size: 8 },
        };
        let v = verdict_from_triplet(triplet.clone(), DEFAULT_NEG_TOL);
        assert_eq!(v.kind, VerdictKind::QuasiOnly);
        assert_eq!(v.marginal, vec![vec![2]]);
        let lenient = verdict_from_triplet(triplet, 1e-8);
        assert_eq!(lenient.kind, VerdictKind::InfinitelyDivisible);
        assert_eq!(lenient.marginal, vec![vec![2], vec![3]]);
    }

    #[test]
    fn hahn_jordan_examples() {
        let v = SignedLatticeMeasure::new(1, [(vec![1], 0.5), (vec![2], -0.2)]).unwrap();
        let (plus, minus) = hahn_jordan(&v);
        assert_eq!(plus, SignedLatticeMeasure::new(1, [(vec![1], 0.5)]).unwrap());
        assert_eq!(minus, SignedLatticeMeasure::new(1, [(vec![2], 0.2)]).unwrap());
        assert_eq!(plus.linear_combination(1.0, &minus, -1.0).unwrap(), v);

        let pos = SignedLatticeMeasure::new(2, [(vec![1, 0], 0.5), (vec![0, 3], 0.1)]).unwrap();
        let (plus, minus) = hahn_jordan(&pos);
        assert_eq!(plus, pos);
        assert!(minus.is_empty());

        let (plus, minus) = hahn_jordan(&SignedLatticeMeasure::zero(3));
        assert!(plus.is_empty() && minus.is_empty());
    }

    #[test]
    fn poisson_cutoff_matches_tail_oracle() {
        // Upper tails computed with 30-digit arithmetic.
        assert_eq!(poisson_cutoff(1.0, 1e-12), 14);
        assert_eq!(poisson_cutoff(0.5, 1e-12), 11);
        assert_eq!(poisson_cutoff(2.0, 1e-12), 18);
    }

    #[test]
    fn compound_poisson_examples() {
        let factor = CompoundPoissonFactor::new(1.0, LatticePmf::dirac(vec![1])).unwrap();
        let out = compound_poisson_pmf(&factor, 1e-12).unwrap();
        let e = (-1.0f64).exp();
        assert!((out.pmf.mass(&[0]) - e).abs() < 1e-12);
        assert!((out.pmf.mass(&[1]) - e).abs() < 1e-12);
        assert!((out.pmf.mass(&[2]) - e / 2.0).abs() < 1e-12);
        assert_eq!(out.max_jumps, 14);
        assert!(out.discarded_mass < 1e-12);

        let diagonal = CompoundPoissonFactor::new(2.5, LatticePmf::dirac(vec![1, 1])).unwrap();
        let out = compound_poisson_pmf(&diagonal, 1e-10).unwrap();
        let mut term = (-2.5f64).exp();
        for m in 0..10i64 {
            if m > 0 {
                term *= 2.5 / m as f64;
            }
            assert!((out.pmf.mass(&[m, m]) - term).abs() < 1e-10);
        }
        assert!(out.pmf.iter().all(|(n, _)| n[0] == n[1]));
    }

    #[test]
    fn symmetric_compound_poisson_by_brute_force() {
        let jumps = LatticePmf::new(1, [(vec![-1], 0.5), (vec![1], 0.5)]).unwrap();
        let factor = CompoundPoissonFactor::new(0.5, jumps.clone()).unwrap();
        let out = compound_poisson_pmf(&factor, 1e-12).unwrap();
        let m_star = poisson_cutoff(0.5, 1e-12);
        // P(S_m = 0) for a simple random walk, via explicit convolution powers.
        let mut oracle = 0.0;
        let mut walk = LatticePmf::dirac(vec![0]);
        let mut weight = (-0.5f64).exp();
        for m in 0..=m_star {
            if m > 0 {
                walk = walk.convolve(&jumps).unwrap();
                weight *= 0.5 / m as f64;
            }
            oracle += weight * walk.mass(&[0]);
        }
        assert!((out.pmf.mass(&[0]) - oracle).abs() < 1e-12);
        for (n, mass) in out.pmf.iter() {
            assert!((mass - out.pmf.mass(&[-n[0]])).abs() < 1e-15);
        }
    }

    #[test]
    fn factor_construction_rejects_bad_input() {
        assert!(CompoundPoissonFactor::new(0.0, LatticePmf::dirac(vec![1])).is_err());
        assert!(CompoundPoissonFactor::new(1.0, LatticePmf::dirac(vec![0])).is_err());
        let neg = SignedLatticeMeasure::new(1, [(vec![1], -1.0)]).unwrap();
        assert!(CompoundPoissonFactor::from_levy_measure(&neg).is_err());
        assert!(compound_poisson_pmf(
            &CompoundPoissonFactor::new(1.0, LatticePmf::dirac(vec![1])).unwrap(),
            1e-3
        )
        .is_err());
    }

    #[test]
    fn factorize_poisson() {
        let f = factorize(&poisson(1.0), &QidConfig::default()).unwrap();
        assert_eq!(f.drift, vec![0]);
        assert!((f.factor1.rate() - 2.0).abs() < 1e-8);
        assert!((f.factor2.rate() - 1.0).abs() < 1e-8);
        assert!((f.factor1.jump_law().mass(&[1]) - 1.0).abs() < 1e-8);
        assert_eq!(f.factor2.jump_law(), &LatticePmf::dirac(vec![1]));
        assert!(f.max_residual < 1e-9);
    }

    #[test]
    fn factorize_dirac() {
        let f = factorize(&LatticePmf::dirac(vec![2, -1]), &QidConfig::default()).unwrap();
        assert_eq!(f.drift, vec![2, -1]);
        assert_eq!(f.mu1, f.mu2);
        assert_eq!(f.factor1.rate(), 1.0);
        assert_eq!(f.factor1.jump_law(), &LatticePmf::dirac(vec![1, 0]));
    }

    #[test]
    fn factorize_bernoulli_rates() {
        let f = factorize(&LatticePmf::bernoulli(0.3).unwrap(), &QidConfig::default()).unwrap();
        let r: f64 = 3.0 / 7.0;
        let odd: f64 = (1..200).step_by(2).map(|n| r.powi(n) / n as f64).sum();
        let even: f64 = (2..200).step_by(2).map(|n| r.powi(n) / n as f64).sum();
        assert!((f.factor1.rate() - (1.0 + odd)).abs() < 1e-9);
        assert!((f.factor2.rate() - (1.0 + even)).abs() < 1e-9);
        assert!(f.max_residual < 1e-9);
    }

    #[test]
    fn factorize_refuses_zeros() {
        assert!(matches!(
            factorize(&LatticePmf::bernoulli(0.5).unwrap(), &QidConfig::default()),
            Err(Error::ZeroFound { .. })
        ));
    }

    #[test]
    fn triplet_charfn_reproduces_phi() {
        let p = LatticePmf::new(2, [(vec![0, 0], 0.2), (vec![1, 0], 0.55), (vec![0, 1], 0.15), (vec![2, 1], 0.1)]).unwrap();
        let t = quasi_levy(&p, &QidConfig::default()).unwrap();
        assert_eq!(t.drift, vec![1, 0]);
        for z in [[0.3, -1.2], [2.0, 2.0], [PI, 0.1]] {
            let direct = crate::charfn::eval_charfn(&p, &z).unwrap();
            assert!((t.charfn(&z) - direct).norm() < 1e-9);
        }
    }
}
