#![allow(dead_code)]

use latqid::qid::{compound_poisson_pmf, CompoundPoissonFactor};
use latqid::{LatticePmf, Point, SignedLatticeMeasure};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(-1)^{n+1} (3/7)^n / n`, the log-coefficients of `0.7 + 0.3 s`.
pub fn mercator(n: i64) -> f64 {
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    sign * (3.0f64 / 7.0).powi(n as i32) / n as f64
}

pub fn poisson(rate: f64, tail: f64) -> LatticePmf {
    let factor = CompoundPoissonFactor::new(rate, LatticePmf::dirac(vec![1])).unwrap();
    compound_poisson_pmf(&factor, tail).unwrap().pmf
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, lo: i64, hi: i64) -> Point {
    (0..dim).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Law on `{0..=max}^d` with `p(0) ∈ [p0_min, 0.9]` and up to four other atoms.
pub fn random_orthant_pmf(rng: &mut ChaCha8Rng, dim: usize, max: i64, p0_min: f64) -> LatticePmf {
    let p0 = rng.gen_range(p0_min..0.9);
    let count = rng.gen_range(1..=4);
    let mut weights = vec![(vec![0; dim], 0.0)];
    let mut raw = Vec::new();
    for _ in 0..count {
        let n = random_point(rng, dim, 0, max);
        if n.iter().any(|&x| x != 0) {
            raw.push((n, rng.gen_range(0.05..1.0)));
        }
    }
    if raw.is_empty() {
        let mut n = vec![0; dim];
        n[0] = 1;
        raw.push((n, 1.0));
    }
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    weights[0].1 = p0;
    weights.extend(raw.into_iter().map(|(n, w)| (n, (1.0 - p0) * w / total)));
    LatticePmf::from_weights(dim, weights).unwrap()
}

/// Law with an atom of mass in `[0.6, 0.9]` at a random point of
/// `{-2..=2}^d` and up to four more atoms within sup-distance one of it. The
/// heavy atom keeps `φ` and every projection of it zero-free.
pub fn random_dominated_pmf(rng: &mut ChaCha8Rng, dim: usize) -> LatticePmf {
    let center = random_point(rng, dim, -2, 2);
    let heavy = rng.gen_range(0.6..0.9);
    let count = rng.gen_range(1..=4);
    let raw: Vec<(Point, f64)> = (0..count)
        .map(|_| {
            let offset = random_point(rng, dim, -1, 1);
            let n: Point = center.iter().zip(offset).map(|(c, o)| c + o).collect();
            (n, rng.gen_range(0.05..1.0))
        })
        .filter(|(n, _)| *n != center)
        .collect();
    if raw.is_empty() {
        return LatticePmf::dirac(center);
    }
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    let mut weights = vec![(center, heavy)];
    weights.extend(raw.into_iter().map(|(n, w)| (n, (1.0 - heavy) * w / total)));
    LatticePmf::from_weights(dim, weights).unwrap()
}

/// Smallest `|φ|` over the `64^d` grid.
pub fn grid_min_modulus(p: &LatticePmf) -> f64 {
    let grid = latqid::charfn::sample_grid(p, 64, 1 << 20).unwrap();
    grid.values().iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
}

/// [`random_orthant_pmf`] conditioned on `|φ| >= 0.1` over the `64^d` grid.
pub fn random_orthant_pmf_with_margin(rng: &mut ChaCha8Rng, dim: usize) -> LatticePmf {
    loop {
        let p = random_orthant_pmf(rng, dim, 3, 0.3);
        if grid_min_modulus(&p) >= 0.1 {
            return p;
        }
    }
}

/// Nonnegative Lévy measure with one to three atoms in `{-2..=2}^d \ {0}` and
/// total mass at most `max_rate`.
pub fn random_levy_measure(rng: &mut ChaCha8Rng, dim: usize, max_rate: f64) -> SignedLatticeMeasure {
    let count = rng.gen_range(1..=3);
    let mut atoms = Vec::new();
    while atoms.len() < count {
        let n = random_point(rng, dim, -2, 2);
        if n.iter().any(|&x| x != 0) {
            atoms.push((n, rng.gen_range(0.05..1.0)));
        }
    }
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    let rate = rng.gen_range(0.2..max_rate);
    SignedLatticeMeasure::new(dim, atoms.into_iter().map(|(n, w)| (n, rate * w / total))).unwrap()
}

/// Compound Poisson law of a random nonnegative Lévy measure, truncated far
/// below the test tolerances.
pub fn random_id_pmf(rng: &mut ChaCha8Rng, dim: usize, max_rate: f64) -> (LatticePmf, SignedLatticeMeasure) {
    let nu = random_levy_measure(rng, dim, max_rate);
    let factor = CompoundPoissonFactor::from_levy_measure(&nu).unwrap();
    (compound_poisson_pmf(&factor, 1e-15).unwrap().pmf, nu)
}

/// `(B, 0) + Y` with `B ~ Bernoulli(b)`, `b ∈ [0.15, 0.4]`, and `Y` a
/// low-rate compound Poisson law in two dimensions: `ν` inherits the negative
/// Mercator atoms of `B` on the first axis.
pub fn random_quasi_axis_pmf(rng: &mut ChaCha8Rng) -> LatticePmf {
    let b = rng.gen_range(0.15..0.4);
    let axis = LatticePmf::bernoulli(b).unwrap().product(&LatticePmf::dirac(vec![0]));
    let (noise, _) = random_id_pmf(rng, 2, 0.3);
    axis.convolve(&noise).unwrap()
}
