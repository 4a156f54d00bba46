//! Characteristic functions on the torus `[0, 2π)^d`.
//!
//! Grids are stored row-major: the flat index of `(j_1, ..., j_d)` is
//! `Σ_a j_a · M^(d-1-a)`, so the first axis has the largest stride and the
//! last axis is contiguous. The point at `(j_1, ..., j_d)` is
//! `z = (2π j_1 / M, ..., 2π j_d / M)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::measures::LatticePmf;
use crate::{Error, Result};

/// Default cap on the number of grid points, `2^20`.
pub const DEFAULT_MAX_GRID_POINTS: usize = 1 << 20;

/// Grid moduli below this count as zeros of `φ`.
pub const ZERO_MODULUS: f64 = 1e-13;

/// Largest phase step accepted between neighbouring grid points.
pub const MAX_PHASE_STEP: f64 = PI / 2.0;

const WINDING_INTEGRALITY_TOL: f64 = 1e-6;

/// Samples of a function on a regular grid of the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    size: usize,
    values: Vec<Complex64>,
}

impl TorusGrid {
    pub fn new(dim: usize, size: usize, values: Vec<Complex64>) -> Result<Self> {
        if size < 2 || !size.is_power_of_two() {
            return Err(Error::GridSizeNotPowerOfTwo(size));
        }
        let expected = checked_points(dim, size).ok_or(Error::GridTooLarge {
            points: u128::MAX,
            budget: usize::MAX,
        })?;
        if values.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "grid needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self { dim, size, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Flat offset between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.size.pow((self.dim - 1 - axis) as u32)
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &j| acc * self.size + j)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = flat % self.size;
            flat /= self.size;
        }
        out
    }

    /// Torus point sampled at `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let h = 2.0 * PI / self.size as f64;
        self.multi_index(flat).into_iter().map(|j| j as f64 * h).collect()
    }
}

fn checked_points(dim: usize, size: usize) -> Option<usize> {
    (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(size))
}

pub(crate) fn check_budget(dim: usize, size: usize, budget: usize) -> Result<usize> {
    if size < 2 || !size.is_power_of_two() {
        return Err(Error::GridSizeNotPowerOfTwo(size));
    }
    match checked_points(dim, size) {
        Some(points) if points <= budget => Ok(points),
        _ => Err(Error::GridTooLarge { points: (size as u128).pow(dim as u32), budget }),
    }
}

/// In-place multi-dimensional FFT over a row-major `size^dim` array, one
/// axis at a time. Unnormalized in both directions; the inverse uses
/// `e^{+2πi jk/M}`.
pub(crate) fn fft_nd(data: &mut [Complex64], dim: usize, size: usize, direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(size, direction);
    let mut batch = vec![Complex64::new(0.0, 0.0); size * 16];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = size.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(size) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        // Columns are gathered a few at a time so reads stay contiguous.
        let width = stride.min(16);
        let block = stride * size;
        for start in (0..data.len()).step_by(block) {
            for first in (0..stride).step_by(width) {
                let base = start + first;
                for t in 0..size {
                    let row = &data[base + t * stride..base + t * stride + width];
                    for (b, value) in row.iter().enumerate() {
                        batch[b * size + t] = *value;
                    }
                }
                fft.process_with_scratch(&mut batch[..width * size], &mut scratch);
                for t in 0..size {
                    let row = &mut data[base + t * stride..base + t * stride + width];
                    for (b, value) in row.iter_mut().enumerate() {
                        *value = batch[b * size + t];
                    }
                }
            }
        }
    }
}

/// Evaluates `Σ_n a_n e^{i<n, z>}` at `z = 2π (j + offset) / M` on every axis,
/// for every grid index `j`.
pub(crate) fn sample_series<'a, I>(
    dim: usize,
    size: usize,
    offset: f64,
    coefficients: I,
) -> Vec<Complex64>
where
    I: IntoIterator<Item = (&'a [i64], Complex64)>,
{
    let points = size.pow(dim as u32);
    let mut data = vec![Complex64::new(0.0, 0.0); points];
    let m = size as i64;
    let h = 2.0 * PI / size as f64;
    for (n, a) in coefficients {
        let flat = n.iter().fold(0usize, |acc, &x| acc * size + x.rem_euclid(m) as usize);
        let weight = if offset == 0.0 {
            a
        } else {
            let total: i64 = n.iter().sum();
            a * Complex64::from_polar(1.0, h * offset * total as f64)
        };
        data[flat] += weight;
    }
    fft_nd(&mut data, dim, size, FftDirection::Inverse);
    data
}

/// `φ(z) = Σ_n p(n) e^{i<n, z>}`.
pub fn eval_charfn(p: &LatticePmf, z: &[f64]) -> Result<Complex64> {
    if z.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: z.len() });
    }
    Ok(p.iter()
        .map(|(n, mass)| {
            let phase: f64 = n.iter().zip(z).map(|(&a, &b)| a as f64 * b).sum();
            Complex64::from_polar(mass, phase)
        })
        .sum())
}

/// Samples `φ` on the `M^d` torus grid with a multi-dimensional FFT.
pub fn sample_grid(p: &LatticePmf, size: usize, max_points: usize) -> Result<TorusGrid> {
    check_budget(p.dim(), size, max_points)?;
    let values = sample_series(
        p.dim(),
        size,
        0.0,
        p.iter().map(|(n, mass)| (n.as_slice(), Complex64::new(mass, 0.0))),
    );
    Ok(TorusGrid { dim: p.dim(), size, values })
}

fn nearest_mean_point(p: &LatticePmf) -> Vec<f64> {
    let mut mean = vec![0.0; p.dim()];
    for (n, mass) in p.iter() {
        for (m, &x) in mean.iter_mut().zip(n) {
            *m += mass * x as f64;
        }
    }
    mean.iter().map(|m| m.round()).collect()
}

fn centered_moment(p: &LatticePmf, center: &[f64], power: i32) -> f64 {
    p.iter()
        .map(|(n, mass)| {
            let sq: f64 = n.iter().zip(center).map(|(&x, y)| (x as f64 - y).powi(2)).sum();
            sq.sqrt().powi(power) * mass
        })
        .sum()
}

/// `Σ_n |n - c|_2 p(n)` with `c` the lattice point nearest the mean of `p`
/// (or the origin, whichever gives the smaller value).
///
/// This bounds the gradient of `e^{-i<c, z>} φ(z)`, which has the same
/// modulus as `φ`, so it is a Lipschitz constant for `|φ|`. With `c = 0` it is
/// the plain bound `Σ_n |n|_2 p(n)` on `|∇φ|`.
pub fn lipschitz_bound(p: &LatticePmf) -> f64 {
    let center = nearest_mean_point(p);
    centered_moment(p, &center, 1).min(centered_moment(p, &vec![0.0; p.dim()], 1))
}

/// `Σ_n |n - c|_2^2 p(n)`, a bound on every second directional derivative of
/// `e^{-i<c, z>} φ(z)` along unit vectors.
pub fn curvature_bound(p: &LatticePmf) -> f64 {
    centered_moment(p, &nearest_mean_point(p), 2)
}

/// Evidence that `φ` has no zero on the torus.
///
/// Every torus point lies within `r = π √d / M` of a grid point `z_j`. Two
/// lower bounds for `|φ|` on that cell are tried:
///
/// * first order: `min_j |φ(z_j)| - L r` with `L` from [`lipschitz_bound`];
/// * second order: `min_j (|φ(z_j)| - |∇φ_c(z_j)| r) - H r² / 2` with the
///   exact gradient of the centered `φ_c` at each grid point and `H` from
///   [`curvature_bound`].
///
/// `margin` is the larger of the two; the certificate holds iff it is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroFreeCertificate {
    pub min_modulus: f64,
    pub lipschitz_bound: f64,
    pub curvature_bound: f64,
    pub grid_size: usize,
    pub margin: f64,
}

impl ZeroFreeCertificate {
    pub fn is_valid(&self) -> bool {
        self.margin > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certification {
    Certified(ZeroFreeCertificate),
    /// `|φ| < ZERO_MODULUS` at the grid point `z`.
    ZeroFound { z: Vec<f64>, modulus: f64 },
    /// Margin not positive; `z` is the grid point of minimal modulus.
    Inconclusive { z: Vec<f64>, certificate: ZeroFreeCertificate },
}

/// Certifies zero-freeness from an already sampled grid of `φ_p`.
pub fn certify_grid(p: &LatticePmf, grid: &TorusGrid) -> Certification {
    let (argmin, min_modulus) = grid
        .values
        .iter()
        .map(|v| v.norm())
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is never empty");
    let z = grid.point(argmin);
    if min_modulus < ZERO_MODULUS {
        return Certification::ZeroFound { z, modulus: min_modulus };
    }
    let radius = PI * (p.dim() as f64).sqrt() / grid.size as f64;
    let lipschitz = lipschitz_bound(p);
    let curvature = curvature_bound(p);
    let mut margin = min_modulus - lipschitz * radius;
    if margin <= 0.0 {
        let center = nearest_mean_point(p);
        let mut gradient_sq = vec![0.0; grid.values.len()];
        for axis in 0..p.dim() {
            let partial = sample_series(
                p.dim(),
                grid.size,
                0.0,
                p.iter().map(|(n, mass)| {
                    (n.as_slice(), Complex64::new(0.0, (n[axis] as f64 - center[axis]) * mass))
                }),
            );
            for (acc, v) in gradient_sq.iter_mut().zip(partial) {
                *acc += v.norm_sqr();
            }
        }
        let second = grid
            .values
            .iter()
            .zip(&gradient_sq)
            .map(|(v, g)| v.norm() - g.sqrt() * radius)
            .fold(f64::INFINITY, f64::min)
            - 0.5 * curvature * radius * radius;
        margin = margin.max(second);
    }
    let certificate = ZeroFreeCertificate {
        min_modulus,
        lipschitz_bound: lipschitz,
        curvature_bound: curvature,
        grid_size: grid.size,
        margin,
    };
    if certificate.is_valid() {
        Certification::Certified(certificate)
    } else {
        Certification::Inconclusive { z, certificate }
    }
}

pub fn certify_zero_free(p: &LatticePmf, size: usize, max_points: usize) -> Result<Certification> {
    Ok(certify_grid(p, &sample_grid(p, size, max_points)?))
}

/// Doubles the grid from `start` until the outcome is conclusive or the
/// budget runs out; returns the last outcome.
pub fn certify_adaptive(p: &LatticePmf, start: usize, max_points: usize) -> Result<Certification> {
    let mut size = start;
    loop {
        let outcome = certify_zero_free(p, size, max_points)?;
        let next = size * 2;
        match outcome {
            Certification::Inconclusive { .. } if check_budget(p.dim(), next, max_points).is_ok() => {
                size = next;
            }
            other => return Ok(other),
        }
    }
}

/// `x` reduced to `(-π, π]`, the argument of `e^{ix}`.
fn wrap_phase(x: f64) -> f64 {
    let r = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Principal argument of `b / a`.
fn phase_step(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

/// Distinguished logarithm of a sampled, certified zero-free `φ`.
///
/// The imaginary part is unwrapped along axis-aligned paths from the origin:
/// first along axis 1, then from every point reached so far along axis 2, and
/// so on. Every step must turn the phase by less than `π/2`.
pub fn distinguished_log(grid: &TorusGrid, certificate: &ZeroFreeCertificate) -> Result<TorusGrid> {
    if certificate.grid_size != grid.size || !certificate.is_valid() {
        return Err(Error::InvalidCertificate);
    }
    let phi = &grid.values;
    if (phi[0] - 1.0).norm() > 1e-12 {
        return Err(Error::NumericalFault(format!("phi(0) = {} is not 1", phi[0])));
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); phi.len()];
    for axis in 0..grid.dim {
        let stride = grid.stride(axis);
        for base in (0..phi.len()).step_by(stride * grid.size) {
            for t in 1..grid.size {
                let prev = base + (t - 1) * stride;
                let idx = prev + stride;
                let step = phase_step(phi[prev], phi[idx]);
                if step.abs() >= MAX_PHASE_STEP {
                    return Err(Error::UnwrapAmbiguity { index: idx, step });
                }
                psi[idx] = Complex64::new(phi[idx].norm().ln(), psi[prev].im + step);
            }
        }
    }
    Ok(TorusGrid { dim: grid.dim, size: grid.size, values: psi })
}

/// Winding number of `φ` around the full loop in each axis.
///
/// The loop through the origin is read off `psi`; at least two further loops
/// per axis (other coordinates at `M/2` and at `1`, or a recomputation from
/// `p` when `d = 1`) are evaluated directly from `p` and must agree.
pub fn winding_vector(psi: &TorusGrid, p: &LatticePmf) -> Result<Vec<i64>> {
    if psi.dim != p.dim() {
        return Err(Error::DimensionMismatch { expected: psi.dim, got: p.dim() });
    }
    let size = psi.size;
    let mut k = Vec::with_capacity(psi.dim);
    for axis in 0..psi.dim {
        let stride = psi.stride(axis);
        let last = (size - 1) * stride;
        let wrap = phase_step(psi.values[last].exp(), psi.values[0].exp());
        if wrap.abs() >= MAX_PHASE_STEP {
            return Err(Error::UnwrapAmbiguity { index: 0, step: wrap });
        }
        let turns = (psi.values[last].im - psi.values[0].im + wrap) / (2.0 * PI);
        let k_axis = turns.round();
        if (turns - k_axis).abs() > WINDING_INTEGRALITY_TOL {
            return Err(Error::WindingMismatch {
                axis,
                detail: format!("non-integral winding {turns}"),
            });
        }
        let k_axis = k_axis as i64;

        let offsets: &[usize] = if psi.dim == 1 { &[0] } else { &[size / 2, 1] };
        for &offset in offsets {
            let mut base = vec![offset; psi.dim];
            base[axis] = 0;
            let other = loop_winding(p, &base, axis, size)?;
            if other != k_axis {
                return Err(Error::WindingMismatch {
                    axis,
                    detail: format!("loop at offset {offset} winds {other}, origin loop {k_axis}"),
                });
            }
        }
        k.push(k_axis);
    }
    Ok(k)
}

fn loop_winding(p: &LatticePmf, base: &[usize], axis: usize, size: usize) -> Result<i64> {
    let h = 2.0 * PI / size as f64;
    let mut z: Vec<f64> = base.iter().map(|&j| j as f64 * h).collect();
    let start = eval_charfn(p, &z)?;
    let mut prev = start;
    let mut total = 0.0;
    for t in 1..=size {
        z[axis] = (t % size) as f64 * h;
        let next = if t == size { start } else { eval_charfn(p, &z)? };
        let step = phase_step(prev, next);
        if step.abs() >= MAX_PHASE_STEP {
            return Err(Error::UnwrapAmbiguity { index: t, step });
        }
        total += step;
        prev = next;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// `ψ̃[j] = ψ[j] - i<k, z_j>`.
pub fn detrended_log(psi: &TorusGrid, k: &[i64]) -> Result<TorusGrid> {
    if k.len() != psi.dim {
        return Err(Error::DimensionMismatch { expected: psi.dim, got: k.len() });
    }
    let h = 2.0 * PI / psi.size as f64;
    let mut multi = vec![0usize; psi.dim];
    let values = psi
        .values
        .iter()
        .enumerate()
        .map(|(flat, v)| {
            let mut rest = flat;
            for slot in multi.iter_mut().rev() {
                *slot = rest % psi.size;
                rest /= psi.size;
            }
            let phase: f64 = multi.iter().zip(k).map(|(&j, &kj)| kj as f64 * j as f64 * h).sum();
            v - Complex64::new(0.0, phase)
        })
        .collect();
    Ok(TorusGrid { dim: psi.dim, size: psi.size, values })
}

/// Largest mismatch between the unwrapped phase increment and the principal
/// phase step over every edge of the discrete torus, wrap-around edges
/// included (corrected by `2π k_a`). Zero up to rounding iff `ψ̃` is a
/// consistent periodic logarithm on the grid.
pub fn closure_residual(psi: &TorusGrid, k: &[i64]) -> f64 {
    let size = psi.size;
    let values = &psi.values;
    let mut worst: f64 = 0.0;
    for (axis, &winding) in k.iter().enumerate().take(psi.dim) {
        let stride = psi.stride(axis);
        for base in (0..values.len()).filter(|f| (f / stride).is_multiple_of(size)) {
            for t in 0..size {
                let prev = base + t * stride;
                let (next, correction) = if t + 1 == size {
                    (base, 2.0 * PI * winding as f64)
                } else {
                    (prev + stride, 0.0)
                };
                let actual = values[next].im - values[prev].im + correction;
                let principal = wrap_phase(values[next].im - values[prev].im);
                worst = worst.max((actual - principal).abs());
            }
        }
    }
    worst
}
