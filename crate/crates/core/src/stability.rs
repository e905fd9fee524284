//! Linear stability analysis: boundary locus curves, characteristic roots and
//! region rasters.
//!
//! For `A(E)x_n = δB(E)f(x_n)` applied to `x' = λx`, the characteristic
//! equation is `A(1/r) = z B(1/r)` with `z = δλ`. A point is stable when every
//! root satisfies `|r| ≤ 1` and roots on the unit circle are simple. The
//! boundary of that set is traced by `s(θ) = A(e^{-iθ}) / B(e^{-iθ})`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::methods::Family;
use crate::poly::MethodForm;

/// Roots up to this modulus count as inside the unit disk.
pub const ROOT_MODULUS_TOL: f64 = 1e-9;
/// Roots this close to the unit circle must be simple.
pub const UNIT_CIRCLE_BAND: f64 = 1e-7;
/// Minimum separation between two roots on the unit circle.
pub const SIMPLE_ROOT_SEPARATION: f64 = 1e-6;
/// Locus samples with `|B|` below this are flagged.
pub const LOCUS_SINGULAR_TOL: f64 = 1e-14;
pub const ROOT_ITERATION_CAP: usize = 500;

/// Sampled boundary locus. Flagged samples carry NaN values.
#[derive(Debug, Clone, PartialEq)]
pub struct LocusCurve {
    pub thetas: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl LocusCurve {
    pub fn is_valid(&self, i: usize) -> bool {
        self.values[i].re.is_finite() && self.values[i].im.is_finite()
    }

    /// `(θ, s(θ))` pairs, skipping flagged samples.
    pub fn valid(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.thetas
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| v.re.is_finite() && v.im.is_finite())
            .map(|(t, v)| (*t, *v))
    }

    /// Euclidean distance from `z` to the polyline through the valid samples.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let pts: Vec<Complex64> = self.valid().map(|(_, v)| v).collect();
        match pts.len() {
            0 => f64::INFINITY,
            1 => (pts[0] - z).norm(),
            _ => pts.windows(2).map(|w| segment_distance(z, w[0], w[1])).fold(f64::INFINITY, f64::min),
        }
    }
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// `n_samples` uniform angles covering `[-π, π]` inclusive.
pub fn theta_grid(n_samples: usize) -> Vec<f64> {
    (0..n_samples).map(|i| -PI + 2.0 * PI * i as f64 / (n_samples - 1) as f64).collect()
}

/// Boundary locus of a method form.
pub fn locus(form: &MethodForm, n_samples: usize) -> Result<LocusCurve> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n_samples}")));
    }
    if form.b_poly.is_zero() {
        return Err(Error::InvalidArgument("B polynomial is identically zero".into()));
    }
    let thetas = theta_grid(n_samples);
    let values = thetas
        .iter()
        .map(|&th| {
            let u = Complex64::from_polar(1.0, -th);
            let b = form.b_poly.eval(u);
            if b.norm() < LOCUS_SINGULAR_TOL {
                Complex64::new(f64::NAN, f64::NAN)
            } else {
                form.a_poly.eval(u) / b
            }
        })
        .collect();
    Ok(LocusCurve { thetas, values })
}

/// The printed closed-form locus of AB, HB-on-PLMS and GHVB (orders 1–4),
/// evaluated directly from its formula.
pub fn closed_form_locus(family: Family, order: usize, beta: f64, theta: f64) -> Result<Complex64> {
    let e = |k: f64| Complex64::from_polar(1.0, -k * theta);
    let one = Complex64::new(1.0, 0.0);
    let delta = one - e(1.0);
    let damped = one - e(1.0) * (1.0 - beta);
    let ab_den = |order: usize| -> Option<(f64, Complex64)> {
        Some(match order {
            1 => (1.0, e(1.0)),
            2 => (2.0, e(1.0) * 3.0 - e(2.0)),
            3 => (12.0, e(1.0) * 23.0 - e(2.0) * 16.0 + e(3.0) * 5.0),
            4 => (24.0, e(1.0) * 55.0 - e(2.0) * 59.0 + e(3.0) * 37.0 - e(4.0) * 9.0),
            _ => return None,
        })
    };
    let unsupported = Error::NoClosedForm { family: family.name(), order };
    match family {
        Family::Ab => {
            let (k, den) = ab_den(order).ok_or(unsupported)?;
            Ok(delta * k / den)
        }
        Family::HeavyBall => {
            let (k, den) = ab_den(order).ok_or(unsupported)?;
            Ok(delta * damped * k / (den * beta))
        }
        Family::Ghvb => {
            let b = beta;
            let (k, den) = match order {
                1 => (1.0, e(1.0) * b),
                2 => (2.0, e(1.0) * (2.0 + b) - e(2.0) * (2.0 - b)),
                3 => (12.0, e(1.0) * (18.0 + 5.0 * b) - e(2.0) * (24.0 - 8.0 * b) + e(3.0) * (6.0 - b)),
                4 => (
                    24.0,
                    e(1.0) * (46.0 + 9.0 * b) - e(2.0) * (78.0 - 19.0 * b) + e(3.0) * (42.0 - 5.0 * b)
                        - e(4.0) * (10.0 - b),
                ),
                _ => return Err(unsupported),
            };
            Ok(delta * damped * k / den)
        }
        _ => Err(unsupported),
    }
}

/// Complex roots of a polynomial with their residuals `|p(root)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub residuals: Vec<f64>,
}

impl RootSet {
    pub fn max_modulus(&self) -> f64 {
        self.roots.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }
}

/// Roots of `c_0 + c_1 r + ... + c_n r^n` (ascending, real coefficients).
pub fn find_roots(coeffs: &[f64]) -> Result<RootSet> {
    let c: Vec<Complex64> = coeffs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    find_complex_roots(&c)
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k)
}

/// Value and derivative together.
fn horner2(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    c.iter().rev().fold((zero, zero), |(p, dp), &k| (p * z + k, dp * z + p))
}

/// Roots of a polynomial with complex coefficients (ascending order) by
/// Aberth–Ehrlich simultaneous iteration from a fixed circle of starting points.
pub fn find_complex_roots(coeffs: &[Complex64]) -> Result<RootSet> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while matches!(c.last(), Some(v) if v.norm() < crate::poly::NORMALIZE_EPS) {
        c.pop();
    }
    if c.len() < 2 {
        return Err(if c.is_empty() {
            Error::DegeneratePolynomial
        } else {
            Error::InvalidArgument("polynomial has degree 0".into())
        });
    }
    let scale = c.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let tol = 1e-10 * scale;

    // exact zero roots
    let zeros = c.iter().take_while(|v| v.norm() == 0.0).count();
    let reduced = &c[zeros..];
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];

    let n = reduced.len() - 1;
    if n > 0 {
        let lead = reduced[n];
        let monic: Vec<Complex64> = reduced.iter().map(|v| v / lead).collect();
        let cauchy = 1.0 + monic[..n].iter().map(|v| v.norm()).fold(0.0, f64::max);
        let radius = monic[0].norm().powf(1.0 / n as f64).clamp(1e-3, cauchy);
        let mut z: Vec<Complex64> =
            (0..n).map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64 + 0.4)).collect();

        let mut converged = false;
        for _ in 0..ROOT_ITERATION_CAP {
            let mut max_step = 0.0f64;
            for i in 0..n {
                let (p, dp) = horner2(&monic, z[i]);
                if p.norm() == 0.0 {
                    continue;
                }
                let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
                let ratio = p / dp;
                let mut step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if !step.re.is_finite() || !step.im.is_finite() {
                    // flat spot: nudge deterministically
                    step = Complex64::new(1e-8 * (1.0 + z[i].norm()), 1e-8);
                }
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
            if max_step < 1e-15 {
                converged = true;
                break;
            }
        }
        let residuals: Vec<f64> = z.iter().map(|r| horner(&c, *r).norm()).collect();
        if !converged && residuals.iter().any(|r| *r > tol) {
            let worst = residuals.iter().copied().fold(0.0, f64::max);
            return Err(Error::RootsNotConverged { iterations: ROOT_ITERATION_CAP, worst_residual: worst, residuals });
        }
        roots.extend(z);
    }
    let residuals: Vec<f64> = roots.iter().map(|r| horner(&c, *r).norm()).collect();
    if let Some(worst) = residuals.iter().copied().filter(|r| *r > tol).reduce(f64::max) {
        return Err(Error::RootsNotConverged { iterations: ROOT_ITERATION_CAP, worst_residual: worst, residuals });
    }
    Ok(RootSet { roots, residuals })
}

/// Root-condition verdict at one point `z = δλ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub max_root_modulus: f64,
    pub boundary: bool,
}

/// Coefficients (ascending in `r`) of `r^s (A(1/r) - z B(1/r))`.
pub fn characteristic_polynomial(form: &MethodForm, z: Complex64) -> Vec<Complex64> {
    let s = form.steps();
    (0..=s)
        .map(|j| {
            let k = s - j;
            Complex64::new(form.a_poly.coeff(k), 0.0) - z * form.b_poly.coeff(k)
        })
        .collect()
}

pub fn is_stable(form: &MethodForm, z: Complex64) -> Result<StabilityVerdict> {
    let poly = characteristic_polynomial(form, z);
    if poly.iter().all(|c| c.norm() < crate::poly::NORMALIZE_EPS) {
        return Err(Error::DegeneratePolynomial);
    }
    let roots = match find_complex_roots(&poly) {
        Ok(r) => r.roots,
        Err(Error::InvalidArgument(_)) => Vec::new(), // constant: no characteristic roots
        Err(e) => return Err(e),
    };
    let max_root_modulus = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let on_circle: Vec<Complex64> =
        roots.iter().copied().filter(|r| (r.norm() - 1.0).abs() <= UNIT_CIRCLE_BAND).collect();
    let simple = on_circle
        .iter()
        .enumerate()
        .all(|(i, a)| on_circle[i + 1..].iter().all(|b| (a - b).norm() > SIMPLE_ROOT_SEPARATION));
    Ok(StabilityVerdict {
        stable: max_root_modulus <= 1.0 + ROOT_MODULUS_TOL && simple,
        max_root_modulus,
        boundary: (max_root_modulus - 1.0).abs() <= UNIT_CIRCLE_BAND,
    })
}

/// Row-major grid of stability verdicts. Row `i` has imaginary part
/// `im[i]`, column `j` real part `re[j]`, both ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRaster {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub cells: Vec<bool>,
}

impl StabilityRaster {
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.re.len() + col]
    }

    pub fn point(&self, row: usize, col: usize) -> Complex64 {
        Complex64::new(self.re[col], self.im[row])
    }

    pub fn stable_fraction(&self) -> f64 {
        self.cells.iter().filter(|c| **c).count() as f64 / self.cells.len() as f64
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Evaluate [`is_stable`] on a `resolution.0 × resolution.1` (re × im) grid.
pub fn stability_raster(
    form: &MethodForm,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<StabilityRaster> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("resolution {nx}x{ny} below 2x2")));
    }
    if !(re_range.0 < re_range.1) || !(im_range.0 < im_range.1) {
        return Err(Error::InvalidArgument("degenerate raster range".into()));
    }
    let re = linspace(re_range.0, re_range.1, nx);
    let im = linspace(im_range.0, im_range.1, ny);
    let rows: Vec<Result<Vec<bool>>> = crate::with_thread_pool(|| {
        im.par_iter()
            .map(|&y| re.iter().map(|&x| is_stable(form, Complex64::new(x, y)).map(|v| v.stable)).collect())
            .collect()
    });
    let mut cells = Vec::with_capacity(nx * ny);
    for row in rows {
        cells.extend(row?);
    }
    Ok(StabilityRaster { re, im, cells })
}
