//! Shift-operator polynomials and the `(A, B)` form of a linear multistep method.
//!
//! A method is written as `A(E) x_n = δ B(E) f(x_n)` where `E x_k = x_{k-1}`.
//! Both polynomials carry real coefficients in ascending powers of `E`.

use std::ops::{Add, Mul};

use num_complex::Complex64;

/// Coefficients below this magnitude at the top of a polynomial are dropped.
pub const NORMALIZE_EPS: f64 = 1e-15;

/// Tolerance for `A(1) = 0`.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// `c_0 + c_1 E + ... + c_s E^s` with real coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShiftPolynomial {
    coeffs: Vec<f64>,
}

impl ShiftPolynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut p = Self { coeffs: coeffs.into() };
        p.normalize();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// The monomial `c E^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    fn normalize(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.abs() < NORMALIZE_EPS) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `E^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect::<Vec<_>>())
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, u: Complex64) -> Complex64 {
        eval_shift_poly(&self.coeffs, u)
    }

    pub fn eval_real(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }
}

/// Horner evaluation of `Σ c_k u^k` in complex arithmetic.
pub fn eval_shift_poly(coeffs: &[f64], u: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
}

impl Add for &ShiftPolynomial {
    type Output = ShiftPolynomial;

    fn add(self, rhs: Self) -> ShiftPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ShiftPolynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect::<Vec<_>>())
    }
}

impl Mul for &ShiftPolynomial {
    type Output = ShiftPolynomial;

    fn mul(self, rhs: Self) -> ShiftPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return ShiftPolynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ShiftPolynomial::new(out)
    }
}

/// The `(A, B)` pair of a method, with the damping it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodForm {
    pub name: String,
    pub beta: f64,
    pub a_poly: ShiftPolynomial,
    pub b_poly: ShiftPolynomial,
}

impl MethodForm {
    pub fn new(name: impl Into<String>, beta: f64, a_poly: ShiftPolynomial, b_poly: ShiftPolynomial) -> Self {
        Self { name: name.into(), beta, a_poly, b_poly }
    }

    /// Number of past levels the recurrence reaches back.
    pub fn steps(&self) -> usize {
        self.a_poly.degree().unwrap_or(0).max(self.b_poly.degree().unwrap_or(0))
    }

    /// True when `B` has no `E^0` term, i.e. only past evaluations are used.
    pub fn is_explicit(&self) -> bool {
        self.b_poly.coeff(0).abs() < NORMALIZE_EPS
    }
}

/// `|A(1)| ≤ 1e-12`.
pub fn check_consistency(form: &MethodForm) -> bool {
    form.a_poly.eval_real(1.0).abs() <= CONSISTENCY_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn euler_a_vanishes_at_one() {
        let p = ShiftPolynomial::new([1.0, -1.0]);
        assert_eq!(p.eval(Complex64::new(1.0, 0.0)), Complex64::new(0.0, 0.0));
        assert_eq!(p.eval(Complex64::new(-1.0, 0.0)), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn ab2_b_at_minus_one() {
        let p = ShiftPolynomial::new([0.0, 1.5, -0.5]);
        let u = Complex64::from_polar(1.0, -PI);
        let v = p.eval(u);
        assert!((v - Complex64::new(-2.0, 0.0)).norm() < 1e-14, "{v}");
    }

    #[test]
    fn normalization_strips_trailing_zeros() {
        let p = ShiftPolynomial::new([1.0, 2.0, 0.0, 1e-17]);
        assert_eq!(p.degree(), Some(1));
        assert!(ShiftPolynomial::new([0.0, 0.0]).is_zero());
        assert_eq!(ShiftPolynomial::zero().degree(), None);
    }

    #[test]
    fn product_of_linear_factors() {
        let a = ShiftPolynomial::new([1.0, -1.0]);
        let b = ShiftPolynomial::new([1.0, -0.7]);
        assert_eq!((&a * &b).coeffs(), &[1.0, -1.7, 0.7]);
    }

    #[test]
    fn consistency_examples() {
        let euler = MethodForm::new("euler", 1.0, ShiftPolynomial::new([1.0, -1.0]), ShiftPolynomial::new([0.0, 1.0]));
        assert!(check_consistency(&euler));

        let bad = MethodForm::new("bad", 1.0, ShiftPolynomial::new([1.0, -0.5]), ShiftPolynomial::new([0.0, 1.0]));
        assert!(!check_consistency(&bad));

        // (1 - E)(1 - 0.7E), the left side of GHVB order 2 at beta = 0.3
        let a = &ShiftPolynomial::new([1.0, -1.0]) * &ShiftPolynomial::new([1.0, -0.7]);
        let ghvb = MethodForm::new("ghvb", 0.3, a, ShiftPolynomial::new([0.0, 1.15, -0.85]));
        assert!(check_consistency(&ghvb));
    }

    fn naive(coeffs: &[f64], u: Complex64) -> Complex64 {
        coeffs.iter().enumerate().map(|(k, &c)| u.powu(k as u32) * c).sum()
    }

    proptest! {
        #[test]
        fn horner_matches_power_sum(
            coeffs in prop::collection::vec(-10.0f64..10.0, 1..=9),
            r in 0.0f64..2.0,
            theta in -PI..PI,
        ) {
            let u = Complex64::from_polar(r, theta);
            let h = eval_shift_poly(&coeffs, u);
            let n = naive(&coeffs, u);
            let scale: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * r.powi(k as i32))
                .sum::<f64>()
                .max(f64::MIN_POSITIVE);
            prop_assert!((h - n).norm() <= 1e-14 * scale,
                "horner {h} naive {n}");
        }
    }
}
