//! Analytically solvable test problems.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::methods::{InitialValueProblem, VectorField};

pub type FieldFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
pub type ExactFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// An initial value problem, optionally with its exact solution.
#[derive(Clone)]
pub struct Problem {
    pub label: String,
    pub dimension: usize,
    pub t0: f64,
    pub t1: f64,
    pub x0: Vec<f64>,
    field: FieldFn,
    exact: Option<ExactFn>,
    matrix: Option<DMatrix<f64>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("label", &self.label)
            .field("dimension", &self.dimension)
            .field("t0", &self.t0)
            .field("t1", &self.t1)
            .field("x0", &self.x0)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(
        label: impl Into<String>,
        x0: Vec<f64>,
        t0: f64,
        t1: f64,
        field: FieldFn,
        exact: Option<ExactFn>,
    ) -> Self {
        Self { label: label.into(), dimension: x0.len(), t0, t1, x0, field, exact, matrix: None }
    }

    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|e| e(t))
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// The system matrix, for linear problems.
    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        self.matrix.as_ref()
    }

    pub fn with_interval(mut self, t0: f64, t1: f64) -> Self {
        self.t0 = t0;
        self.t1 = t1;
        self
    }
}

impl VectorField for Problem {
    fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.field)(x, t)
    }
}

impl InitialValueProblem for Problem {
    fn interval(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    fn initial_state(&self) -> &[f64] {
        &self.x0
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// `x' = λx` with real `λ`.
pub fn test_equation(lambda: f64, x0: f64, t0: f64, t1: f64) -> Problem {
    let field: FieldFn = Arc::new(move |x: &[f64], _t| vec![lambda * x[0]]);
    let exact: ExactFn = Arc::new(move |t| vec![x0 * (lambda * (t - t0)).exp()]);
    let mut p = Problem::new(format!("test-eq({lambda})"), vec![x0], t0, t1, field, Some(exact));
    p.matrix = Some(DMatrix::from_element(1, 1, lambda));
    p
}

/// `x' = λx` with complex `λ`, realified: the state is `(Re x, Im x)` and the
/// field is the rotation-scaling matrix `[[a, -b], [b, a]]`.
pub fn complex_test_equation(lambda: Complex64, x0: Complex64, t0: f64, t1: f64) -> Problem {
    let (a, b) = (lambda.re, lambda.im);
    let field: FieldFn = Arc::new(move |x: &[f64], _t| vec![a * x[0] - b * x[1], b * x[0] + a * x[1]]);
    let exact: ExactFn = Arc::new(move |t| {
        let z = x0 * (lambda * (t - t0)).exp();
        vec![z.re, z.im]
    });
    let mut p = Problem::new(format!("test-eq({lambda})"), vec![x0.re, x0.im], t0, t1, field, Some(exact));
    p.matrix = Some(DMatrix::from_row_slice(2, 2, &[a, -b, b, a]));
    p
}

/// The stiff 2×2 toy system with eigenvalues −9 and −1 on `[0, 3]`.
pub fn toy_2x2() -> Problem {
    let m = toy_matrix();
    let mc = m.clone();
    let field: FieldFn = Arc::new(move |x: &[f64], _t| mat_vec(&mc, x));
    let exact: ExactFn = Arc::new(|t| {
        let fast = (-9.0 * t).exp() / 8.0;
        let slow = 9.0 * (-t).exp() / 8.0;
        vec![fast - slow, -9.0 * fast + slow]
    });
    let mut p = Problem::new("toy2x2", vec![-1.0, 0.0], 0.0, 3.0, field, Some(exact));
    p.matrix = Some(m);
    p
}

pub fn toy_matrix() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -9.0, -10.0])
}

/// `x' = Mx` with exact solution from the matrix-exponential oracle.
pub fn linear_system(m: DMatrix<f64>, x0: Vec<f64>, t0: f64, t1: f64) -> Result<Problem> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    if m.nrows() != x0.len() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: x0.len() });
    }
    let mf = m.clone();
    let field: FieldFn = Arc::new(move |x: &[f64], _t| mat_vec(&mf, x));
    let me = m.clone();
    let x0v = DVector::from_vec(x0.clone());
    let exact: ExactFn = Arc::new(move |t| {
        let e = expm(&(&me * (t - t0)));
        (e * &x0v).as_slice().to_vec()
    });
    let mut p = Problem::new(format!("linear({}x{})", m.nrows(), m.ncols()), x0, t0, t1, field, Some(exact));
    p.matrix = Some(m);
    Ok(p)
}

/// Matrix exponential by scaling and squaring a truncated Taylor series.
///
/// The matrix is scaled by `2^-s` until its 1-norm is at most 1/2, the series
/// is summed until the next term falls below `1e-17` of the partial sum, and the
/// result is squared `s` times.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm1 = (0..n).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut s = 0u32;
    while norm1 / 2f64.powi(s as i32) > 0.5 {
        s += 1;
    }
    let scaled = a / 2f64.powi(s as i32);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..60 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.amax() <= 1e-17 * sum.amax() {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}
