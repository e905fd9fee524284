//! Adams–Bashforth steppers and their momentum variants.
//!
//! Every stepper shares the same warm-up: at step `n` (counted from zero) the
//! effective order is `min(order, n + 1)`, and velocities are seeded with the
//! first evaluation so the very first step is always one Euler step.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::poly::{MethodForm, ShiftPolynomial};

/// State norm above which a trajectory is flagged diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

pub const MAX_ORDER: usize = 5;

/// Adams–Bashforth numerators, newest evaluation first, and their denominators.
const AB_NUM: [&[f64]; MAX_ORDER] =
    [&[1.0], &[3.0, -1.0], &[23.0, -16.0, 5.0], &[55.0, -59.0, 37.0, -9.0], &[1901.0, -2774.0, 2616.0, -1274.0, 251.0]];
const AB_DEN: [f64; MAX_ORDER] = [1.0, 2.0, 12.0, 24.0, 720.0];

/// Classical AB weights of order `order`, newest evaluation first.
pub fn ab_coefficients(order: usize) -> Vec<f64> {
    let i = order - 1;
    AB_NUM[i].iter().map(|c| c / AB_DEN[i]).collect()
}

/// GHVB numerators (newest velocity first) and the common denominator
/// (before the extra `1/β`), for `order` in 1..=5.
pub fn ghvb_numerators(order: usize, beta: f64) -> (Vec<f64>, f64) {
    let b = beta;
    match order {
        1 => (vec![b], 1.0),
        2 => (vec![2.0 + b, -(2.0 - b)], 2.0),
        3 => (vec![18.0 + 5.0 * b, -(24.0 - 8.0 * b), 6.0 - b], 12.0),
        4 => (vec![46.0 + 9.0 * b, -(78.0 - 19.0 * b), 42.0 - 5.0 * b, -(10.0 - b)], 24.0),
        5 => (
            vec![
                1650.0 + 251.0 * b,
                -(3420.0 - 646.0 * b),
                2880.0 - 264.0 * b,
                -(1380.0 - 106.0 * b),
                270.0 - 19.0 * b,
            ],
            720.0,
        ),
        _ => panic!("ghvb order {order} out of range"),
    }
}

/// Solver family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Adams–Bashforth / PLMS.
    Ab,
    /// AB with heavy-ball momentum on the combined evaluation.
    HeavyBall,
    /// Generalized heavy ball.
    Ghvb,
    Nesterov,
    Aggregated,
    /// Direct interpolation between AB(order-1) and AB(order).
    InterpAb,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ab => "ab",
            Family::HeavyBall => "hb",
            Family::Ghvb => "ghvb",
            Family::Nesterov => "nesterov",
            Family::Aggregated => "aggregated",
            Family::InterpAb => "interp",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Aggregated-momentum parameters: one damping coefficient and weight per velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub betas: Vec<f64>,
    pub weights: Vec<f64>,
}

/// A fully specified solver instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub family: Family,
    pub order: usize,
    pub beta: f64,
    pub momentum_number: Option<f64>,
    pub aggregate: Option<Aggregate>,
}

impl MethodSpec {
    fn plain(family: Family, order: usize, beta: f64) -> Self {
        Self { family, order, beta, momentum_number: None, aggregate: None }
    }

    pub fn ab(order: usize) -> Self {
        Self::plain(Family::Ab, order, 1.0)
    }

    pub fn euler() -> Self {
        Self::ab(1)
    }

    pub fn heavy_ball(order: usize, beta: f64) -> Self {
        Self::plain(Family::HeavyBall, order, beta)
    }

    pub fn nesterov(order: usize, beta: f64) -> Self {
        Self::plain(Family::Nesterov, order, beta)
    }

    pub fn interp_ab(order: usize, beta: f64) -> Self {
        Self::plain(Family::InterpAb, order, beta)
    }

    /// GHVB of the given order and damping; the momentum number is derived.
    pub fn ghvb(order: usize, beta: f64) -> Self {
        let mut s = Self::plain(Family::Ghvb, order, beta);
        s.momentum_number = Some(order as f64 - 1.0 + beta);
        s
    }

    /// GHVB from its momentum number `m`: order `⌈m⌉`, `β = m - ⌈m⌉ + 1`.
    pub fn ghvb_momentum(m: f64) -> Result<Self> {
        if !(m > 0.0 && m <= MAX_ORDER as f64) {
            return Err(Error::InvalidMomentum(m));
        }
        let order = m.ceil() as usize;
        let beta = m - (order as f64 - 1.0);
        let mut s = Self::plain(Family::Ghvb, order, beta);
        s.momentum_number = Some(m);
        Ok(s)
    }

    pub fn aggregated(base_order: usize, betas: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut s = Self::plain(Family::Aggregated, base_order, 1.0);
        s.aggregate = Some(Aggregate { betas, weights });
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_ORDER).contains(&self.order) {
            return Err(Error::UnsupportedOrder(self.order));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidBeta(self.beta));
        }
        match self.family {
            Family::Ghvb => {
                if let Some(m) = self.momentum_number {
                    let order = m.ceil() as usize;
                    let beta = m - (order as f64 - 1.0);
                    if order != self.order || (beta - self.beta).abs() > 1e-12 {
                        return Err(Error::InvalidMomentum(m));
                    }
                }
            }
            Family::InterpAb if self.order < 2 => {
                return Err(Error::UnsupportedOrder(self.order));
            }
            Family::Aggregated => {
                let agg = self
                    .aggregate
                    .as_ref()
                    .ok_or_else(|| Error::InvalidAggregate("missing betas and weights".into()))?;
                if agg.betas.is_empty() || agg.betas.len() != agg.weights.len() {
                    return Err(Error::InvalidAggregate(format!(
                        "{} betas vs {} weights",
                        agg.betas.len(),
                        agg.weights.len()
                    )));
                }
                if let Some(b) = agg.betas.iter().find(|b| !(**b > 0.0 && **b <= 1.0)) {
                    return Err(Error::InvalidBeta(*b));
                }
                let total: f64 = agg.weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidAggregate(format!("weights sum to {total}")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Short human-readable label such as `ghvb1.8` or `hb2@0.8`.
    pub fn label(&self) -> String {
        match self.family {
            Family::Ab => format!("ab{}", self.order),
            Family::Ghvb => format!("ghvb{}", self.order as f64 - 1.0 + self.beta),
            Family::Aggregated => format!("aggregated{}", self.order),
            f => format!("{}{}@{}", f.name(), self.order, self.beta),
        }
    }
}

/// A right-hand side `f(x, t)`.
pub trait VectorField {
    fn eval(&self, x: &[f64], t: f64) -> Vec<f64>;
}

impl<F> VectorField for F
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        self(x, t)
    }
}

/// Mutable part of a stepper.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepperState {
    pub step_index: usize,
    /// Newest first. Past evaluations for AB-based families, past velocities for GHVB.
    pub history: VecDeque<Vec<f64>>,
    /// `v_n` for HB/GHVB, `y_n` for Nesterov.
    pub velocity: Option<Vec<f64>>,
    pub agg_velocities: Vec<Vec<f64>>,
}

/// A method instance that advances a state one step at a time.
#[derive(Debug, Clone)]
pub struct Stepper {
    spec: MethodSpec,
    state: StepperState,
    diverged: bool,
}

pub fn make_method(spec: &MethodSpec) -> Result<Stepper> {
    spec.validate()?;
    Ok(Stepper { spec: spec.clone(), state: StepperState::default(), diverged: false })
}

pub fn make_aggregated(agg_betas: &[f64], agg_weights: &[f64], base_order: usize) -> Result<Stepper> {
    make_method(&MethodSpec::aggregated(base_order, agg_betas.to_vec(), agg_weights.to_vec()))
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `(Σ num_i h_i) / den` with `h` newest first.
fn combine<'a>(num: &[f64], den: f64, history: impl Iterator<Item = &'a Vec<f64>>, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    for (c, h) in num.iter().zip(history) {
        axpy(&mut acc, *c, h);
    }
    acc.iter_mut().for_each(|a| *a /= den);
    acc
}

fn ema(v: &mut [f64], beta: f64, target: &[f64]) {
    for (vi, ti) in v.iter_mut().zip(target) {
        *vi = (1.0 - beta) * *vi + beta * ti;
    }
}

impl Stepper {
    pub fn spec(&self) -> &MethodSpec {
        &self.spec
    }

    pub fn state(&self) -> &StepperState {
        &self.state
    }

    /// True once any field evaluation or produced state was non-finite.
    pub fn diverged(&self) -> bool {
        self.diverged
    }

    pub fn reset(&mut self) {
        self.state = StepperState::default();
        self.diverged = false;
    }

    fn effective_order(&self) -> usize {
        self.spec.order.min(self.state.step_index + 1)
    }

    fn push_history(&mut self, item: Vec<f64>) {
        self.state.history.push_front(item);
        self.state.history.truncate(self.spec.order);
    }

    /// AB combination of the evaluation buffer at effective order `c`.
    fn ab_combined(&self, c: usize, dim: usize) -> Vec<f64> {
        combine(AB_NUM[c - 1], AB_DEN[c - 1], self.state.history.iter(), dim)
    }

    /// Advance `x` (at time `t`) by one step of size `delta`.
    pub fn step(&mut self, field: &dyn VectorField, t: f64, delta: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(delta.is_finite() && delta != 0.0) {
            return Err(Error::InvalidStep(delta));
        }
        let dim = x.len();
        if let Some(h) = self.state.history.front() {
            if h.len() != dim {
                return Err(Error::DimensionMismatch { expected: h.len(), got: dim });
            }
        }
        let f = field.eval(x, t);
        if f.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: f.len() });
        }
        if f.iter().any(|v| !v.is_finite()) {
            self.diverged = true;
        }

        let c = self.effective_order();
        let beta = self.spec.beta;
        let mut next = x.to_vec();

        match self.spec.family {
            Family::Ab => {
                self.push_history(f);
                let e = self.ab_combined(c, dim);
                axpy(&mut next, delta, &e);
            }
            Family::HeavyBall => {
                self.push_history(f);
                let e = self.ab_combined(c, dim);
                let v = self.state.velocity.get_or_insert_with(|| e.clone());
                ema(v, beta, &e);
                axpy(&mut next, delta, v);
            }
            Family::Ghvb => {
                let mut v = self.state.velocity.take().unwrap_or_else(|| f.clone());
                ema(&mut v, beta, &f);
                self.state.velocity = Some(v.clone());
                self.push_history(v);
                let e = if c == 1 {
                    self.state.history[0].clone()
                } else {
                    let (num, den) = ghvb_numerators(c, beta);
                    combine(&num, den * beta, self.state.history.iter(), dim)
                };
                axpy(&mut next, delta, &e);
            }
            Family::Nesterov => {
                self.push_history(f);
                let e = self.ab_combined(c, dim);
                let mut y_new = x.to_vec();
                axpy(&mut y_new, delta * beta, &e);
                let y_prev = self.state.velocity.take().unwrap_or_else(|| {
                    let mut y0 = y_new.clone();
                    axpy(&mut y0, -delta, &e);
                    y0
                });
                next = y_new.clone();
                for ((n, yn), yp) in next.iter_mut().zip(&y_new).zip(&y_prev) {
                    *n += (1.0 - beta) * (yn - yp);
                }
                self.state.velocity = Some(y_new);
            }
            Family::Aggregated => {
                self.push_history(f);
                let e = self.ab_combined(c, dim);
                let agg = self.spec.aggregate.as_ref().expect("validated");
                if self.state.agg_velocities.is_empty() {
                    self.state.agg_velocities = vec![e.clone(); agg.betas.len()];
                }
                for ((v, b), w) in self.state.agg_velocities.iter_mut().zip(&agg.betas).zip(&agg.weights) {
                    ema(v, *b, &e);
                    axpy(&mut next, delta * w, v);
                }
            }
            Family::InterpAb => {
                self.push_history(f);
                let r = self.spec.order;
                let e = if c < r {
                    self.ab_combined(c, dim)
                } else {
                    let lo = self.ab_combined(r - 1, dim);
                    let hi = self.ab_combined(r, dim);
                    lo.iter().zip(&hi).map(|(l, h)| (1.0 - beta) * l + beta * h).collect()
                };
                axpy(&mut next, delta, &e);
            }
        }

        self.state.step_index += 1;
        if next.iter().any(|v| !v.is_finite()) {
            self.diverged = true;
        }
        Ok(next)
    }
}

/// A recorded solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Largest Euclidean state norm along the trajectory.
    pub fn max_norm(&self) -> f64 {
        self.states.iter().map(|s| norm(s)).fold(0.0, f64::max)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn blown_up(x: &[f64]) -> bool {
    let n = norm(x);
    !n.is_finite() || n > DIVERGENCE_THRESHOLD
}

/// Initial value problem data consumed by [`integrate`].
pub trait InitialValueProblem: VectorField {
    fn interval(&self) -> (f64, f64);
    fn initial_state(&self) -> &[f64];
}

/// Integrate with `n_steps` uniform steps over the problem interval.
pub fn integrate<P: InitialValueProblem + ?Sized>(
    spec: &MethodSpec,
    problem: &P,
    n_steps: usize,
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    let (t0, t1) = problem.interval();
    if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
        return Err(Error::InvalidArgument(format!("degenerate interval [{t0}, {t1}]")));
    }
    let times: Vec<f64> = (0..=n_steps).map(|i| t0 + (t1 - t0) * i as f64 / n_steps as f64).collect();
    integrate_on_grid(spec, problem, problem.initial_state(), &times)
}

/// Integrate along an arbitrary time grid (one step per consecutive pair).
pub fn integrate_on_grid(
    spec: &MethodSpec,
    field: &(impl VectorField + ?Sized),
    x0: &[f64],
    times: &[f64],
) -> Result<Trajectory> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument("time grid needs at least two points".into()));
    }
    if x0.is_empty() {
        return Err(Error::InvalidArgument("state must have at least one component".into()));
    }
    let field: &dyn VectorField = &FieldRef(field);
    let mut stepper = make_method(spec)?;
    let mut states = Vec::with_capacity(times.len());
    states.push(x0.to_vec());
    let mut diverged = blown_up(x0);
    for w in times.windows(2) {
        let x = states.last().expect("non-empty");
        let next = stepper.step(field, w[0], w[1] - w[0], x)?;
        diverged |= blown_up(&next);
        states.push(next);
    }
    Ok(Trajectory { times: times.to_vec(), states, diverged: diverged || stepper.diverged() })
}

struct FieldRef<'a, F: ?Sized>(&'a F);

impl<F: VectorField + ?Sized> VectorField for FieldRef<'_, F> {
    fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.0.eval(x, t)
    }
}

fn one_minus_e() -> ShiftPolynomial {
    ShiftPolynomial::new([1.0, -1.0])
}

/// `(1 - E)(1 - (1-β)E)`, the left side shared by every heavy-ball variant.
fn momentum_a(beta: f64) -> ShiftPolynomial {
    &one_minus_e() * &ShiftPolynomial::new([1.0, -(1.0 - beta)])
}

/// `B(E)` of AB order `r`: past evaluations only, so the `E^0` term is zero.
fn ab_b(order: usize) -> ShiftPolynomial {
    let mut c = vec![0.0];
    c.extend(ab_coefficients(order));
    ShiftPolynomial::new(c)
}

/// The `(A, B)` pair whose recurrence the stepper follows after warm-up.
pub fn linear_multistep_form(spec: &MethodSpec) -> Result<MethodForm> {
    spec.validate()?;
    let r = spec.order;
    let beta = spec.beta;
    let (a, b) = match spec.family {
        Family::Ab => (one_minus_e(), ab_b(r)),
        Family::HeavyBall => (momentum_a(beta), ab_b(r).scale(beta)),
        Family::Ghvb => {
            let (num, den) = ghvb_numerators(r, beta);
            let mut c = vec![0.0];
            c.extend(num.iter().map(|n| n / den));
            (momentum_a(beta), ShiftPolynomial::new(c))
        }
        Family::Nesterov => {
            // D_n - (1-β)D_{n-1} = δβ[(2-β)ê_n - (1-β)ê_{n-1}] with D_n = x_{n+1} - x_n
            let tail = ShiftPolynomial::new([2.0 - beta, -(1.0 - beta)]);
            (momentum_a(beta), (&ab_b(r) * &tail).scale(beta))
        }
        Family::InterpAb => {
            let b = &ab_b(r - 1).scale(1.0 - beta) + &ab_b(r).scale(beta);
            (one_minus_e(), b)
        }
        Family::Aggregated => return Err(Error::NoLinearForm("aggregated momentum")),
    };
    Ok(MethodForm::new(spec.label(), beta, a, b))
}

/// Run the recurrence `A(E)x_n = δB(E)f(x_n)` directly from given starting
/// states `x_0..x_{k-1}` (k at least the form's step count), producing
/// `n_total + 1` states on the uniform grid `t0 + iδ`.
pub fn simulate_form(
    form: &MethodForm,
    field: &dyn VectorField,
    start: &[Vec<f64>],
    t0: f64,
    delta: f64,
    n_total: usize,
) -> Result<Vec<Vec<f64>>> {
    let s = form.steps();
    if start.len() < s.max(1) {
        return Err(Error::InvalidArgument(format!("need at least {} starting states, got {}", s.max(1), start.len())));
    }
    if !form.is_explicit() {
        return Err(Error::InvalidArgument("implicit forms are not supported".into()));
    }
    let a0 = form.a_poly.coeff(0);
    let dim = start[0].len();
    let mut xs: Vec<Vec<f64>> = start.iter().take(n_total + 1).cloned().collect();
    let mut fs: Vec<Vec<f64>> = xs.iter().enumerate().map(|(i, x)| field.eval(x, t0 + i as f64 * delta)).collect();
    while xs.len() <= n_total {
        let n1 = xs.len();
        let mut next = vec![0.0; dim];
        for m in 1..=s {
            let (am, bm) = (form.a_poly.coeff(m), form.b_poly.coeff(m));
            axpy(&mut next, -am, &xs[n1 - m]);
            axpy(&mut next, delta * bm, &fs[n1 - m]);
        }
        next.iter_mut().for_each(|v| *v /= a0);
        fs.push(field.eval(&next, t0 + n1 as f64 * delta));
        xs.push(next);
    }
    Ok(xs)
}
