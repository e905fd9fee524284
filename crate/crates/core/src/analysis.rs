//! Order of convergence (formal and empirical), error norms and the latent
//! magnitude score.

use ndarray::{ArrayView3, Axis};

use crate::error::{Error, Result};
use crate::methods::{integrate, norm, MethodSpec, Trajectory};
use crate::poly::{check_consistency, MethodForm};
use crate::problems::Problem;

/// Order conditions are considered satisfied below this magnitude.
pub const ORDER_CONDITION_TOL: f64 = 1e-10;
pub const MAX_ORDER_CHECK: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderReport {
    pub formal_order: usize,
    /// Index of the first failing condition (0 for the consistency condition).
    pub first_violated_k: usize,
    /// `|C_k|` at `first_violated_k`.
    pub defect: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `C_k = Σ a_m m^k / k! + Σ b_m m^{k-1} / (k-1)!` with `0^0 = 1`.
pub fn order_condition(form: &MethodForm, k: usize) -> f64 {
    let s = form.steps();
    let pow = |m: usize, e: usize| if e == 0 { 1.0 } else { (m as f64).powi(e as i32) };
    if k == 0 {
        return (0..=s).map(|m| form.a_poly.coeff(m)).sum();
    }
    let a: f64 = (0..=s).map(|m| form.a_poly.coeff(m) * pow(m, k)).sum::<f64>() / factorial(k);
    let b: f64 = (0..=s).map(|m| form.b_poly.coeff(m) * pow(m, k - 1)).sum::<f64>() / factorial(k - 1);
    a + b
}

/// Largest `p ≤ max_k` such that the order conditions hold for `k = 1..=p`.
pub fn formal_order(form: &MethodForm, max_k: usize) -> Result<OrderReport> {
    if max_k > MAX_ORDER_CHECK {
        return Err(Error::InvalidArgument(format!("max_k {max_k} exceeds {MAX_ORDER_CHECK}")));
    }
    if !check_consistency(form) {
        return Ok(OrderReport { formal_order: 0, first_violated_k: 0, defect: order_condition(form, 0).abs() });
    }
    for k in 1..=max_k {
        let c = order_condition(form, k);
        if c.abs() > ORDER_CONDITION_TOL {
            return Ok(OrderReport { formal_order: k - 1, first_violated_k: k, defect: c.abs() });
        }
    }
    Ok(OrderReport { formal_order: max_k, first_violated_k: max_k + 1, defect: order_condition(form, max_k + 1).abs() })
}

/// `q_i = log(e_{i+1}/e_i) / log(δ_{i+1}/δ_i)` for each consecutive pair.
pub fn empirical_order(errors: &[f64], deltas: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != deltas.len() || errors.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need equal-length sequences of at least 2 (got {} errors, {} deltas)",
            errors.len(),
            deltas.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!("error {e} is not a positive finite number")));
    }
    if deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("deltas must be positive and strictly decreasing".into()));
    }
    Ok(errors.windows(2).zip(deltas.windows(2)).map(|(e, d)| (e[1] / e[0]).ln() / (d[1] / d[0]).ln()).collect())
}

/// What a trajectory is compared against.
#[derive(Clone, Copy)]
pub enum Reference<'a> {
    Exact(&'a dyn Fn(f64) -> Vec<f64>),
    Trajectory(&'a Trajectory),
}

/// L2 distance between final states; `+∞` for a diverged trajectory.
pub fn global_error(traj: &Trajectory, reference: Reference<'_>) -> Result<f64> {
    if traj.diverged {
        return Ok(f64::INFINITY);
    }
    let t = traj.final_time();
    let target = match reference {
        Reference::Exact(f) => f(t),
        Reference::Trajectory(r) => {
            let rt = r.final_time();
            if (rt - t).abs() > 1e-12 * t.abs().max(1.0) {
                return Err(Error::InvalidArgument(format!("final times differ: {t} vs {rt}")));
            }
            r.final_state().to_vec()
        }
    };
    let x = traj.final_state();
    if x.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), got: x.len() });
    }
    let diff: Vec<f64> = x.iter().zip(&target).map(|(a, b)| a - b).collect();
    let e = norm(&diff);
    Ok(if e.is_finite() { e } else { f64::INFINITY })
}

/// Mean of [`global_error`] over paired trajectories and references.
pub fn mean_global_error(trajs: &[Trajectory], references: &[Reference<'_>]) -> Result<f64> {
    if trajs.is_empty() || trajs.len() != references.len() {
        return Err(Error::InvalidArgument("need matching non-empty batches".into()));
    }
    let mut total = 0.0;
    for (t, r) in trajs.iter().zip(references) {
        total += global_error(t, *r)?;
    }
    Ok(total / trajs.len() as f64)
}

/// Errors and estimated orders of one method over a sequence of step counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub steps: Vec<usize>,
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

/// Integrate `problem` at each step count and estimate the order from the
/// final-time error against the exact solution.
pub fn convergence_study(spec: &MethodSpec, problem: &Problem, steps: &[usize]) -> Result<ConvergenceStudy> {
    let exact = |t: f64| problem.exact(t).expect("checked below");
    if !problem.has_exact() {
        return Err(Error::InvalidArgument(format!("{} has no exact solution", problem.label)));
    }
    let span = (problem.t1 - problem.t0).abs();
    let mut deltas = Vec::with_capacity(steps.len());
    let mut errors = Vec::with_capacity(steps.len());
    for &n in steps {
        let traj = integrate(spec, problem, n)?;
        deltas.push(span / n as f64);
        errors.push(global_error(&traj, Reference::Exact(&exact))?);
    }
    let orders = empirical_order(&errors, &deltas)?;
    Ok(ConvergenceStudy { steps: steps.to_vec(), deltas, errors, orders })
}

/// Parameters of the thresholded magnitude score.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeConfig {
    pub tau: f64,
    pub pool_k: usize,
    pub channel_means: Vec<f64>,
    pub channel_stds: Vec<f64>,
}

impl MagnitudeConfig {
    pub fn new(tau: f64, pool_k: usize, channel_means: Vec<f64>, channel_stds: Vec<f64>) -> Result<Self> {
        let cfg = Self { tau, pool_k, channel_means, channel_stds };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Zero means, unit deviations.
    pub fn standard(tau: f64, pool_k: usize, channels: usize) -> Self {
        Self { tau, pool_k, channel_means: vec![0.0; channels], channel_stds: vec![1.0; channels] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("tau {} must be non-negative", self.tau)));
        }
        if self.pool_k == 0 {
            return Err(Error::InvalidArgument("pool kernel must be at least 1".into()));
        }
        if self.channel_means.len() != self.channel_stds.len() {
            return Err(Error::DimensionMismatch { expected: self.channel_means.len(), got: self.channel_stds.len() });
        }
        if self.channel_stds.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("channel stds must be positive".into()));
        }
        Ok(())
    }
}

/// Max-pooled per-pixel magnitudes of the channel-normalized grid.
pub fn pooled_magnitudes(grid: ArrayView3<'_, f64>, cfg: &MagnitudeConfig) -> Result<ndarray::Array2<f64>> {
    cfg.validate()?;
    let (h, w, c) = grid.dim();
    if c != cfg.channel_means.len() {
        return Err(Error::DimensionMismatch { expected: cfg.channel_means.len(), got: c });
    }
    let k = cfg.pool_k;
    if h % k != 0 || w % k != 0 || h == 0 || w == 0 {
        return Err(Error::InvalidArgument(format!("grid {h}x{w} not divisible by pool kernel {k}")));
    }
    let mags = grid.map_axis(Axis(2), |z| {
        z.iter()
            .zip(&cfg.channel_means)
            .zip(&cfg.channel_stds)
            .map(|((v, m), s)| {
                let n = (v - m) / s;
                n * n
            })
            .sum::<f64>()
            .sqrt()
    });
    let pooled = ndarray::Array2::from_shape_fn((h / k, w / k), |(i, j)| {
        mags.slice(ndarray::s![i * k..(i + 1) * k, j * k..(j + 1) * k])
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    });
    Ok(pooled)
}

/// Sum of pooled magnitudes that reach `tau`.
pub fn magnitude_score(grid: ArrayView3<'_, f64>, cfg: &MagnitudeConfig) -> Result<f64> {
    let pooled = pooled_magnitudes(grid, cfg)?;
    Ok(pooled.iter().filter(|m| **m >= cfg.tau).fold(0.0, |acc, m| acc + m))
}
