//! Diffusion sampling as an ODE.
//!
//! With `σ̄ = √(1-α)/√α` and `x̄ = x/√α` the deterministic sampler becomes
//! `dx̄/dσ̄ = ε̄(x̄, σ̄)`, so any stepper from [`crate::methods`] applies. The
//! alternative coordinates `σ̃ = 1/σ̄`, `x̃ = x/√(1-α)` give
//! `dx̃/dσ̃ = x̄ - σ̄ ε̄`, the predicted clean sample.
//!
//! Noise models here are plain functions of `(x̄, σ̄)`; sampling runs from large
//! to small `σ̄`, so step sizes along the schedule are negative.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::methods::{Stepper, VectorField};

/// Noise prediction `ε̄(x̄, σ̄)`.
pub trait NoiseModel {
    fn predict(&self, x_bar: &[f64], sigma: f64) -> Vec<f64>;
}

impl<F> NoiseModel for F
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    fn predict(&self, x_bar: &[f64], sigma: f64) -> Vec<f64> {
        self(x_bar, sigma)
    }
}

pub type SharedNoise = Arc<dyn NoiseModel + Send + Sync>;

/// Discrete α schedule stored from most noised (`α_T`, index 0) to least
/// noised (`α_0`, last index).
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSchedule {
    alphas: Vec<f64>,
}

impl AlphaSchedule {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::InvalidArgument("schedule needs at least two alphas".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::InvalidAlpha(*a));
        }
        if alphas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("alphas must increase strictly toward alpha_0".into()));
        }
        Ok(Self { alphas })
    }

    /// `n_steps + 1` evenly spaced entries of the cumulative products of
    /// `1 - β_i`, `β` linear from `beta_start` to `beta_end` over `n_train`
    /// training steps. The final entry is `α_0 = 1 - β_1`.
    pub fn linear_beta(n_train: usize, beta_start: f64, beta_end: f64, n_steps: usize) -> Result<Self> {
        if n_train < 2 || n_steps == 0 || n_steps >= n_train {
            return Err(Error::InvalidArgument(format!("linear_beta: n_train {n_train}, n_steps {n_steps}")));
        }
        let mut cum = Vec::with_capacity(n_train);
        let mut acc = 1.0;
        for i in 0..n_train {
            let b = beta_start + (beta_end - beta_start) * i as f64 / (n_train - 1) as f64;
            acc *= 1.0 - b;
            cum.push(acc);
        }
        let alphas = (0..=n_steps).map(|j| cum[(n_train - 1) * (n_steps - j) / n_steps]).collect();
        Self::new(alphas)
    }

    /// Parse a JSON array of alphas.
    pub fn from_json(text: &str) -> Result<Self> {
        let alphas: Vec<f64> =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("schedule: {e}")))?;
        Self::new(alphas)
    }

    /// Largest discrete time `T`.
    pub fn max_t(&self) -> usize {
        self.alphas.len() - 1
    }

    /// `α_t` for `t` in `0..=T`.
    pub fn alpha(&self, t: usize) -> Result<f64> {
        let len = self.alphas.len();
        if t >= len {
            return Err(Error::ScheduleIndex { index: t, len });
        }
        Ok(self.alphas[len - 1 - t])
    }

    /// Stored order: most noised first.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `σ̄` at every stored entry, in sampling order (decreasing).
    pub fn sigma_bar_grid(&self) -> Vec<f64> {
        self.alphas.iter().map(|a| sigma_bar_unchecked(*a)).collect()
    }
}

fn check_alpha(alpha: f64, open_top: bool) -> Result<()> {
    let ok = alpha > 0.0 && if open_top { alpha < 1.0 } else { alpha <= 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

fn sigma_bar_unchecked(alpha: f64) -> f64 {
    (1.0 - alpha).sqrt() / alpha.sqrt()
}

/// `σ̄ = √(1-α)/√α`, for `α ∈ (0, 1]`.
pub fn sigma_bar(alpha: f64) -> Result<f64> {
    check_alpha(alpha, false)?;
    Ok(sigma_bar_unchecked(alpha))
}

/// Inverse of [`sigma_bar`]: `α = 1/(1+σ̄²)`.
pub fn alpha_from_sigma_bar(sigma: f64) -> f64 {
    1.0 / (1.0 + sigma * sigma)
}

/// `x̄ = x/√α`.
pub fn x_bar(x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha, false)?;
    let s = alpha.sqrt();
    Ok(x.iter().map(|v| v / s).collect())
}

/// `x = x̄ √α`.
pub fn x_from_bar(x_bar: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha, false)?;
    let s = alpha.sqrt();
    Ok(x_bar.iter().map(|v| v * s).collect())
}

/// `σ̃ = √α/√(1-α)`, for `α ∈ (0, 1)`.
pub fn sigma_tilde(alpha: f64) -> Result<f64> {
    check_alpha(alpha, true)?;
    Ok(alpha.sqrt() / (1.0 - alpha).sqrt())
}

/// Inverse of [`sigma_tilde`]: `α = σ̃²/(1+σ̃²)`.
pub fn alpha_from_sigma_tilde(sigma: f64) -> f64 {
    sigma * sigma / (1.0 + sigma * sigma)
}

/// `x̃ = x/√(1-α)`.
pub fn x_tilde(x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha, true)?;
    let s = (1.0 - alpha).sqrt();
    Ok(x.iter().map(|v| v / s).collect())
}

/// `x = x̃ √(1-α)`.
pub fn x_from_tilde(x_tilde: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha, true)?;
    let s = (1.0 - alpha).sqrt();
    Ok(x_tilde.iter().map(|v| v * s).collect())
}

/// One deterministic DDIM update from discrete time `t` to `t - 1`.
pub fn ddim_step(x_t: &[f64], t: usize, schedule: &AlphaSchedule, noise: &dyn NoiseModel) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(Error::ScheduleIndex { index: 0, len: schedule.alphas.len() });
    }
    let a_t = schedule.alpha(t)?;
    let a_prev = schedule.alpha(t - 1)?;
    let eps = noise.predict(&x_bar(x_t, a_t)?, sigma_bar_unchecked(a_t));
    if eps.len() != x_t.len() {
        return Err(Error::DimensionMismatch { expected: x_t.len(), got: eps.len() });
    }
    let ratio = (a_prev / a_t).sqrt();
    let (s_t, s_prev) = ((1.0 - a_t).sqrt(), (1.0 - a_prev).sqrt());
    Ok(x_t.iter().zip(&eps).map(|(x, e)| ratio * (x - s_t * e) + s_prev * e).collect())
}

/// Run DDIM from `x_T` down to `x_0`; returns all `T + 1` states.
pub fn ddim_sample(x_start: &[f64], schedule: &AlphaSchedule, noise: &dyn NoiseModel) -> Result<Vec<Vec<f64>>> {
    let mut states = vec![x_start.to_vec()];
    for t in (1..=schedule.max_t()).rev() {
        let next = ddim_step(states.last().expect("non-empty"), t, schedule, noise)?;
        states.push(next);
    }
    Ok(states)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuidanceMode {
    /// `ε̂ = ε - s g` with `g` the classifier log-likelihood gradient.
    Classifier,
    /// `ε̂ = (1-s) ε_uncond + s ε_cond`.
    ClassifierFree,
}

#[derive(Clone)]
pub struct GuidanceSpec {
    pub scale: f64,
    pub mode: GuidanceMode,
    /// Gradient for classifier guidance, unconditional model for classifier-free.
    pub auxiliary: SharedNoise,
}

/// A noise model with guidance applied.
#[derive(Clone)]
pub struct Guided {
    base: SharedNoise,
    spec: GuidanceSpec,
}

impl NoiseModel for Guided {
    fn predict(&self, x_bar: &[f64], sigma: f64) -> Vec<f64> {
        let eps = self.base.predict(x_bar, sigma);
        let aux = self.spec.auxiliary.predict(x_bar, sigma);
        let s = self.spec.scale;
        match self.spec.mode {
            GuidanceMode::Classifier => eps.iter().zip(&aux).map(|(e, g)| e - s * g).collect(),
            GuidanceMode::ClassifierFree => eps.iter().zip(&aux).map(|(c, u)| (1.0 - s) * u + s * c).collect(),
        }
    }
}

/// Compose `noise` with guidance.
pub fn guide(noise: SharedNoise, spec: GuidanceSpec) -> Guided {
    Guided { base: noise, spec }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coords {
    /// `(x̄, σ̄)`: the field is the noise prediction itself.
    Bar,
    /// `(x̃, σ̃)`: the field is the predicted clean sample.
    Tilde,
}

/// A noise model viewed as an ODE right-hand side.
pub struct NoiseField<N> {
    noise: N,
    coords: Coords,
}

pub fn ode_field_from_noise<N: NoiseModel>(noise: N, coords: Coords) -> NoiseField<N> {
    NoiseField { noise, coords }
}

impl<N: NoiseModel> VectorField for NoiseField<N> {
    fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        match self.coords {
            Coords::Bar => self.noise.predict(x, t),
            Coords::Tilde => {
                let sigma = 1.0 / t;
                let xb: Vec<f64> = x.iter().map(|v| v / t).collect();
                let eps = self.noise.predict(&xb, sigma);
                xb.iter().zip(&eps).map(|(a, e)| a - sigma * e).collect()
            }
        }
    }
}

/// `ε̄(x̄) = K x̄ + c`, dense row-major `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearNoise {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl NoiseModel for LinearNoise {
    fn predict(&self, x_bar: &[f64], _sigma: f64) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, c)| row.iter().zip(x_bar).map(|(k, x)| k * x).sum::<f64>() + c)
            .collect()
    }
}

/// Optimal noise predictor for data drawn from `N(mean, std² I)`:
/// `ε̄(x̄, σ̄) = σ̄ (x̄ - mean) / (std² + σ̄²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianData {
    pub mean: Vec<f64>,
    pub std: f64,
}

impl GaussianData {
    /// Exact flow: `x̄(σ) - mean = (x̄(σ₀) - mean) √(std² + σ²) / √(std² + σ₀²)`.
    pub fn exact_flow(&self, x_bar0: &[f64], sigma0: f64, sigma: f64) -> Vec<f64> {
        let v = self.std * self.std;
        let r = ((v + sigma * sigma) / (v + sigma0 * sigma0)).sqrt();
        x_bar0.iter().zip(&self.mean).map(|(x, m)| m + (x - m) * r).collect()
    }
}

impl NoiseModel for GaussianData {
    fn predict(&self, x_bar: &[f64], sigma: f64) -> Vec<f64> {
        let d = self.std * self.std + sigma * sigma;
        x_bar.iter().zip(&self.mean).map(|(x, m)| sigma * (x - m) / d).collect()
    }
}

/// Advance by `delta` under `field1` with `stepper1`, then by `delta` under
/// `field2` with `stepper2`.
#[allow(clippy::too_many_arguments)]
pub fn lie_trotter_step(
    x: &[f64],
    sigma: f64,
    delta: f64,
    stepper1: &mut Stepper,
    stepper2: &mut Stepper,
    field1: &dyn VectorField,
    field2: &dyn VectorField,
) -> Result<Vec<f64>> {
    let y = stepper1.step(field1, sigma, delta, x)?;
    stepper2.step(field2, sigma, delta, &y)
}
