//! Momentum-augmented linear multistep ODE solvers.
//!
//! The crate implements Adams–Bashforth (PLMS) steppers together with heavy-ball,
//! generalized heavy-ball (GHVB), Nesterov and aggregated momentum variants, and
//! the machinery used to study them: boundary-locus stability regions,
//! characteristic root conditions, formal and empirical orders of convergence,
//! and the diffusion probability-flow ODE reparameterizations these solvers are
//! applied to.

// `!(a < b)` deliberately rejects NaN alongside ordinary failures.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod diffusion;
pub mod error;
pub mod methods;
pub mod poly;
pub mod problems;
pub mod stability;

pub use error::{Error, Result};
pub use methods::{
    integrate, linear_multistep_form, make_aggregated, make_method, Family, MethodSpec, Stepper, Trajectory,
    VectorField,
};
pub use num_complex::Complex64;
pub use poly::{check_consistency, eval_shift_poly, MethodForm, ShiftPolynomial};
pub use problems::Problem;

/// Environment variable capping the worker threads used by parallel routines.
pub const THREADS_ENV: &str = "MOMENTUM_LMM_THREADS";

/// Run `f` on a rayon pool sized by [`THREADS_ENV`] (all cores when unset).
pub(crate) fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|n| *n > 0);
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
