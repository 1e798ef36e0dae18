//! Stochastic Newton-CG with curvature-gated early termination and
//! Taylor-ratio step sizing, plus first-order and line-search baselines.
//!
//! One outer step on a minibatch:
//!
//! 1. skip the batch if its gradient opposes the global gradient;
//! 2. run CG on `H_batch·Δw = −g_batch`, stopping at the first direction of
//!    negative curvature;
//! 3. remove any component of `Δw` that ascends the global loss;
//! 4. size the step so the quadratic model's relative error `η` lands in
//!    `[η̃/2, η̃]`;
//! 5. move and refresh the global gradient.

mod epoch;
mod first_order;
mod krylov;
mod screening;
mod step;

pub use epoch::{newton_epoch, newton_step, NewtonState};
pub use first_order::{adam_step, sgd_step, AdamConfig, AdamState};
pub use krylov::{krylov_solve, KrylovResult, KrylovTrace};
pub use screening::{postbatch_screen, prebatch_screen};
pub use step::{backtracking_newton_step, size_step, taylor_ratio, StepSize};

use std::fmt;

use crate::error::{Error, Result};

/// Largest backtracking exponent tried before giving up.
pub const MAX_BACKTRACK: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    TaylorRatio,
    /// Armijo backtracking: largest `τᵏ` with
    /// `f(w + γΔw) ≤ f(w) + γ·c·Δwᵀg`.
    Backtracking { c: f64, tau: f64 },
}

impl StepRule {
    pub const ARMIJO_DEFAULT: StepRule = StepRule::Backtracking { c: 0.01, tau: 0.8 };
}

/// How the Krylov loop obtains `Hp` and `pᵀHp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    ComplexStep,
    /// Real forward difference of the gradient, `(g(w + hp) − g(w))/h`.
    ForwardDifference { h: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonConfig {
    pub eta_tilde: f64,
    pub h1: f64,
    pub h2: f64,
    pub cg_max_iters: usize,
    /// Relative to `‖g_batch‖`.
    pub cg_residual_tol: f64,
    pub flat_eps: f64,
    pub flat_momentum_coef: f64,
    pub step_grow: f64,
    pub step_shrink: f64,
    pub max_step_adjust: usize,
    pub fallback_gamma: f64,
    pub warm_start: bool,
    /// Stop CG at the first negative-curvature direction. When off, the loop
    /// is plain CG and divides by whatever curvature it finds.
    pub early_termination: bool,
    /// Refresh the global gradient after every `K` accepted steps.
    pub grad_refresh_every: usize,
    pub step_rule: StepRule,
    pub derivative: DerivativeMode,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            eta_tilde: 0.05,
            h1: crate::csdd::CSDD_DEFAULT_H1,
            h2: crate::csdd::CSDD_DEFAULT_H2,
            cg_max_iters: 20,
            cg_residual_tol: 1e-2,
            flat_eps: 1e-8,
            flat_momentum_coef: 0.01,
            step_grow: 1.5,
            step_shrink: 0.5,
            max_step_adjust: 20,
            fallback_gamma: 1e-6,
            warm_start: true,
            early_termination: true,
            grad_refresh_every: 1,
            step_rule: StepRule::TaylorRatio,
            derivative: DerivativeMode::ComplexStep,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.eta_tilde > 0.0 && self.eta_tilde < 1.0) {
            return bad(format!("eta_tilde {} must lie in (0, 1)", self.eta_tilde));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0 && self.step_grow > 1.0) {
            return bad(format!(
                "need 0 < step_shrink < 1 < step_grow, got {} and {}",
                self.step_shrink, self.step_grow
            ));
        }
        for (name, v) in [
            ("h1", self.h1),
            ("h2", self.h2),
            ("flat_eps", self.flat_eps),
            ("flat_momentum_coef", self.flat_momentum_coef),
            ("fallback_gamma", self.fallback_gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.cg_residual_tol >= 0.0) {
            return bad(format!("cg_residual_tol {} must be non-negative", self.cg_residual_tol));
        }
        if self.cg_max_iters == 0 || self.max_step_adjust == 0 || self.grad_refresh_every == 0 {
            return bad("cg_max_iters, max_step_adjust and grad_refresh_every must be positive".into());
        }
        if let StepRule::Backtracking { c, tau } = self.step_rule {
            if !(c > 0.0 && c < 1.0 && tau > 0.0 && tau < 1.0) {
                return bad(format!("backtracking needs c, tau in (0, 1), got {c}, {tau}"));
            }
        }
        if let DerivativeMode::ForwardDifference { h } = self.derivative {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("forward-difference step {h} must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    ResidualSmall,
    NegativeCurvature,
    MaxIters,
    BatchSkipped,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ResidualSmall => "residual_small",
            Termination::NegativeCurvature => "negative_curvature",
            Termination::MaxIters => "max_iters",
            Termination::BatchSkipped => "batch_skipped",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Quadratic model `E_Q(γ) = γ·Δwᵀg + ½γ²·ΔwᵀHΔw` of the loss change.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EqTracker {
    pub dw_g: f64,
    pub dw_h_dw: f64,
}

impl EqTracker {
    pub fn energy(&self, gamma: f64) -> f64 {
        gamma * self.dw_g + 0.5 * gamma * gamma * self.dw_h_dw
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub gamma: f64,
    pub eta: f64,
    pub cg_iters: usize,
    pub termination: Termination,
    pub adjust_attempts: usize,
    /// Batch loss before the step.
    pub batch_loss: f64,
    /// Global loss after the step, when the global gradient was refreshed.
    pub global_loss: Option<f64>,
    /// `Δw·g_global` after post-screening.
    pub screened_dot: f64,
    /// Smallest CG divisor used.
    pub min_divisor: Option<f64>,
    /// Why a batch was skipped on a numeric failure.
    pub error: Option<String>,
}

impl StepOutcome {
    pub(crate) fn skipped(batch_loss: f64, error: Option<String>) -> Self {
        Self {
            accepted: false,
            gamma: 0.0,
            eta: 0.0,
            cg_iters: 0,
            termination: Termination::BatchSkipped,
            adjust_attempts: 0,
            batch_loss,
            global_loss: None,
            screened_dot: 0.0,
            min_divisor: None,
            error,
        }
    }
}
